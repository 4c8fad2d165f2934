#pragma once

#include <optional>
#include <string>

#include "meshprot/network.hpp"
#include "meshprot/phasor.hpp"
#include "meshprot/signals.hpp"

namespace meshprot {

enum class Direction { Forward, Reverse };

/// Fault type signal f_t.
enum class FaultCode { AB, BC, CA, ABG, BCG, CAG, AG, BG, CG, ABC };

enum class PsSource { CurrentPS, VoltagePS, Balanced3PH };

struct FaultTypeSignal {
    FaultCode value;
    PsSource source;
};

enum class FaultLoop { AB, BC, CA, AG, BG, CG };

enum class ElementKind { Ground, TwoPhase, ThreePhase };

enum class Polarization { Faulted, CrossHealthy, Memory };

struct LoopMeasurement {
    FaultLoop loop;
    double theta_deg;  // normalized to (-90, 270]
    Polarization polarization_used = Polarization::Faulted;
};

/// Fixed default relay settings. The scheme is setting-free: scenarios may
/// flip feature flags, never numeric thresholds.
struct RelayConfig {
    std::string relay_id;
    double i_n_secondary_a = 5.0;        // CT nominal, secondary side
    double ground_start_fraction = 0.05;  // of I_n
    double iu_threshold = 0.3;
    Complex k0 = polar_deg(0.75, -12.0);  // typical MV OH line default
    double undervoltage_pu = 0.9;
    bool ground_element_enabled = true;
    PrimaryPs primary_ps = PrimaryPs::CurrentBased;
    double polarization_fraction = 0.30;  // switch to cross/memory below this

    double ground_start_threshold_a() const { return ground_start_fraction * i_n_secondary_a; }
};

std::string to_string(FaultCode c);
std::string to_string(FaultLoop l);
std::string to_string(Direction d);

bool is_ground_code(FaultCode c);

/// The loop(s) a distance element evaluates for a given fault type:
/// x-g for SLG, the phase-phase loop for 2PH/2PHG, all six for 3PH.
std::vector<FaultLoop> loops_for(FaultCode c);

// --- starting functions -----------------------------------------------

bool ground_start(const DerivedQuantities& dq, const RelayConfig& cfg);

/// Signal p: no adequate superimposed residual present (always active when
/// the ground element is disabled, e.g. isolated/compensated networks).
bool p_signal(const DerivedQuantities& dq, const RelayConfig& cfg);

bool twophase_start(const DerivedQuantities& dq, const RelayConfig& cfg);
bool threephase_start(const DerivedQuantities& dq, const RelayConfig& cfg);

// --- phase selection ---------------------------------------------------

/// Sequence-current PS. The ground element requires the two angle
/// principles to agree on a ground row; the 2PH element checks the
/// phase-pair rows alone.
std::optional<FaultTypeSignal> phase_select_current(const DerivedQuantities& dq,
                                                    ElementKind element);

/// Sequence-voltage backup PS; ground rows disambiguated between 2PHG and
/// SLG by the per-phase voltage-drop comparison.
std::optional<FaultTypeSignal> phase_select_voltage(const DerivedQuantities& dq,
                                                    ElementKind element);

// --- direction ---------------------------------------------------------

/// Impedance angle of one fault loop from actual voltage and superimposed
/// current, with cross-polarization (unbalanced) or memory (3PH) when the
/// faulted-loop voltage has collapsed. nullopt when the loop current is too
/// small to support a directional claim.
std::optional<LoopMeasurement> loop_angle(FaultLoop loop, const DerivedQuantities& dq,
                                          const RelayConfig& cfg, bool prefer_memory);

/// Quadrant test of Eq.-style forward/reverse bands; boundary angles fall
/// to Reverse (blocks instantaneous forward tripping).
Direction direction_of(double theta_deg);

}  // namespace meshprot
