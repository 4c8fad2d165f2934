#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

#include "meshprot/network.hpp"
#include "meshprot/phasor.hpp"

namespace meshprot {

/// Runtime switching state overlaid on a network: which breakers/fuses/
/// source bays are open and per-lateral load multipliers.
struct TopologyState {
    std::set<std::string> open_breakers;     // breaker names (CBi_j)
    std::set<std::string> blown_fuses;       // lateral ids
    std::set<std::string> open_source_bays;  // source ids
    std::map<std::string, double> load_multiplier;  // lateral id -> factor

    double load_factor(const std::string& lateral_id) const {
        auto it = load_multiplier.find(lateral_id);
        return it == load_multiplier.end() ? 1.0 : it->second;
    }
    bool operator==(const TopologyState&) const = default;
};

/// Complete steady-state phasor snapshot. All quantities per-unit, phase
/// domain, RMS convention, phase-a reference. Branch currents are stored
/// once per end, positive flowing from the local bus into the element.
struct PhasorState {
    std::map<std::string, ThreePhase> bus_v;           // bus id -> L-N voltage
    std::map<std::string, ThreePhase> segment_i_from;  // segment id -> I at from end
    std::map<std::string, ThreePhase> segment_i_to;    // segment id -> I at to end
    std::map<std::string, ThreePhase> lateral_i;       // lateral id -> I at P_i
    std::map<std::string, ThreePhase> source_i;        // source id -> injected current
    ThreePhase fault_i;                                // into the fault, zero when none
    bool fault_active = false;

    const ThreePhase& voltage(const std::string& bus) const;
};

struct FaultSolution {
    FaultSpec fault_spec;
    PhasorState prefault;
    PhasorState faulted;
};

struct MeasuringPoint {
    enum class Kind { RelayCt, LateralCt };
    Kind kind = Kind::RelayCt;
    std::string id;  // relay id (RelayCt) or lateral id (LateralCt)
    double ct_ratio = 40.0;   // primary/secondary
    double vt_ratio = 200.0;
    bool reversed = false;
};

struct SecondaryMeasurement {
    ThreePhase v_volts;  // L-N secondary volts
    ThreePhase i_amps;   // secondary amps, forward positive
};

/// Sequence-network solver over a network plus switching state. Builds the
/// three bus-admittance models on the source-energized subgraph, solves the
/// pre-fault state, and computes faulted states by superposition of the
/// pure-fault injection, iterating inverter sources to their current-limited
/// fixed point.
class FaultSolver {
  public:
    explicit FaultSolver(const Network& net) : net_(net) {}

    /// Steady state without fault. When `split_for` names a mid-segment
    /// fault the corresponding internal node is present (electrically
    /// transparent), so the result is channel-compatible with the faulted
    /// state of that fault.
    PhasorState solve_steady(const TopologyState& topo,
                             const std::optional<FaultSpec>& split_for = std::nullopt,
                             bool allow_dead = false) const;

    PhasorState solve_faulted(const TopologyState& topo, const FaultSpec& fault) const;

    FaultSolution solve_fault(const TopologyState& topo, const FaultSpec& fault) const;

    /// True if the fault location is galvanically connected to an
    /// energized source through closed devices.
    bool fault_energized(const TopologyState& topo, const FaultSpec& fault) const;

    /// Verification helper: largest per-bus per-phase current mismatch
    /// (pu) over the energized subgraph, computed from the extracted
    /// branch/shunt/source currents of `state`.
    double max_kcl_residual(const TopologyState& topo, const PhasorState& state,
                            const std::optional<FaultSpec>& fault = std::nullopt) const;

    const Network& network() const { return net_; }

  private:
    const Network& net_;
};

/// Spec-level conveniences over the default (all-closed) topology.
PhasorState solve_prefault(const Network& net);
FaultSolution solve_fault(const Network& net, const FaultSpec& fault);

SecondaryMeasurement measure(const Network& net, const PhasorState& state,
                             const MeasuringPoint& point);

/// Default measuring points carried by the built networks.
MeasuringPoint relay_ct(const Network& net, const std::string& relay_id);
MeasuringPoint lateral_ct(const Network& net, const std::string& lateral_id);

}  // namespace meshprot
