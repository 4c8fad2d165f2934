#pragma once

#include <optional>

#include "meshprot/relaytypes.hpp"
#include "meshprot/toc.hpp"

namespace meshprot {

enum class SKind { Sg, Sp1, Sp2 };

std::string to_string(SKind k);

struct RfbConfig {
    double cti_s = 0.3;
    bool dashed_frame_enabled = true;  // false with double-side-grounded dist. transformers
    bool dotted_part_enabled = true;
    const TocCurve* curve = nullptr;   // absent when the bus has no lateral
};

struct RfbState {
    enum class Phase { Idle, TimerRunning, Tripped };
    Phase phase = Phase::Idle;
    SKind s_kind = SKind::Sg;
    FaultCode ft = FaultCode::ABC;
    double t_sr = -1.0;
    double i_p_max_a = 0.0;            // primary amps at arming
    std::optional<double> t_p;         // melting/tripping time of P_i
    double t_tr = -1.0;                // armed timer expiry
    std::optional<double> theta_p_deg; // dotted-part loop angle
    std::string path;                  // decision path, for traces
};

struct RfbAction {
    enum class Kind { None, TripInstant, TripAt };
    Kind kind = Kind::None;
    double t_tr = 0.0;
};

/// Direction of the fault current through P_i (Forward = into the lateral),
/// from bus voltages and the superimposed P_i currents. An undefined angle
/// defaults to Forward, which preserves fuse coordination.
Direction p_current_direction(const DerivedQuantities& dq, FaultCode ft, const RelayConfig& rcfg);

/// Handle an s-signal (sg/sp1/sp2) arriving from the relay's reverse path
/// at t = t_SR: discriminate bus faults (instantaneous) from lateral faults
/// (51-element timer coordinated with TOC_Pi plus CTI).
RfbAction rfb_step(RfbState& st, const RfbConfig& cfg, SKind s, FaultCode ft,
                   const DerivedQuantities& dq, const RelayConfig& rcfg, double t);

/// 51-element timer expiry: backup-trip only if the lateral current still
/// intersects the curve (P_i failed to clear).
RfbAction rfb_timer_expired(RfbState& st, const RfbConfig& cfg, const DerivedQuantities& dq,
                            double t);

}  // namespace meshprot
