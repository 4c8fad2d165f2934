#include "meshprot/rfb.hpp"

#include <algorithm>
#include <cmath>

namespace meshprot {

std::string to_string(SKind k) {
    switch (k) {
        case SKind::Sg: return "sg";
        case SKind::Sp1: return "sp1";
        case SKind::Sp2: return "sp2";
    }
    return "?";
}

namespace {

bool undervoltage_27(const DerivedQuantities& dq, const RelayConfig& rcfg) {
    return dq.v_mag_pu[0] < rcfg.undervoltage_pu || dq.v_mag_pu[1] < rcfg.undervoltage_pu ||
           dq.v_mag_pu[2] < rcfg.undervoltage_pu;
}

/// Eq.-10 style intersection test on the latest P_i current.
bool intersects(const RfbConfig& cfg, const DerivedQuantities& dq) {
    return cfg.curve && dq.has_lateral && dq.ip_max_primary_a >= cfg.curve->i_mi();
}

}  // namespace

Direction p_current_direction(const DerivedQuantities& dq, FaultCode ft, const RelayConfig& rcfg) {
    // loop angles at the P_i location: bus voltages with P_i superimposed currents
    DerivedQuantities at_p = dq;
    at_p.i_super = dq.ip_super;
    at_p.i_seq_super = sequence_components(dq.ip_super);

    int forward = 0, reverse = 0;
    for (FaultLoop loop : loops_for(ft)) {
        auto m = loop_angle(loop, at_p, rcfg, ft == FaultCode::ABC);
        if (!m) continue;
        (direction_of(m->theta_deg) == Direction::Forward ? forward : reverse)++;
    }
    if (forward == 0 && reverse == 0) return Direction::Forward;  // undefined: keep coordination
    return reverse > forward ? Direction::Reverse : Direction::Forward;
}

RfbAction rfb_step(RfbState& st, const RfbConfig& cfg, SKind s, FaultCode ft,
                   const DerivedQuantities& dq, const RelayConfig& rcfg, double t) {
    if (st.phase == RfbState::Phase::Tripped) return {};
    st.s_kind = s;
    st.ft = ft;
    st.t_sr = t;
    st.i_p_max_a = dq.has_lateral ? dq.ip_max_primary_a : 0.0;

    if (intersects(cfg, dq)) {
        if (cfg.dotted_part_enabled) {
            // strong infeed from a lateral DG can satisfy the intersection
            // for a bus fault; the direction of the P_i current tells them apart
            DerivedQuantities at_p = dq;
            at_p.i_super = dq.ip_super;
            at_p.i_seq_super = sequence_components(dq.ip_super);
            if (auto m = loop_angle(loops_for(ft).front(), at_p, rcfg, ft == FaultCode::ABC))
                st.theta_p_deg = m->theta_deg;
            if (p_current_direction(dq, ft, rcfg) == Direction::Reverse) {
                st.phase = RfbState::Phase::Tripped;
                st.path = "dotted-reverse";
                return {RfbAction::Kind::TripInstant, t};
            }
        }
        st.t_p = toc_time(*cfg.curve, st.i_p_max_a);
        st.t_tr = t + *st.t_p + cfg.cti_s;
        st.phase = RfbState::Phase::TimerRunning;
        st.path = "51-timer";
        return {RfbAction::Kind::TripAt, st.t_tr};
    }

    if (undervoltage_27(dq, rcfg)) {
        st.phase = RfbState::Phase::Tripped;
        st.path = "27-bus-fault";
        return {RfbAction::Kind::TripInstant, t};
    }
    if (s == SKind::Sg && cfg.dashed_frame_enabled) {
        st.phase = RfbState::Phase::Tripped;
        st.path = "resistive-ground";
        return {RfbAction::Kind::TripInstant, t};
    }
    st.path = "no-action";
    return {};
}

RfbAction rfb_timer_expired(RfbState& st, const RfbConfig& cfg, const DerivedQuantities& dq,
                            double t) {
    if (st.phase != RfbState::Phase::TimerRunning) return {};
    if (intersects(cfg, dq)) {
        st.phase = RfbState::Phase::Tripped;
        st.path = "51-backup";
        return {RfbAction::Kind::TripInstant, t};
    }
    st.phase = RfbState::Phase::Idle;  // P_i cleared the lateral in time
    st.path = "51-reset";
    return {};
}

}  // namespace meshprot
