#include "meshprot/relay.hpp"

#include <algorithm>
#include <cmath>

namespace meshprot {

namespace {
constexpr double kHalfSample = 1e-9;
}

Relay::Relay(RelayConfig cfg, RfbConfig rfb_cfg, ChannelSet ch)
    : cfg_(std::move(cfg)), rfb_cfg_(rfb_cfg), ch_(std::move(ch)) {}

DerivedQuantities Relay::derived_at(double t) const {
    DerivedQuantities dq;
    for (int p = 0; p < 3; ++p) {
        Complex i_now = ch_.i[p]->phasor_at(t) * ch_.i_sign;
        Complex i_ref = latched_ ? ref_i_[p]
                                 : ch_.i[p]->phasor_at(t - ch_.k_periods * ch_.period_s) *
                                       ch_.i_sign;
        dq.i_actual.phase(p) = i_now * Complex(ch_.i_pu_to_secondary, 0);
        dq.i_super.phase(p) = (i_now - i_ref) * Complex(ch_.i_pu_to_secondary, 0);

        Complex v_now = ch_.v[p]->phasor_at(t);
        Complex v_ref = latched_ ? ref_v_[p]
                                 : ch_.v[p]->phasor_at(t - ch_.k_periods * ch_.period_s);
        dq.v_actual.phase(p) = v_now;
        dq.v_mem.phase(p) = v_ref;
        dq.v_mag_pu[p] = std::abs(v_now);
        double vm = std::abs(v_ref);
        dq.du_percent[p] = vm > 1e-9 ? (vm - std::abs(v_now)) / vm * 100.0 : 0.0;
    }
    dq.i_seq_actual = sequence_components(dq.i_actual);
    dq.i_seq_super = sequence_components(dq.i_super);
    dq.residual_super = 3.0 * dq.i_seq_super.zero;
    dq.v_seq = sequence_components(dq.v_actual);

    if (ch_.has_lateral()) {
        dq.has_lateral = true;
        double ip_max = 0.0;
        for (int p = 0; p < 3; ++p) {
            Complex ipn = ch_.ip[p]->phasor_at(t);
            Complex ipr = latched_ ? ref_ip_[p]
                                   : ch_.ip[p]->phasor_at(t - ch_.k_periods * ch_.period_s);
            dq.ip_actual.phase(p) = ipn * Complex(ch_.i_pu_to_secondary, 0);
            dq.ip_super.phase(p) = (ipn - ipr) * Complex(ch_.i_pu_to_secondary, 0);
            ip_max = std::max(ip_max, std::abs(ipn) * ch_.i_pu_to_primary);
        }
        dq.ip_max_primary_a = ip_max;
    }
    return dq;
}

void Relay::issue_trip(double t, Direction tag, const std::string& reason, RelayOutputs& out) {
    if (tripped_) return;
    tripped_ = true;
    trace_.trip_t = t;
    out.trip = RelayOutputs::TripOrder{tag, reason};
}

void Relay::conclude(ElementKind kind, const FaultTypeSignal& ft, const LoopMeasurement& loop,
                     Direction dir, double /*t*/, const DerivedQuantities& dq) {
    if (conclusion_ != Conclusion::Pending) return;
    conclusion_ = dir == Direction::Forward ? Conclusion::Forward : Conclusion::Reverse;
    concluded_ft_ = ft;

    trace_.claiming_element = kind;
    trace_.t_d = element(kind).t_d;
    trace_.t_s = element(kind).t_s;
    trace_.ft = ft;
    trace_.theta_deg = loop.theta_deg;
    switch (loop.polarization_used) {
        case Polarization::Faulted: trace_.polarization = "faulted"; break;
        case Polarization::CrossHealthy: trace_.polarization = "cross"; break;
        case Polarization::Memory: trace_.polarization = "memory"; break;
    }
    trace_.dir = dir;
    if (std::abs(dq.i_seq_super.pos) > 1e-9 && std::abs(dq.i_seq_super.neg) > 1e-9)
        trace_.phi_i21 = angle_between_deg(dq.i_seq_super.neg, dq.i_seq_super.pos);
    if (std::abs(dq.i_seq_super.zero) > 1e-9 && std::abs(dq.i_seq_super.neg) > 1e-9)
        trace_.phi_i20 = angle_between_deg(dq.i_seq_super.neg, dq.i_seq_super.zero);
    if (std::abs(dq.v_seq.pos) > 1e-9 && std::abs(dq.v_seq.neg) > 1e-9)
        trace_.phi_v21 = angle_between_deg(dq.v_seq.neg, dq.v_seq.pos);
    if (std::abs(dq.v_seq.zero) > 1e-9 && std::abs(dq.v_seq.neg) > 1e-9)
        trace_.phi_v20 = angle_between_deg(dq.v_seq.neg, dq.v_seq.zero);
    trace_.du_percent = std::array<double, 3>{dq.du_percent[0], dq.du_percent[1],
                                              dq.du_percent[2]};

    if (dir == Direction::Forward) {
        if (bf_sent_ && !cf_sent_) {
            cf_sent_ = true;
            out_->cancel_bf = true;
        }
    } else {
        if (br_sent_ && !cr_sent_) {
            cr_sent_ = true;
            out_->cancel_br = true;
        }
    }
}

void Relay::evaluate_element(ElementKind kind, double t, const DerivedQuantities& dq) {
    ElementState& el = element(kind);
    el.resolved = true;

    std::optional<FaultTypeSignal> ft;
    if (kind == ElementKind::ThreePhase) {
        // balanced fault: no PS, all six loop angles must agree on a direction
        int fwd = 0, rev = 0, undefined = 0;
        std::optional<LoopMeasurement> rep;
        for (FaultLoop loop : loops_for(FaultCode::ABC)) {
            auto m = loop_angle(loop, dq, cfg_, true);
            if (!m) {
                ++undefined;
                continue;
            }
            if (loop == FaultLoop::AG) rep = m;  // representative value for traces
            if (!rep) rep = m;
            (direction_of(m->theta_deg) == Direction::Forward ? fwd : rev)++;
        }
        if (undefined == 0 && rep && (fwd == 6 || rev == 6)) {
            FaultTypeSignal sig{FaultCode::ABC, PsSource::Balanced3PH};
            el.ft = sig;
            el.dir = fwd == 6 ? Direction::Forward : Direction::Reverse;
            conclude(kind, sig, *rep, *el.dir, t, dq);
        }
        return;
    }

    auto primary = [&] { return phase_select_current(dq, kind); };
    auto backup = [&] { return phase_select_voltage(dq, kind); };
    if (cfg_.primary_ps == PrimaryPs::CurrentBased) {
        ft = primary();
        if (!ft) ft = backup();
    } else {
        ft = backup();
        if (!ft) ft = primary();
    }
    if (!ft) return;  // PS failed outright; stage concludes no actual fault

    el.ft = ft;
    auto loop = loop_angle(loops_for(ft->value).front(), dq, cfg_, false);
    if (!loop) return;  // no directional claim possible
    el.dir = direction_of(loop->theta_deg);
    conclude(kind, *ft, *loop, *el.dir, t, dq);
}

void Relay::step(double t, const IncomingSignals& in, RelayOutputs& out) {
    if (quiet_ || tripped_) return;
    out_ = &out;
    DerivedQuantities dq = derived_at(t);

    // starting detection: probable-fault blocking goes out on the first
    // raw threshold crossing, before the DFT settles
    bool any_start_now = false;
    auto try_start = [&](ElementKind kind, bool cond) {
        ElementState& el = element(kind);
        if (!el.started && cond) {
            el.started = true;
            el.t_d = t;
            el.t_s = t + ch_.period_s;
            any_start_now = true;
        }
    };
    try_start(ElementKind::Ground, ground_start(dq, cfg_));
    try_start(ElementKind::TwoPhase, twophase_start(dq, cfg_));
    try_start(ElementKind::ThreePhase, threephase_start(dq, cfg_));

    if (any_start_now && !latched_) {
        latched_ = true;
        t_latch_ = t;
        double t_ref = t - ch_.k_periods * ch_.period_s;
        for (int p = 0; p < 3; ++p) {
            ref_i_[p] = ch_.i[p]->phasor_at(t_ref) * ch_.i_sign;
            ref_v_[p] = ch_.v[p]->phasor_at(t_ref);
            if (ch_.has_lateral()) ref_ip_[p] = ch_.ip[p]->phasor_at(t_ref);
        }
        dq = derived_at(t);  // recompute against the frozen reference
    }
    if (latched_ && !bf_sent_) {
        bf_sent_ = true;
        br_sent_ = true;
        out.send_bf = true;
        out.send_br = true;
    }

    // per-element decisions at t_s, higher-precedence elements first; a
    // started-but-unresolved ground element holds the others back so an
    // unbalanced ground fault is never claimed as 2PH/3PH
    const ElementKind order[3] = {ElementKind::Ground, ElementKind::TwoPhase,
                                  ElementKind::ThreePhase};
    for (int k = 0; k < 3; ++k) {
        ElementState& el = element(order[k]);
        if (!el.started || el.resolved || t + kHalfSample < el.t_s) continue;
        bool held = false;
        for (int h = 0; h < k; ++h) {
            const ElementState& higher = element(order[h]);
            if (higher.started && !higher.resolved) held = true;
        }
        if (held) continue;
        evaluate_element(order[k], t, dq);
    }

    if (conclusion_ == Conclusion::Forward) {
        try_trip_forward(t, in, out);
    } else if (conclusion_ == Conclusion::Reverse) {
        try_send_s(t, in, out);
    } else if (conclusion_ == Conclusion::Pending && latched_) {
        bool all_resolved = true, any_claim = false;
        for (const auto& el : elements_) {
            if (el.started && !el.resolved) all_resolved = false;
            if (el.started && el.resolved && el.dir) any_claim = true;
        }
        bool any_started = element(ElementKind::Ground).started ||
                           element(ElementKind::TwoPhase).started ||
                           element(ElementKind::ThreePhase).started;
        if (any_started && all_resolved && !any_claim) {
            conclusion_ = Conclusion::NoFault;
            out.concluded_no_fault = true;
            if (bf_sent_ && !cf_sent_) { cf_sent_ = true; out.cancel_bf = true; }
            if (br_sent_ && !cr_sent_) { cr_sent_ = true; out.cancel_br = true; }
        }
    }
    out_ = nullptr;
}

void Relay::try_trip_forward(double t, const IncomingSignals& in, RelayOutputs& out) {
    if (tripped_ || in.bf_active) return;
    trace_.t_tf = t;
    issue_trip(t, Direction::Forward, "forward " + to_string(concluded_ft_.value), out);
}

void Relay::try_send_s(double t, const IncomingSignals& in, RelayOutputs& out) {
    if (s_sent_ || tripped_) return;
    if (in.br_active > 0) return;
    s_sent_ = true;
    trace_.t_sr = t;

    SKind kind = SKind::Sp2;
    if (trace_.claiming_element == ElementKind::Ground) kind = SKind::Sg;
    else if (trace_.claiming_element == ElementKind::TwoPhase) kind = SKind::Sp1;
    out.s_signal = kind;

    DerivedQuantities dq = derived_at(t);
    RfbAction act = rfb_step(rfb_, rfb_cfg_, kind, concluded_ft_.value, dq, cfg_, t);
    trace_.rfb_ip_max = rfb_.i_p_max_a;
    trace_.rfb_t_p = rfb_.t_p;
    trace_.rfb_theta_p = rfb_.theta_p_deg;
    trace_.rfb_v_pu = {dq.v_mag_pu[0], dq.v_mag_pu[1], dq.v_mag_pu[2]};
    trace_.rfb_path = rfb_.path;
    if (act.kind == RfbAction::Kind::TripInstant) {
        trace_.rfb_t_tr = t;
        issue_trip(t, Direction::Reverse, "reverse " + to_string(concluded_ft_.value) + " (" +
                                              rfb_.path + ")",
                   out);
    } else if (act.kind == RfbAction::Kind::TripAt) {
        trace_.rfb_t_tr = act.t_tr;
        out.rfb_timer_at = act.t_tr;
    }
}

void Relay::on_unblock(double t, const IncomingSignals& in, RelayOutputs& out) {
    if (quiet_ || tripped_) return;
    if (conclusion_ == Conclusion::Forward) try_trip_forward(t, in, out);
    else if (conclusion_ == Conclusion::Reverse) try_send_s(t, in, out);
}

void Relay::on_rfb_expiry(double t, RelayOutputs& out) {
    if (quiet_ || tripped_) return;
    DerivedQuantities dq = derived_at(t);
    RfbAction act = rfb_timer_expired(rfb_, rfb_cfg_, dq, t);
    trace_.rfb_path = rfb_.path;
    if (act.kind == RfbAction::Kind::TripInstant) {
        trace_.rfb_t_tr = t;
        issue_trip(t, Direction::Reverse,
                   "reverse " + to_string(concluded_ft_.value) + " (51-backup)", out);
    }
}

void Relay::own_breaker_opened(double) { quiet_ = true; }

}  // namespace meshprot
