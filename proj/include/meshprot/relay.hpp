#pragma once

#include <array>
#include <optional>
#include <string>

#include "meshprot/relaytypes.hpp"
#include "meshprot/rfb.hpp"
#include "meshprot/signals.hpp"

namespace meshprot {

/// Blocking signals currently active against this relay.
struct IncomingSignals {
    bool bf_active = false;  // uncancelled bf from the opponent
    int br_active = 0;       // uncancelled br count from group peers
};

struct RelayOutputs {
    bool send_bf = false;
    bool send_br = false;
    bool cancel_bf = false;  // cf
    bool cancel_br = false;  // cr
    std::optional<SKind> s_signal;
    struct TripOrder {
        Direction tag = Direction::Forward;
        std::string reason;
    };
    std::optional<TripOrder> trip;
    std::optional<double> rfb_timer_at;
    bool concluded_no_fault = false;

    bool any() const {
        return send_bf || send_br || cancel_bf || cancel_br || s_signal || trip || rfb_timer_at ||
               concluded_no_fault;
    }
};

/// Measurement channel handles of one relay location. Tracks carry
/// network per-unit phasors; scale factors bring currents to secondary
/// amps (thresholds) and primary amps (TOC lookup).
struct ChannelSet {
    std::array<const PhasorTrack*, 3> v{{nullptr, nullptr, nullptr}};
    std::array<const PhasorTrack*, 3> i{{nullptr, nullptr, nullptr}};
    std::array<const PhasorTrack*, 3> ip{{nullptr, nullptr, nullptr}};
    double i_sign = 1.0;  // +1 when track polarity is already into the element
    double i_pu_to_secondary = 1.0;
    double i_pu_to_primary = 1.0;
    int k_periods = 3;
    double period_s = 0.02;

    bool has_lateral() const { return ip[0] != nullptr; }
};

/// Per-element decision record (three elements per relay).
struct ElementState {
    bool started = false;
    double t_d = -1.0;
    double t_s = -1.0;
    bool resolved = false;
    std::optional<FaultTypeSignal> ft;
    std::optional<Direction> dir;
};

/// Trace of the relay's decisions for one run; the data behind the
/// start / phase-selection / direction / RFB report tables.
struct RelayTrace {
    std::optional<double> t_d, t_s;
    std::optional<ElementKind> claiming_element;
    std::optional<double> phi_i21, phi_i20, phi_v21, phi_v20;
    std::optional<std::array<double, 3>> du_percent;
    std::optional<FaultTypeSignal> ft;
    std::optional<double> theta_deg;
    std::string polarization;
    std::optional<Direction> dir;
    std::optional<double> t_tf, t_sr;
    std::optional<double> rfb_ip_max, rfb_t_p, rfb_t_tr, rfb_theta_p;
    std::array<double, 3> rfb_v_pu{{0, 0, 0}};
    std::string rfb_path;
    std::optional<double> trip_t;
};

/// One plug-and-play relay: three starting elements, dual phase selection,
/// distance-angle direction, block-first/cancel-later signalling and the
/// reverse-fault block. Deterministic single-owner state machine; the
/// coordinator feeds it sample instants and signal-change callbacks.
class Relay {
  public:
    Relay(RelayConfig cfg, RfbConfig rfb_cfg, ChannelSet ch);

    void step(double t, const IncomingSignals& in, RelayOutputs& out);
    void on_unblock(double t, const IncomingSignals& in, RelayOutputs& out);
    void on_rfb_expiry(double t, RelayOutputs& out);
    void own_breaker_opened(double t);

    DerivedQuantities derived_at(double t) const;

    const RelayConfig& config() const { return cfg_; }
    const RelayTrace& trace() const { return trace_; }
    const RfbState& rfb_state() const { return rfb_; }
    bool engaged() const { return latched_; }
    bool tripped() const { return tripped_; }

  private:
    enum class Conclusion { Pending, Forward, Reverse, NoFault };

    void evaluate_element(ElementKind kind, double t, const DerivedQuantities& dq);
    void conclude(ElementKind kind, const FaultTypeSignal& ft, const LoopMeasurement& loop,
                  Direction dir, double t, const DerivedQuantities& dq);
    void try_trip_forward(double t, const IncomingSignals& in, RelayOutputs& out);
    void try_send_s(double t, const IncomingSignals& in, RelayOutputs& out);
    void issue_trip(double t, Direction tag, const std::string& reason, RelayOutputs& out);
    ElementState& element(ElementKind k) { return elements_[static_cast<int>(k)]; }
    const ElementState& element(ElementKind k) const { return elements_[static_cast<int>(k)]; }

    RelayConfig cfg_;
    RfbConfig rfb_cfg_;
    ChannelSet ch_;

    bool latched_ = false;
    double t_latch_ = -1.0;
    std::array<Complex, 3> ref_i_{};
    std::array<Complex, 3> ref_ip_{};
    std::array<Complex, 3> ref_v_{};

    std::array<ElementState, 3> elements_{};
    Conclusion conclusion_ = Conclusion::Pending;
    FaultTypeSignal concluded_ft_{FaultCode::ABC, PsSource::Balanced3PH};
    bool bf_sent_ = false, br_sent_ = false, cf_sent_ = false, cr_sent_ = false;
    bool s_sent_ = false;
    bool tripped_ = false;
    bool quiet_ = false;

    RfbState rfb_;
    RelayTrace trace_;
    RelayOutputs* out_ = nullptr;  // valid during evaluate calls
};

}  // namespace meshprot
