#include "meshprot/signals.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace meshprot {

namespace {
constexpr double kTimeEps = 1e-9;
}

Complex dft_phasor(const std::vector<double>& window, double frequency_hz, double t_first,
                   double dt) {
    const size_t n = window.size();
    const double omega = 2.0 * kPi * frequency_hz;
    Complex acc(0, 0);
    for (size_t k = 0; k < n; ++k) {
        double t = t_first + static_cast<double>(k) * dt;
        acc += window[k] * std::polar(1.0, -omega * t);
    }
    return acc * (std::sqrt(2.0) / static_cast<double>(n));
}

PhasorTrack::PhasorTrack(double frequency_hz, int samples_per_cycle, Complex initial,
                         double origin_s)
    : omega_(2.0 * kPi * frequency_hz),
      period_(1.0 / frequency_hz),
      dt_(1.0 / frequency_hz / samples_per_cycle),
      spc_(samples_per_cycle),
      origin_(origin_s) {
    segments_.emplace_back(-std::numeric_limits<double>::infinity(), initial);
}

void PhasorTrack::append(double t, Complex phasor) {
    double tq = std::ceil((t - kTimeEps) / dt_) * dt_;  // next sample instant
    if (!segments_.empty() && tq <= segments_.back().first + kTimeEps) {
        segments_.back().second = phasor;
        return;
    }
    segments_.emplace_back(tq, phasor);
}

Complex PhasorTrack::segment_value(double t) const {
    Complex v = segments_.front().second;
    for (const auto& [start, p] : segments_) {
        if (start <= t + kTimeEps) v = p;
        else break;
    }
    return v;
}

double PhasorTrack::last_stitch_before(double t) const {
    double s = -std::numeric_limits<double>::infinity();
    for (const auto& [start, p] : segments_) {
        if (start <= t + kTimeEps) s = start;
        else break;
    }
    return s;
}

double PhasorTrack::sample(double t) const {
    Complex p = segment_value(t);
    return std::sqrt(2.0) * (p * std::polar(1.0, omega_ * t)).real();
}

Complex PhasorTrack::phasor_at(double t) const {
    double window_start = t - (spc_ - 1) * dt_;
    double stitch = last_stitch_before(t);
    if (stitch <= window_start + kTimeEps) return segment_value(t);
    Complex acc(0, 0);
    for (int k = 0; k < spc_; ++k) {
        double tk = t - k * dt_;
        acc += sample(tk) * std::polar(1.0, -omega_ * tk);
    }
    return acc * (std::sqrt(2.0) / static_cast<double>(spc_));
}

Complex superimposed(const PhasorTrack& track, double t, int k) {
    double t_ref = t - k * track.period();
    if (t_ref < track.origin() - kTimeEps) return Complex(0, 0);
    return track.phasor_at(t) - track.phasor_at(t_ref);
}

SampledWaveform synthesize(Complex prefault, Complex fault, double t_inception_s,
                           int samples_per_cycle, double duration_s, double frequency_hz) {
    SampledWaveform w;
    w.samples_per_cycle = samples_per_cycle;
    w.frequency_hz = frequency_hz;
    w.t0_s = 0.0;
    PhasorTrack track(frequency_hz, samples_per_cycle, prefault, 0.0);
    track.append(t_inception_s, fault);
    const double dt = w.dt();
    auto count = static_cast<size_t>(std::floor(duration_s / dt)) + 1;
    w.values.reserve(count);
    for (size_t k = 0; k < count; ++k) w.values.push_back(track.sample(k * dt));
    return w;
}

}  // namespace meshprot
