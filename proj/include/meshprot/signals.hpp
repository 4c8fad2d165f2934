#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "meshprot/phasor.hpp"

namespace meshprot {

struct SampledWaveform {
    int samples_per_cycle = 32;
    double frequency_hz = 50.0;
    double t0_s = 0.0;
    std::vector<double> values;

    double dt() const { return 1.0 / frequency_hz / samples_per_cycle; }
};

/// Full-cycle DFT of a window of instantaneous samples, absolute-time
/// referenced so a stationary tone yields a constant phasor. `t_first` is
/// the time of window[0], samples spaced dt apart, window length = one
/// fundamental cycle. RMS magnitude convention.
Complex dft_phasor(const std::vector<double>& window, double frequency_hz, double t_first,
                   double dt);

/// One scalar measurement channel as a sequence of stationary RMS phasor
/// segments. The instantaneous signal is x(t) = √2·Re(P·e^{jωt}) with P the
/// phasor of the segment containing t; segment switches are instantaneous
/// stitches quantized up to the sample grid. phasor_at() reproduces a
/// sliding full-cycle DFT over the synthesized samples exactly: away from
/// stitches it short-circuits to the segment value (the DFT of a pure tone
/// over one exact cycle), across stitches it evaluates the windowed sum.
class PhasorTrack {
  public:
    PhasorTrack() = default;
    PhasorTrack(double frequency_hz, int samples_per_cycle, Complex initial,
                double origin_s = -std::numeric_limits<double>::infinity());

    /// Switch to a new stationary phasor at the first sample instant >= t.
    void append(double t, Complex phasor);

    double sample(double t) const;
    Complex phasor_at(double t) const;
    Complex segment_value(double t) const;

    /// Time of the most recent stitch at or before t (or -inf).
    double last_stitch_before(double t) const;

    double dt() const { return dt_; }
    double period() const { return period_; }
    double origin() const { return origin_; }

  private:
    double omega_ = 2.0 * kPi * 50.0;
    double period_ = 0.02;
    double dt_ = 0.02 / 32.0;
    int spc_ = 32;
    double origin_ = -std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, Complex>> segments_;  // (start time, phasor)
};

/// Superimposed quantity per n_s(t) = n(t) - n(t - k·T). Before k·T of
/// history exists the result is zero ("not ready").
Complex superimposed(const PhasorTrack& track, double t, int k = 3);

/// Stitch a pre-fault and fault phasor into a sampled waveform. Inception
/// is quantized up to the sample grid; no DC offset.
SampledWaveform synthesize(Complex prefault, Complex fault, double t_inception_s,
                           int samples_per_cycle, double duration_s, double frequency_hz);

/// Everything the relay elements consume at one instant, derived from the
/// raw phasor streams of one relay location (basic-calculations block).
/// Currents in secondary amps, voltages in per unit.
struct DerivedQuantities {
    ThreePhase i_actual;
    ThreePhase i_super;
    SequenceSet i_seq_actual;
    SequenceSet i_seq_super;
    Complex residual_super;  // 3·I0,s
    ThreePhase v_actual;
    SequenceSet v_seq;
    ThreePhase v_mem;  // memorized pre-fault voltages
    double v_mag_pu[3] = {0, 0, 0};
    double du_percent[3] = {0, 0, 0};

    bool has_lateral = false;
    ThreePhase ip_actual;  // secondary amps at P_i
    ThreePhase ip_super;
    double ip_max_primary_a = 0.0;
};

}  // namespace meshprot
