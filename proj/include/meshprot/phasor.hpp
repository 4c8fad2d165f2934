#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace meshprot {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Fortescue rotation operator a = 1∠120°.
inline Complex fortescue_a() { return std::polar(1.0, 2.0 * kPi / 3.0); }

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

inline Complex polar_deg(double mag, double angle_deg) {
    return std::polar(mag, deg2rad(angle_deg));
}

/// Angle of a phasor in degrees, in (-180, 180].
inline double angle_deg(const Complex& p) {
    double d = rad2deg(std::arg(p));
    if (d <= -180.0) d += 360.0;
    return d;
}

/// Normalize an angle in degrees into (lo, lo + 360].
inline double normalize_angle_deg(double d, double lo) {
    while (d <= lo) d += 360.0;
    while (d > lo + 360.0) d -= 360.0;
    return d;
}

/// Angle difference ∠x - ∠y in degrees, normalized to (-180, 180].
inline double angle_between_deg(const Complex& x, const Complex& y) {
    return angle_deg(x * std::conj(y) / std::abs(y) / std::abs(y));
}

/// True if angle (degrees) falls inside [lo, hi] modulo 360.
inline bool angle_in_range_deg(double angle, double lo, double hi) {
    double span = hi - lo;
    double off = angle - lo;
    off -= 360.0 * std::floor(off / 360.0);  // into [0, 360)
    return off <= span || off >= 360.0;      // inclusive at both ends
}

struct ThreePhase {
    Complex a{0.0, 0.0};
    Complex b{0.0, 0.0};
    Complex c{0.0, 0.0};

    ThreePhase operator+(const ThreePhase& o) const { return {a + o.a, b + o.b, c + o.c}; }
    ThreePhase operator-(const ThreePhase& o) const { return {a - o.a, b - o.b, c - o.c}; }
    ThreePhase operator*(const Complex& k) const { return {a * k, b * k, c * k}; }

    Complex& phase(int i) { return i == 0 ? a : (i == 1 ? b : c); }
    const Complex& phase(int i) const { return i == 0 ? a : (i == 1 ? b : c); }
};

/// Sequence triple, indexed zero/positive/negative.
struct SequenceSet {
    Complex zero{0.0, 0.0};
    Complex pos{0.0, 0.0};
    Complex neg{0.0, 0.0};
};

/// Fortescue analysis: phase quantities -> (zero, positive, negative).
inline SequenceSet sequence_components(const ThreePhase& p) {
    const Complex a = fortescue_a();
    const Complex a2 = a * a;
    SequenceSet s;
    s.zero = (p.a + p.b + p.c) / 3.0;
    s.pos = (p.a + a * p.b + a2 * p.c) / 3.0;
    s.neg = (p.a + a2 * p.b + a * p.c) / 3.0;
    return s;
}

/// Fortescue synthesis, the inverse of sequence_components().
inline ThreePhase phase_components(const SequenceSet& s) {
    const Complex a = fortescue_a();
    const Complex a2 = a * a;
    ThreePhase p;
    p.a = s.zero + s.pos + s.neg;
    p.b = s.zero + a2 * s.pos + a * s.neg;
    p.c = s.zero + a * s.pos + a2 * s.neg;
    return p;
}

/// Balanced positive-sequence set with phase-a value v.
inline ThreePhase balanced_set(const Complex& v) {
    return phase_components(SequenceSet{Complex{0, 0}, v, Complex{0, 0}});
}

}  // namespace meshprot
