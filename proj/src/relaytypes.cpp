#include "meshprot/relaytypes.hpp"

#include <array>
#include <cmath>

namespace meshprot {

std::string to_string(FaultCode c) {
    switch (c) {
        case FaultCode::AB: return "a-b";
        case FaultCode::BC: return "b-c";
        case FaultCode::CA: return "c-a";
        case FaultCode::ABG: return "a-b-g";
        case FaultCode::BCG: return "b-c-g";
        case FaultCode::CAG: return "c-a-g";
        case FaultCode::AG: return "a-g";
        case FaultCode::BG: return "b-g";
        case FaultCode::CG: return "c-g";
        case FaultCode::ABC: return "a-b-c";
    }
    return "?";
}

std::string to_string(FaultLoop l) {
    switch (l) {
        case FaultLoop::AB: return "a-b";
        case FaultLoop::BC: return "b-c";
        case FaultLoop::CA: return "c-a";
        case FaultLoop::AG: return "a-g";
        case FaultLoop::BG: return "b-g";
        case FaultLoop::CG: return "c-g";
    }
    return "?";
}

std::string to_string(Direction d) { return d == Direction::Forward ? "forward" : "reverse"; }

bool is_ground_code(FaultCode c) {
    switch (c) {
        case FaultCode::ABG:
        case FaultCode::BCG:
        case FaultCode::CAG:
        case FaultCode::AG:
        case FaultCode::BG:
        case FaultCode::CG: return true;
        default: return false;
    }
}

std::vector<FaultLoop> loops_for(FaultCode c) {
    switch (c) {
        case FaultCode::AB:
        case FaultCode::ABG: return {FaultLoop::AB};
        case FaultCode::BC:
        case FaultCode::BCG: return {FaultLoop::BC};
        case FaultCode::CA:
        case FaultCode::CAG: return {FaultLoop::CA};
        case FaultCode::AG: return {FaultLoop::AG};
        case FaultCode::BG: return {FaultLoop::BG};
        case FaultCode::CG: return {FaultLoop::CG};
        case FaultCode::ABC:
            return {FaultLoop::AB, FaultLoop::BC, FaultLoop::CA,
                    FaultLoop::AG, FaultLoop::BG, FaultLoop::CG};
    }
    return {};
}

bool ground_start(const DerivedQuantities& dq, const RelayConfig& cfg) {
    if (!cfg.ground_element_enabled) return false;
    return std::abs(dq.residual_super) >= cfg.ground_start_threshold_a();
}

bool p_signal(const DerivedQuantities& dq, const RelayConfig& cfg) {
    if (!cfg.ground_element_enabled) return true;
    return std::abs(dq.residual_super) < cfg.ground_start_threshold_a();
}

bool twophase_start(const DerivedQuantities& dq, const RelayConfig& cfg) {
    if (!p_signal(dq, cfg)) return false;
    // the voltage-side mirror of signal p: zero-sequence voltage flags a
    // ground fault even where the local residual current stays below the
    // relay's sensitivity, keeping the phase-phase element out of ground
    // faults (same 5% constant; isolated networks develop no V0 and are
    // unaffected)
    if (cfg.ground_element_enabled && 3.0 * std::abs(dq.v_seq.zero) >= 0.05) return false;
    double i1 = std::abs(dq.i_seq_actual.pos);
    if (i1 < 1e-9) return false;  // iu undefined on a dead channel
    // the unbalance ratio is only meaningful once the negative-sequence
    // current itself is measurable; the relay's maximum current
    // sensitivity (the 5% I_n constant) supervises the element
    if (std::abs(dq.i_seq_actual.neg) < cfg.ground_start_threshold_a()) return false;
    double iu = std::abs(dq.i_seq_actual.neg) / i1;
    return iu >= cfg.iu_threshold;
}

bool threephase_start(const DerivedQuantities& dq, const RelayConfig& cfg) {
    double thr = cfg.ground_start_threshold_a();
    return std::abs(dq.i_super.a) >= thr && std::abs(dq.i_super.b) >= thr &&
           std::abs(dq.i_super.c) >= thr;
}

namespace {

struct PsRow {
    FaultCode code;
    double i21_lo, i21_hi;
    bool has_20;
    double i20_lo, i20_hi;
    double v21_lo, v21_hi;
    bool has_v20;
    double v20_lo, v20_hi;
};

// Sequence-current and sequence-voltage signature table. Membership is
// tested modulo 360 with inclusive bounds.
constexpr std::array<PsRow, 9> kPsTable = {{
    {FaultCode::AB, 45, 75, false, 0, 0, 180, 300, false, 0, 0},
    {FaultCode::BC, 165, 195, false, 0, 0, -60, 60, false, 0, 0},
    {FaultCode::CA, -75, -45, false, 0, 0, 60, 180, false, 0, 0},
    {FaultCode::ABG, 45, 75, true, 90, 150, 180, 300, true, 30, 150},
    {FaultCode::BCG, 165, 195, true, -30, 30, -60, 60, true, -90, 30},
    {FaultCode::CAG, -75, -45, true, 210, 270, 60, 180, true, 150, 270},
    {FaultCode::AG, -15, 15, true, -30, 30, 150, 270, true, -90, 30},
    {FaultCode::BG, 105, 135, true, 210, 270, -90, 30, true, 150, 270},
    {FaultCode::CG, 225, 255, true, 90, 150, 30, 150, true, 30, 150},
}};

constexpr double kPhasorFloor = 1e-6;

/// The third (least disturbed) phase for a 2PHG code, and the faulted
/// phases themselves for the SLG codes.
int spare_phase_of(FaultCode c) {
    switch (c) {
        case FaultCode::ABG: return 2;  // c
        case FaultCode::BCG: return 0;  // a
        case FaultCode::CAG: return 1;  // b
        case FaultCode::AG: return 0;
        case FaultCode::BG: return 1;
        case FaultCode::CG: return 2;
        default: return -1;
    }
}

/// ΔU comparison of the 2PHG/SLG pair sharing one V2-vs-V0 row: the double
/// fault holds when both faulted phases dropped more than the spare phase,
/// the single fault when the spare comparison is inverted.
bool du_supports(FaultCode c, const double du[3]) {
    int spare = spare_phase_of(c);
    if (spare < 0) return true;
    int o1 = (spare + 1) % 3, o2 = (spare + 2) % 3;
    if (is_ground_code(c) && (c == FaultCode::ABG || c == FaultCode::BCG || c == FaultCode::CAG))
        return du[o1] > du[spare] && du[o2] > du[spare];
    return du[spare] > du[o1] && du[spare] > du[o2];
}

}  // namespace

std::optional<FaultTypeSignal> phase_select_current(const DerivedQuantities& dq,
                                                    ElementKind element) {
    const Complex i1s = dq.i_seq_super.pos;
    const Complex i2s = dq.i_seq_super.neg;
    const Complex i0s = dq.i_seq_super.zero;
    if (std::abs(i1s) < kPhasorFloor || std::abs(i2s) < kPhasorFloor) return std::nullopt;
    double phi21 = angle_between_deg(i2s, i1s);

    if (element == ElementKind::Ground) {
        if (std::abs(i0s) < kPhasorFloor) return std::nullopt;
        double phi20 = angle_between_deg(i2s, i0s);
        for (const auto& row : kPsTable) {
            if (!row.has_20) continue;
            if (angle_in_range_deg(phi21, row.i21_lo, row.i21_hi) &&
                angle_in_range_deg(phi20, row.i20_lo, row.i20_hi))
                return FaultTypeSignal{row.code, PsSource::CurrentPS};
        }
        return std::nullopt;
    }
    for (const auto& row : kPsTable) {
        if (row.has_20) continue;
        if (angle_in_range_deg(phi21, row.i21_lo, row.i21_hi))
            return FaultTypeSignal{row.code, PsSource::CurrentPS};
    }
    return std::nullopt;
}

std::optional<FaultTypeSignal> phase_select_voltage(const DerivedQuantities& dq,
                                                    ElementKind element) {
    const Complex v1 = dq.v_seq.pos;
    const Complex v2 = dq.v_seq.neg;
    const Complex v0 = dq.v_seq.zero;
    if (std::abs(v2) < kPhasorFloor) return std::nullopt;

    if (element == ElementKind::Ground) {
        if (std::abs(v0) < kPhasorFloor) return std::nullopt;
        double phi20 = angle_between_deg(v2, v0);
        for (const auto& row : kPsTable) {
            if (!row.has_v20) continue;
            if (angle_in_range_deg(phi20, row.v20_lo, row.v20_hi) &&
                du_supports(row.code, dq.du_percent))
                return FaultTypeSignal{row.code, PsSource::VoltagePS};
        }
        return std::nullopt;
    }
    if (std::abs(v1) < kPhasorFloor) return std::nullopt;
    double phi21 = angle_between_deg(v2, v1);
    for (const auto& row : kPsTable) {
        if (row.has_20) continue;
        if (angle_in_range_deg(phi21, row.v21_lo, row.v21_hi))
            return FaultTypeSignal{row.code, PsSource::VoltagePS};
    }
    return std::nullopt;
}

namespace {

/// Loop voltage, loop current (superimposed) and the pre-fault loop voltage
/// for adequacy/polarization decisions.
struct LoopQuantities {
    Complex v;       // actual loop voltage
    Complex i;       // superimposed loop current
    Complex v_mem;   // memorized pre-fault loop voltage
    Complex v_cross; // cross-polarization surrogate with pre-fault angle of v
};

LoopQuantities loop_quantities(FaultLoop loop, const DerivedQuantities& dq,
                               const RelayConfig& cfg) {
    LoopQuantities q;
    const ThreePhase& v = dq.v_actual;
    const ThreePhase& vm = dq.v_mem;
    const ThreePhase& is = dq.i_super;
    const Complex j(0, 1);
    const double s3 = std::sqrt(3.0);
    switch (loop) {
        case FaultLoop::AB:
            q.v = v.a - v.b;
            q.i = is.a - is.b;
            q.v_mem = vm.a - vm.b;
            q.v_cross = -j * s3 * v.c;
            break;
        case FaultLoop::BC:
            q.v = v.b - v.c;
            q.i = is.b - is.c;
            q.v_mem = vm.b - vm.c;
            q.v_cross = -j * s3 * v.a;
            break;
        case FaultLoop::CA:
            q.v = v.c - v.a;
            q.i = is.c - is.a;
            q.v_mem = vm.c - vm.a;
            q.v_cross = -j * s3 * v.b;
            break;
        case FaultLoop::AG:
            q.v = v.a;
            q.i = is.a + cfg.k0 * (3.0 * dq.i_seq_super.zero);
            q.v_mem = vm.a;
            q.v_cross = j * (v.b - v.c) / s3;
            break;
        case FaultLoop::BG:
            q.v = v.b;
            q.i = is.b + cfg.k0 * (3.0 * dq.i_seq_super.zero);
            q.v_mem = vm.b;
            q.v_cross = j * (v.c - v.a) / s3;
            break;
        case FaultLoop::CG:
            q.v = v.c;
            q.i = is.c + cfg.k0 * (3.0 * dq.i_seq_super.zero);
            q.v_mem = vm.c;
            q.v_cross = j * (v.a - v.b) / s3;
            break;
    }
    return q;
}

}  // namespace

std::optional<LoopMeasurement> loop_angle(FaultLoop loop, const DerivedQuantities& dq,
                                          const RelayConfig& cfg, bool prefer_memory) {
    LoopQuantities q = loop_quantities(loop, dq, cfg);
    // a directional claim needs a measurable loop current; the relay's
    // maximum current sensitivity bounds what "measurable" means
    if (std::abs(q.i) < cfg.ground_start_threshold_a()) return std::nullopt;

    Complex v = q.v;
    Polarization pol = Polarization::Faulted;
    if (std::abs(q.v) < cfg.polarization_fraction * std::abs(q.v_mem)) {
        if (prefer_memory) {
            v = q.v_mem;
            pol = Polarization::Memory;
        } else {
            v = q.v_cross;
            pol = Polarization::CrossHealthy;
        }
        if (std::abs(v) < 1e-9) return std::nullopt;
    } else if (std::abs(q.v) < 1e-9) {
        return std::nullopt;
    }

    LoopMeasurement m;
    m.loop = loop;
    m.theta_deg = normalize_angle_deg(angle_between_deg(v, q.i), -90.0);
    m.polarization_used = pol;
    return m;
}

Direction direction_of(double theta_deg) {
    double t = normalize_angle_deg(theta_deg, -90.0);
    if (t > -90.0 && t < 90.0) return Direction::Forward;
    return Direction::Reverse;
}

}  // namespace meshprot
