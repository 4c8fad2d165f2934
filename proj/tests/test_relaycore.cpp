#include <doctest.h>

#include <cmath>

#include "meshprot/relaytypes.hpp"

using namespace meshprot;

namespace {

RelayConfig default_cfg() {
    RelayConfig c;
    c.relay_id = "R", c.i_n_secondary_a = 5.0;
    return c;
}

/// dq with superimposed sequence currents set directly (secondary amps).
DerivedQuantities dq_seq_super(Complex i1s, Complex i2s, Complex i0s) {
    DerivedQuantities dq;
    dq.i_seq_super = SequenceSet{i0s, i1s, i2s};
    dq.i_super = phase_components(dq.i_seq_super);
    dq.residual_super = 3.0 * i0s;
    return dq;
}

}  // namespace

TEST_CASE("ground start threshold is 5% of In: 10 primary A on a 200:5 CT") {
    RelayConfig cfg = default_cfg();
    // 10 primary A = 0.25 A secondary at ratio 40
    CHECK(cfg.ground_start_threshold_a() == doctest::Approx(0.25));

    DerivedQuantities dq;
    dq.residual_super = Complex(11.7 / 40.0, 0);  // 11.7 primary A
    CHECK(ground_start(dq, cfg));
    dq.residual_super = Complex(5.6 / 40.0, 0);  // 5.6 primary A: relay stays quiet
    CHECK_FALSE(ground_start(dq, cfg));
    dq.residual_super = Complex(10.0 / 40.0, 0);  // boundary is inclusive
    CHECK(ground_start(dq, cfg));
}

TEST_CASE("ground element can be disabled for isolated/compensated networks") {
    RelayConfig cfg = default_cfg();
    cfg.ground_element_enabled = false;
    DerivedQuantities dq;
    dq.residual_super = Complex(100.0, 0);
    CHECK_FALSE(ground_start(dq, cfg));
    CHECK(p_signal(dq, cfg));  // p is held active so the 2PH element may run
}

TEST_CASE("two-phase start: current unbalance with p gating") {
    RelayConfig cfg = default_cfg();
    DerivedQuantities dq;
    dq.i_seq_actual = SequenceSet{Complex(0, 0), Complex(100, 0), Complex(35, 0)};
    CHECK(twophase_start(dq, cfg));  // iu = 0.35

    dq.i_seq_actual.neg = Complex(29, 0);
    CHECK_FALSE(twophase_start(dq, cfg));  // iu = 0.29

    dq.i_seq_actual.neg = Complex(50, 0);
    dq.residual_super = Complex(0.3, 0);  // 12 primary A: ground element owns the fault
    CHECK_FALSE(twophase_start(dq, cfg));
}

TEST_CASE("two-phase start treats a dead channel as no-start") {
    RelayConfig cfg = default_cfg();
    DerivedQuantities dq;
    dq.i_seq_actual = SequenceSet{Complex(0, 0), Complex(0, 0), Complex(0, 0)};
    CHECK_FALSE(twophase_start(dq, cfg));
}

TEST_CASE("three-phase start needs all three superimposed currents above 5% In") {
    RelayConfig cfg = default_cfg();
    DerivedQuantities dq;
    auto set = [&](double a, double b, double c) {  // primary amps
        dq.i_super = ThreePhase{Complex(a / 40, 0), Complex(b / 40, 0), Complex(c / 40, 0)};
    };
    set(12, 12, 12);
    CHECK(threephase_start(dq, cfg));
    set(12, 12, 8);
    CHECK_FALSE(threephase_start(dq, cfg));
}

TEST_CASE("current PS: bolted a-g gives coincident sequence currents") {
    auto dq = dq_seq_super(Complex(1, 0), Complex(1, 0), Complex(1, 0));
    auto ft = phase_select_current(dq, ElementKind::Ground);
    REQUIRE(ft.has_value());
    CHECK(ft->value == FaultCode::AG);
    CHECK(ft->source == PsSource::CurrentPS);
}

TEST_CASE("current PS: b-c fault has opposed positive and negative sequences") {
    auto dq = dq_seq_super(Complex(1, 0), Complex(-1, 0), Complex(0, 0));
    auto ft = phase_select_current(dq, ElementKind::TwoPhase);
    REQUIRE(ft.has_value());
    CHECK(ft->value == FaultCode::BC);
}

TEST_CASE("current PS: 60.9 degrees with no zero sequence is a-b") {
    auto dq = dq_seq_super(polar_deg(1, 0), polar_deg(1, 60.9), Complex(0, 0));
    auto ft = phase_select_current(dq, ElementKind::TwoPhase);
    REQUIRE(ft.has_value());
    CHECK(ft->value == FaultCode::AB);
}

TEST_CASE("current PS: ground rows require both principles to agree") {
    // phi21 in the a-g row but phi20 in the b-g row: no agreement, no claim
    auto dq = dq_seq_super(polar_deg(1, 0), polar_deg(1, 5), polar_deg(1, 5 - 240));
    CHECK_FALSE(phase_select_current(dq, ElementKind::Ground).has_value());
}

TEST_CASE("current PS: b-g signature per sequence theory") {
    // SLG on phase b: I1 = a*Ib/3, I2 = a^2*Ib/3, I0 = Ib/3
    Complex a = fortescue_a();
    auto dq = dq_seq_super(a, a * a, Complex(1, 0));
    auto ft = phase_select_current(dq, ElementKind::Ground);
    REQUIRE(ft.has_value());
    CHECK(ft->value == FaultCode::BG);
}

TEST_CASE("voltage PS: Table-style b-c-g inputs") {
    DerivedQuantities dq;
    dq.v_seq.pos = polar_deg(0.8, 0.0);
    dq.v_seq.zero = polar_deg(0.1, 10.0);
    dq.v_seq.neg = polar_deg(0.1, 10.0 - 23.8);  // phi_v20 = -23.8
    dq.du_percent[0] = 63.2;
    dq.du_percent[1] = 87.3;
    dq.du_percent[2] = 89.5;
    auto ft = phase_select_voltage(dq, ElementKind::Ground);
    REQUIRE(ft.has_value());
    CHECK(ft->value == FaultCode::BCG);
    CHECK(ft->source == PsSource::VoltagePS);
}

TEST_CASE("voltage PS: phi_v21 of 240.7 degrees is a-b") {
    DerivedQuantities dq;
    dq.v_seq.pos = polar_deg(0.7, 0.0);
    dq.v_seq.neg = polar_deg(0.2, 240.7);
    auto ft = phase_select_voltage(dq, ElementKind::TwoPhase);
    REQUIRE(ft.has_value());
    CHECK(ft->value == FaultCode::AB);
}

TEST_CASE("voltage PS: phi_v20 of -58.7 with the deepest drop on phase a is a-g") {
    DerivedQuantities dq;
    dq.v_seq.pos = polar_deg(0.9, 0.0);
    dq.v_seq.zero = polar_deg(0.15, 20.0);
    dq.v_seq.neg = polar_deg(0.12, 20.0 - 58.7);
    dq.du_percent[0] = 96.1;
    dq.du_percent[1] = -7.5;  // healthy-phase voltage rise
    dq.du_percent[2] = 6.3;
    auto ft = phase_select_voltage(dq, ElementKind::Ground);
    REQUIRE(ft.has_value());
    CHECK(ft->value == FaultCode::AG);
}

TEST_CASE("loop angle reproduces the line angle for a forward bolted fault") {
    // superimposed current lags the loop voltage by the 70-degree line angle
    RelayConfig cfg = default_cfg();
    cfg.k0 = Complex(0, 0);
    DerivedQuantities dq;
    dq.v_actual = balanced_set(polar_deg(0.5, 0.0));
    dq.v_mem = balanced_set(polar_deg(1.0, 0.0));
    dq.i_super = balanced_set(polar_deg(2.0, -70.0));
    dq.i_seq_super = sequence_components(dq.i_super);
    auto m = loop_angle(FaultLoop::AG, dq, cfg, false);
    REQUIRE(m.has_value());
    CHECK(m->theta_deg == doctest::Approx(70.0).epsilon(1e-9));
    CHECK(direction_of(m->theta_deg) == Direction::Forward);

    // the same fault behind the relay flips the measured current
    dq.i_super = balanced_set(polar_deg(2.0, 110.0));
    dq.i_seq_super = sequence_components(dq.i_super);
    m = loop_angle(FaultLoop::AG, dq, cfg, false);
    REQUIRE(m.has_value());
    CHECK(m->theta_deg == doctest::Approx(250.0).epsilon(1e-9));
    CHECK(direction_of(m->theta_deg) == Direction::Reverse);
}

TEST_CASE("resistive overreach into the fourth quadrant stays forward") {
    CHECK(direction_of(-12.5) == Direction::Forward);
}

TEST_CASE("direction quadrant test with the stated tie-breaks") {
    CHECK(direction_of(9.5) == Direction::Forward);
    CHECK(direction_of(181.9) == Direction::Reverse);
    CHECK(direction_of(90.0) == Direction::Reverse);
    CHECK(direction_of(-90.0) == Direction::Reverse);
    CHECK(direction_of(270.0) == Direction::Reverse);
    CHECK(direction_of(89.999) == Direction::Forward);
    CHECK(direction_of(-89.999) == Direction::Forward);
}

TEST_CASE("cross-polarization is used when the faulted-loop voltage collapses") {
    RelayConfig cfg = default_cfg();
    DerivedQuantities dq;
    dq.v_actual = balanced_set(polar_deg(1.0, 0.0));
    dq.v_actual.a = polar_deg(0.01, 0.0);  // close-in a-g fault
    dq.v_mem = balanced_set(polar_deg(1.0, 0.0));
    dq.i_super = balanced_set(polar_deg(2.0, -60.0));
    dq.i_seq_super = sequence_components(dq.i_super);
    cfg.k0 = Complex(0, 0);
    auto m = loop_angle(FaultLoop::AG, dq, cfg, false);
    REQUIRE(m.has_value());
    CHECK(m->polarization_used == Polarization::CrossHealthy);
    // the healthy-phase surrogate carries the pre-fault angle of phase a
    CHECK(m->theta_deg == doctest::Approx(60.0).epsilon(1e-6));
}

TEST_CASE("memory polarization serves close-in three-phase faults") {
    RelayConfig cfg = default_cfg();
    cfg.k0 = Complex(0, 0);
    DerivedQuantities dq;
    dq.v_actual = balanced_set(polar_deg(0.001, 0.0));  // collapsed everywhere
    dq.v_mem = balanced_set(polar_deg(1.0, 0.0));
    dq.i_super = balanced_set(polar_deg(3.0, -72.0));
    dq.i_seq_super = sequence_components(dq.i_super);
    auto m = loop_angle(FaultLoop::AG, dq, cfg, true);
    REQUIRE(m.has_value());
    CHECK(m->polarization_used == Polarization::Memory);
    CHECK(m->theta_deg == doctest::Approx(72.0).epsilon(1e-6));
}

TEST_CASE("a dead loop current yields no directional claim") {
    RelayConfig cfg = default_cfg();
    DerivedQuantities dq;
    dq.v_actual = balanced_set(polar_deg(1.0, 0.0));
    dq.v_mem = dq.v_actual;
    CHECK_FALSE(loop_angle(FaultLoop::AB, dq, cfg, false).has_value());
}

TEST_CASE("angle ranges are tested modulo 360") {
    CHECK(angle_in_range_deg(-120.0, 210.0, 270.0));  // -120 == 240
    CHECK(angle_in_range_deg(240.7, 180.0, 300.0));
    CHECK(angle_in_range_deg(15.0, -15.0, 15.0));     // inclusive bound
    CHECK_FALSE(angle_in_range_deg(76.0, 45.0, 75.0));
}
