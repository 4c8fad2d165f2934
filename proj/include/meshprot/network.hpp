#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "meshprot/phasor.hpp"
#include "meshprot/toc.hpp"

namespace meshprot {

enum class OperatingMode { GridConnected, Islanded };

struct Bus {
    std::string id;
    bool operator==(const Bus&) const = default;
};

/// Main line segment between two buses. Protected by one relay/breaker
/// pair per end; those are synthesized by the protection-system builder,
/// the data model only carries the electrical description.
struct LineSegment {
    std::string id;
    std::string from_bus;
    std::string to_bus;
    Complex z1_ohm_per_km;  // positive (= negative) sequence
    Complex z0_ohm_per_km;
    double length_km = 0.0;
    double breaker_interrupting_s = 0.05;  // both ends
    bool operator==(const LineSegment&) const = default;
};

/// Lateral departing from a main bus: series impedance to an endpoint bus
/// carrying the aggregated load, protected at its departure by a fuse or
/// overcurrent device described by a TOC curve.
struct Lateral {
    std::string id;
    std::string host_bus;
    std::string endpoint_bus;
    std::string toc_id;
    Complex series_z1_ohm;
    Complex series_z0_ohm;
    double load_p_mw = 0.0;
    double load_q_mvar = 0.0;
    bool transformer_double_side_grounded = false;
    bool operator==(const Lateral&) const = default;
};

struct GridEquivalent {
    double ssc_mva = 0.0;
    double x_over_r = 10.0;
    bool operator==(const GridEquivalent&) const = default;
};

struct SynchronousGen {
    double rated_mva = 0.0;
    double xd_transient_pu = 0.25;  // on own rating
    bool operator==(const SynchronousGen&) const = default;
};

struct InverterDG {
    double rated_mva = 0.0;
    double current_limit_pu = 1.2;  // of rated current
    bool reactive_support = false;
    double dispatch_p_mw = -1.0;   // < 0: defaults to 80% of rating
    double dispatch_q_mvar = 0.0;
    bool operator==(const InverterDG&) const = default;
};

struct Source {
    std::string id;
    std::string bus;  // main bus or lateral endpoint bus
    std::variant<GridEquivalent, SynchronousGen, InverterDG> kind;
    bool steps_up_grounded_mv = true;

    bool is_grid() const { return std::holds_alternative<GridEquivalent>(kind); }
    bool is_inverter() const { return std::holds_alternative<InverterDG>(kind); }
    double rating_mva() const;
    bool operator==(const Source&) const = default;
};

enum class FaultType {
    ThreePhase,
    PhasePhase,       // pair
    PhasePhaseGround, // pair
    SingleLineGround, // phase
};

enum class PhasePair { AB, BC, CA };
enum class Phase { A, B, C };

struct FaultSpec {
    FaultType type = FaultType::ThreePhase;
    PhasePair pair = PhasePair::AB;  // for 2PH / 2PHG
    Phase phase = Phase::A;          // for SLG
    struct OnSegment { std::string segment_id; double fraction; };
    struct AtBus { std::string bus_id; };
    struct AtLateralEndpoint { std::string lateral_id; };
    std::variant<OnSegment, AtBus, AtLateralEndpoint> location;
    double r_fault_ohm = 0.0;
    double t_inception_s = 0.1;

    std::string describe() const;
};

/// Scenario mutations, applied to a deep copy of the base network
/// before t = 0 (except LoadStep, which carries its own time).
struct Mutation {
    struct OpenBreaker { std::string relay_id; };
    struct RemoveSource { std::string source_id; };
    struct AddSourceToLateral { std::string source_id; std::string lateral_id; };
    struct SetMode { OperatingMode mode; };
    struct LoadStep { std::string lateral_id; double multiplier; double t_s; };
    std::variant<OpenBreaker, RemoveSource, AddSourceToLateral, SetMode, LoadStep> op;
};

enum class PrimaryPs { CurrentBased, VoltageBased };

/// Per-run protection feature flags. Only feature switches, never numeric
/// thresholds: the relays are setting-free by design.
struct ProtectionOptions {
    bool ground_element_enabled = true;
    PrimaryPs primary_ps = PrimaryPs::CurrentBased;
    std::optional<bool> dashed_frame_enabled;  // default derived from lateral grounding
    bool dotted_part_enabled = true;
    double latency_us_per_km = 0.0;
    std::vector<std::string> failed_fuses;     // lateral ids that never blow
    std::vector<std::string> stuck_breakers;   // breaker ids that never open
    std::vector<std::string> trip_disabled;    // relay ids whose trip output is cut
};

struct Scenario {
    std::string name;
    std::vector<Mutation> mutations;
    std::optional<FaultSpec> fault;
    double sim_duration_s = 120.0;
    ProtectionOptions options;
};

struct Network {
    std::string name;
    double base_mva = 10.0;
    double base_kv = 20.0;  // line-to-line
    double frequency_hz = 50.0;
    OperatingMode mode = OperatingMode::GridConnected;
    double ct_primary_a = 200.0;
    double ct_secondary_a = 5.0;
    double vt_primary_v = 20000.0;
    double vt_secondary_v = 100.0;

    std::vector<Bus> buses;  // main buses; lateral endpoints are implicit
    std::vector<LineSegment> segments;
    std::vector<Lateral> laterals;
    std::vector<Source> sources;
    std::map<std::string, TocCurve> toc_curves;

    // Pre-opened breakers and removed sources recorded by apply_scenario.
    std::vector<std::string> open_breakers;
    std::vector<std::string> removed_sources;

    double z_base_ohm() const { return base_kv * base_kv / base_mva; }
    double i_base_a() const { return base_mva * 1e6 / (std::sqrt(3.0) * base_kv * 1e3); }
    double period_s() const { return 1.0 / frequency_hz; }
    double ct_ratio() const { return ct_primary_a / ct_secondary_a; }
    double vt_ratio() const { return vt_primary_v / vt_secondary_v; }

    const LineSegment* find_segment(const std::string& id) const;
    const Lateral* find_lateral(const std::string& id) const;
    const Lateral* lateral_at_bus(const std::string& bus_id) const;
    const Source* find_source(const std::string& id) const;
    bool has_bus(const std::string& id) const;
    bool source_energized(const Source& s) const;

    /// Throws std::runtime_error describing the first violation found.
    void validate() const;

    bool operator==(const Network&) const = default;
};

/// Apply a scenario's pre-t0 mutations to a deep copy; the base network
/// is left untouched. Pure: same inputs give the identical result.
Network apply_scenario(const Network& base, const Scenario& scenario);

/// Breaker/relay naming scheme shared by the whole project:
/// relay "R2_3" sits at bus B2 on the segment towards B3 and drives
/// breaker "CB2_3".
std::string relay_name(const std::string& local_bus, const std::string& remote_bus);
std::string breaker_name(const std::string& local_bus, const std::string& remote_bus);
std::string breaker_for_relay(const std::string& relay_id);

}  // namespace meshprot
