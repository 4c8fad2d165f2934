#include <doctest.h>

#include "meshprot/builtin.hpp"
#include "meshprot/network.hpp"
#include "meshprot/parser.hpp"

using namespace meshprot;

namespace {

const char* kMinimalDoc = R"(
[network]
name = tiny
base_mva = 10
base_kv = 20
frequency_hz = 50

[bus]
id = B1
[bus]
id = B2

[segment]
id = L1_2
from = B1
to = B2
length_km = 2.0
z1_ohm_per_km = 0.2+0.38j
z0_ohm_per_km = 0.8+1.1j

[source]
id = GRID
bus = B1
kind = grid
ssc_mva = 250
)";

}  // namespace

TEST_CASE("minimal two-bus document parses") {
    Network n = parse_network(kMinimalDoc);
    CHECK(n.buses.size() == 2);
    CHECK(n.segments.size() == 1);
    CHECK(n.sources.size() == 1);
    CHECK(n.frequency_hz == 50.0);
}

TEST_CASE("mesh9 built-in validates with nine main buses plus substation") {
    Network n = builtin::mesh9();
    CHECK(n.buses.size() == 10);  // B1..B9 main line buses + substation B10
    CHECK(n.segments.size() == 13);
    CHECK(n.laterals.size() == 9);
    CHECK(n.find_segment("L3_7") != nullptr);  // interconnection segment
    int pv = 0, sg = 0, grid = 0;
    for (const auto& s : n.sources) {
        if (s.is_grid()) grid++;
        else if (s.is_inverter()) pv++;
        else sg++;
    }
    CHECK(grid == 1);
    CHECK(pv == 2);
    CHECK(sg == 2);
}

TEST_CASE("dangling bus reference is reported with the offending name") {
    std::string doc = kMinimalDoc;
    doc += R"(
[segment]
id = LX
from = B1
to = B99
length_km = 1.0
z1_ohm_per_km = 0.2+0.38j
z0_ohm_per_km = 0.8+1.1j
)";
    CHECK_THROWS_WITH_AS(parse_network(doc), doctest::Contains("B99"), std::runtime_error);
}

TEST_CASE("zero line reactance is rejected") {
    std::string doc = kMinimalDoc;
    doc += R"(
[segment]
id = LZ
from = B1
to = B2
length_km = 1.0
z1_ohm_per_km = 0.2+0j
z0_ohm_per_km = 0.8+1.1j
)";
    CHECK_THROWS_AS(parse_network(doc), std::runtime_error);
}

TEST_CASE("network file format round-trips exactly") {
    for (const auto& name : builtin::builtin_names()) {
        Network n = builtin::network_by_name_or_path(name);
        Network again = parse_network(render_network(n));
        CHECK(again == n);
    }
}

TEST_CASE("apply_scenario removes all DG units") {
    Network n = builtin::mesh9();
    Scenario sc;
    sc.name = "no-dg";
    for (const auto* id : {"SG1", "SG2", "PV1", "PV2"})
        sc.mutations.push_back({Mutation::RemoveSource{id}});
    Network out = apply_scenario(n, sc);
    int energized = 0;
    for (const auto& s : out.sources)
        if (out.source_energized(s)) energized++;
    CHECK(energized == 1);               // grid only
    CHECK(n.removed_sources.empty());    // base untouched
}

TEST_CASE("apply_scenario opens the loop at B3 and stays valid") {
    Network n = builtin::mesh9();
    Scenario sc;
    for (const auto* id : {"R3_2", "R3_7", "R3_4"})
        sc.mutations.push_back({Mutation::OpenBreaker{id}});
    Network out = apply_scenario(n, sc);
    CHECK(out.open_breakers.size() == 3);
}

TEST_CASE("apply_scenario with no mutations is the identity") {
    Network n = builtin::mesh9();
    Scenario sc;
    Network out = apply_scenario(n, sc);
    CHECK(out == n);
}

TEST_CASE("apply_scenario is pure") {
    Network n = builtin::mesh9();
    Scenario sc;
    sc.mutations.push_back({Mutation::RemoveSource{"SG1"}});
    sc.mutations.push_back({Mutation::SetMode{OperatingMode::Islanded}});
    Network a = apply_scenario(n, sc);
    Network b = apply_scenario(n, sc);
    CHECK(a == b);
}

TEST_CASE("mutation referencing a missing element fails") {
    Network n = builtin::mesh9();
    Scenario sc;
    sc.mutations.push_back({Mutation::RemoveSource{"NOPE"}});
    CHECK_THROWS_AS(apply_scenario(n, sc), std::runtime_error);
}

TEST_CASE("scenario section parses mutations, fault and options") {
    std::string doc = R"(
[scenario]
name = s2
sim_duration_s = 3
mode = islanded
remove_source = SG1
add_source_to_lateral = SG1:LAT2
fault_type = b-c-g
fault_location = bus:B2
fault_r_ohm = 2.5
fault_t_s = 0.1
primary_ps = voltage
fuse_failed = LAT2
stuck_breaker = CB2_3
latency_us_per_km = 4.9
)";
    Scenario sc = parse_scenario(doc);
    CHECK(sc.name == "s2");
    CHECK(sc.mutations.size() == 3);
    REQUIRE(sc.fault.has_value());
    CHECK(sc.fault->type == FaultType::PhasePhaseGround);
    CHECK(sc.fault->r_fault_ohm == 2.5);
    CHECK(sc.options.primary_ps == PrimaryPs::VoltageBased);
    CHECK(sc.options.failed_fuses == std::vector<std::string>{"LAT2"});
    CHECK(sc.options.latency_us_per_km == 4.9);
}

TEST_CASE("scenario 2 rehomes SG1 to the lateral endpoint") {
    Network n = builtin::mesh9();
    Scenario sc;
    sc.mutations.push_back({Mutation::RemoveSource{"SG1"}});
    sc.mutations.push_back({Mutation::AddSourceToLateral{"SG1", "LAT2"}});
    Network out = apply_scenario(n, sc);
    CHECK(out.find_source("SG1")->bus == "B2R");
    CHECK(out.removed_sources.empty());
}
