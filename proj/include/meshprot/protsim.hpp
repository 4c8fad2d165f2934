#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "meshprot/faultsolver.hpp"
#include "meshprot/network.hpp"
#include "meshprot/relay.hpp"

namespace meshprot {

struct RelayPlacement {
    std::string relay_id;
    std::string segment_id;
    std::string local_bus;
    std::string remote_bus;
    std::string breaker_id;
    std::string opponent_id;
    bool at_from_end = true;
};

/// Static protection topology: two relays per segment, bus groups GR_i,
/// opponent pairs and per-pair link latencies.
struct ProtectionSystem {
    std::map<std::string, RelayPlacement> relays;
    std::map<std::string, std::vector<std::string>> groups;  // bus -> sorted relay ids
    std::map<std::string, double> link_latency_s;            // relay -> opponent latency
    std::map<std::string, std::string> bay_breakers;         // source id -> breaker id

    std::vector<std::string> group_peers(const std::string& relay_id) const;
};

ProtectionSystem build_protection_system(const Network& net, double latency_us_per_km = 0.0);

struct LogEvent {
    double t = 0.0;
    std::string source;
    std::string kind;
    std::string detail;
};

struct RunReport {
    std::string network_name;
    std::string scenario_name;
    std::optional<FaultSpec> fault;
    double frequency_hz = 50.0;
    std::vector<LogEvent> events;
    std::map<std::string, RelayTrace> traces;
    bool cleared = false;
    double cleared_at_s = -1.0;
    std::vector<std::string> opened_breakers;  // in order of opening
    std::vector<std::string> blown_fuses;
    std::vector<std::string> isolated_buses;
    std::vector<std::string> expected_isolation;  // sorted device ids
    bool selectivity_ok = false;
    std::string diagnosis;

    bool relay_actions_clean() const;  // no trips, no s-signals, no RFB arming
};

struct RunConfig {
    int samples_per_cycle = 32;
    double t_bf_s = 0.24;  // breaker-failure timer
};

/// Drive the full protection system through one scenario: route blocking /
/// cancel / inter-trip messages, step every relay state machine, operate
/// breakers and fuses (re-solving the network after each switching event)
/// and judge clearance and selectivity.
RunReport run_scenario(const Network& base, const Scenario& scenario, const RunConfig& cfg = {});

}  // namespace meshprot
