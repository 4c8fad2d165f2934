#include "meshprot/network.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace meshprot {

double Source::rating_mva() const {
    if (auto* g = std::get_if<GridEquivalent>(&kind)) return g->ssc_mva;
    if (auto* s = std::get_if<SynchronousGen>(&kind)) return s->rated_mva;
    return std::get<InverterDG>(kind).rated_mva;
}

std::string relay_name(const std::string& local_bus, const std::string& remote_bus) {
    auto strip = [](const std::string& b) {
        return (b.size() > 1 && (b[0] == 'B' || b[0] == 'b')) ? b.substr(1) : b;
    };
    return "R" + strip(local_bus) + "_" + strip(remote_bus);
}

std::string breaker_name(const std::string& local_bus, const std::string& remote_bus) {
    return "CB" + relay_name(local_bus, remote_bus).substr(1);
}

std::string breaker_for_relay(const std::string& relay_id) {
    return "CB" + relay_id.substr(1);
}

const LineSegment* Network::find_segment(const std::string& id) const {
    for (const auto& s : segments)
        if (s.id == id) return &s;
    return nullptr;
}

const Lateral* Network::find_lateral(const std::string& id) const {
    for (const auto& l : laterals)
        if (l.id == id) return &l;
    return nullptr;
}

const Lateral* Network::lateral_at_bus(const std::string& bus_id) const {
    for (const auto& l : laterals)
        if (l.host_bus == bus_id) return &l;
    return nullptr;
}

const Source* Network::find_source(const std::string& id) const {
    for (const auto& s : sources)
        if (s.id == id) return &s;
    return nullptr;
}

bool Network::has_bus(const std::string& id) const {
    for (const auto& b : buses)
        if (b.id == id) return true;
    for (const auto& l : laterals)
        if (l.endpoint_bus == id) return true;
    return false;
}

bool Network::source_energized(const Source& s) const {
    if (std::find(removed_sources.begin(), removed_sources.end(), s.id) != removed_sources.end())
        return false;
    if (s.is_grid() && mode == OperatingMode::Islanded) return false;
    return true;
}

std::string FaultSpec::describe() const {
    std::string t;
    auto pair_str = [&] {
        switch (pair) {
            case PhasePair::AB: return "a-b";
            case PhasePair::BC: return "b-c";
            default: return "c-a";
        }
    };
    switch (type) {
        case FaultType::ThreePhase: t = "a-b-c"; break;
        case FaultType::PhasePhase: t = pair_str(); break;
        case FaultType::PhasePhaseGround: t = std::string(pair_str()) + "-g"; break;
        case FaultType::SingleLineGround:
            t = phase == Phase::A ? "a-g" : (phase == Phase::B ? "b-g" : "c-g");
            break;
    }
    std::string loc;
    if (auto* seg = std::get_if<OnSegment>(&location))
        loc = seg->segment_id + "@" + std::to_string(seg->fraction);
    else if (auto* bus = std::get_if<AtBus>(&location))
        loc = bus->bus_id;
    else
        loc = std::get<AtLateralEndpoint>(location).lateral_id + "-endpoint";
    return t + " at " + loc + " Rf=" + std::to_string(r_fault_ohm);
}

void Network::validate() const {
    if (frequency_hz != 50.0 && frequency_hz != 60.0)
        throw std::runtime_error("network '" + name + "': frequency_hz must be 50 or 60");
    if (base_mva <= 0 || base_kv <= 0)
        throw std::runtime_error("network '" + name + "': base quantities must be positive");

    std::set<std::string> bus_ids;
    for (const auto& b : buses) {
        if (!bus_ids.insert(b.id).second)
            throw std::runtime_error("duplicate bus id '" + b.id + "'");
    }
    std::set<std::string> all_ids = bus_ids;
    for (const auto& l : laterals) {
        if (!all_ids.insert(l.endpoint_bus).second)
            throw std::runtime_error("lateral '" + l.id + "': endpoint bus '" + l.endpoint_bus +
                                     "' collides with an existing bus");
    }

    std::set<std::string> seg_ids;
    for (const auto& s : segments) {
        if (!seg_ids.insert(s.id).second)
            throw std::runtime_error("duplicate segment id '" + s.id + "'");
        if (!bus_ids.count(s.from_bus))
            throw std::runtime_error("segment '" + s.id + "' references unknown bus " + s.from_bus);
        if (!bus_ids.count(s.to_bus))
            throw std::runtime_error("segment '" + s.id + "' references unknown bus " + s.to_bus);
        if (s.length_km <= 0)
            throw std::runtime_error("segment '" + s.id + "': length_km must be > 0");
        if (s.z1_ohm_per_km.real() < 0 || s.z0_ohm_per_km.real() < 0)
            throw std::runtime_error("segment '" + s.id + "': negative resistance");
        if (s.z1_ohm_per_km.imag() <= 0 || s.z0_ohm_per_km.imag() <= 0)
            throw std::runtime_error("segment '" + s.id + "': reactance must be > 0");
    }

    std::set<std::string> hosts;
    for (const auto& l : laterals) {
        if (!bus_ids.count(l.host_bus))
            throw std::runtime_error("lateral '" + l.id + "' references unknown bus " + l.host_bus);
        if (!hosts.insert(l.host_bus).second)
            throw std::runtime_error("bus '" + l.host_bus + "' hosts more than one lateral");
        if (l.load_p_mw < 0)
            throw std::runtime_error("lateral '" + l.id + "': load_p_mw must be >= 0");
        if (!toc_curves.count(l.toc_id))
            throw std::runtime_error("lateral '" + l.id + "' references unknown toc curve '" +
                                     l.toc_id + "'");
        if (l.series_z1_ohm.imag() <= 0)
            throw std::runtime_error("lateral '" + l.id + "': series reactance must be > 0");
    }
    for (const auto& [id, curve] : toc_curves) {
        (void)id;
        curve.validate();
    }

    for (const auto& s : sources) {
        if (!has_bus(s.bus))
            throw std::runtime_error("source '" + s.id + "' references unknown bus " + s.bus);
        if (s.rating_mva() <= 0)
            throw std::runtime_error("source '" + s.id + "': rating must be > 0");
        if (auto* inv = std::get_if<InverterDG>(&s.kind)) {
            if (inv->current_limit_pu < 1.0 || inv->current_limit_pu > 2.0)
                throw std::runtime_error("source '" + s.id +
                                         "': current_limit_pu must be in [1.0, 2.0]");
        }
    }

    bool any_energized = false;
    for (const auto& s : sources)
        if (source_energized(s)) any_energized = true;
    if (!any_energized)
        throw std::runtime_error("network '" + name + "': no energized source in mode");
}

namespace {

struct MutVisitor {
    Network& n;
    void operator()(const Mutation::OpenBreaker& m) const {
        // accept either a relay id or a breaker id
        std::string cb = m.relay_id.rfind("CB", 0) == 0 ? m.relay_id : breaker_for_relay(m.relay_id);
        bool known = false;
        for (const auto& s : n.segments) {
            if (breaker_name(s.from_bus, s.to_bus) == cb || breaker_name(s.to_bus, s.from_bus) == cb)
                known = true;
        }
        if (!known)
            throw std::runtime_error("open_breaker: no breaker '" + cb + "' in network");
        if (std::find(n.open_breakers.begin(), n.open_breakers.end(), cb) == n.open_breakers.end())
            n.open_breakers.push_back(cb);
    }
    void operator()(const Mutation::RemoveSource& m) const {
        if (!n.find_source(m.source_id))
            throw std::runtime_error("remove_source: unknown source '" + m.source_id + "'");
        if (std::find(n.removed_sources.begin(), n.removed_sources.end(), m.source_id) ==
            n.removed_sources.end())
            n.removed_sources.push_back(m.source_id);
    }
    void operator()(const Mutation::AddSourceToLateral& m) const {
        const Lateral* lat = n.find_lateral(m.lateral_id);
        if (!lat)
            throw std::runtime_error("add_source_to_lateral: unknown lateral '" + m.lateral_id + "'");
        bool found = false;
        for (auto& s : n.sources) {
            if (s.id == m.source_id) {
                s.bus = lat->endpoint_bus;
                found = true;
            }
        }
        if (!found)
            throw std::runtime_error("add_source_to_lateral: unknown source '" + m.source_id + "'");
        // re-homing brings a previously removed source back
        auto it = std::find(n.removed_sources.begin(), n.removed_sources.end(), m.source_id);
        if (it != n.removed_sources.end()) n.removed_sources.erase(it);
    }
    void operator()(const Mutation::SetMode& m) const { n.mode = m.mode; }
    void operator()(const Mutation::LoadStep& m) const {
        if (!n.find_lateral(m.lateral_id))
            throw std::runtime_error("load_step: unknown lateral '" + m.lateral_id + "'");
        // carried at runtime by the simulator; nothing to mutate before t=0
    }
};

}  // namespace

Network apply_scenario(const Network& base, const Scenario& scenario) {
    Network n = base;
    for (const auto& m : scenario.mutations) std::visit(MutVisitor{n}, m.op);
    n.validate();
    return n;
}

}  // namespace meshprot
