#include "meshprot/parser.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace meshprot {

namespace {

struct Section {
    std::string name;
    int line = 0;
    std::vector<std::pair<std::string, std::string>> entries;
    mutable std::map<std::string, bool> seen;

    bool has(const std::string& key) const {
        for (const auto& [k, v] : entries)
            if (k == key) return true;
        return false;
    }
    std::string get(const std::string& key) const {
        for (const auto& [k, v] : entries)
            if (k == key) { seen[key] = true; return v; }
        throw ParseError("[" + name + "] near line " + std::to_string(line) +
                         ": missing required key '" + key + "'");
    }
    std::string get_or(const std::string& key, const std::string& dflt) const {
        return has(key) ? get(key) : dflt;
    }
    /// All values for a repeatable key, splitting comma lists.
    std::vector<std::string> get_list(const std::string& key) const {
        std::vector<std::string> out;
        for (const auto& [k, v] : entries) {
            if (k != key) continue;
            seen[key] = true;
            std::stringstream ss(v);
            std::string item;
            while (std::getline(ss, item, ',')) {
                size_t b = item.find_first_not_of(" \t");
                size_t e = item.find_last_not_of(" \t");
                if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
            }
        }
        return out;
    }
};

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<Section> tokenize(const std::string& doc) {
    std::vector<Section> sections;
    std::istringstream in(doc);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError("line " + std::to_string(lineno) + ": malformed section header");
            sections.push_back(Section{trim(line.substr(1, line.size() - 2)), lineno, {}, {}});
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(lineno) + ": expected key = value");
        if (sections.empty())
            throw ParseError("line " + std::to_string(lineno) + ": entry outside any section");
        sections.back().entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return sections;
}

double parse_double(const Section& sec, const std::string& key, const std::string& text) {
    try {
        size_t pos = 0;
        double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ParseError("[" + sec.name + "] near line " + std::to_string(sec.line) + ": key '" +
                         key + "': not a number: '" + text + "'");
    }
}

double get_double(const Section& sec, const std::string& key) {
    return parse_double(sec, key, sec.get(key));
}

double get_double_or(const Section& sec, const std::string& key, double dflt) {
    if (!sec.has(key)) return dflt;
    return parse_double(sec, key, sec.get(key));
}

bool get_bool(const Section& sec, const std::string& key, bool dflt) {
    if (!sec.has(key)) return dflt;
    std::string v = sec.get(key);
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    throw ParseError("[" + sec.name + "] key '" + key + "': not a boolean: '" + v + "'");
}

/// "0.2+0.38j", "-1.5-2j", "3.0" -> complex. The imaginary part, when
/// present, is marked by a trailing j.
Complex parse_complex(const Section& sec, const std::string& key) {
    std::string text = sec.get(key);
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    auto fail = [&]() -> ParseError {
        return ParseError("[" + sec.name + "] near line " + std::to_string(sec.line) + ": key '" +
                          key + "': malformed complex number '" + text + "'");
    };
    if (s.empty()) throw fail();
    if (s.back() != 'j' && s.back() != 'J') {
        try {
            return Complex(std::stod(s), 0.0);
        } catch (const std::exception&) {
            throw fail();
        }
    }
    s.pop_back();  // drop j
    // split at the last +/- that is not an exponent sign and not leading
    size_t split = std::string::npos;
    for (size_t k = s.size(); k-- > 1;) {
        if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
            split = k;
            break;
        }
    }
    try {
        if (split == std::string::npos) return Complex(0.0, std::stod(s));
        double re = std::stod(s.substr(0, split));
        std::string im_str = s.substr(split);
        double im = (im_str == "+" ? 1.0 : im_str == "-" ? -1.0 : std::stod(im_str));
        return Complex(re, im);
    } catch (const std::exception&) {
        throw fail();
    }
}

void parse_ratio(const Section& sec, const std::string& key, double& prim, double& sec_out) {
    if (!sec.has(key)) return;
    std::string v = sec.get(key);
    size_t colon = v.find(':');
    if (colon == std::string::npos)
        throw ParseError("[" + sec.name + "] key '" + key + "': expected primary:secondary");
    prim = parse_double(sec, key, trim(v.substr(0, colon)));
    sec_out = parse_double(sec, key, trim(v.substr(colon + 1)));
}

OperatingMode parse_mode(const Section& sec, const std::string& v) {
    if (v == "grid_connected" || v == "gc") return OperatingMode::GridConnected;
    if (v == "islanded" || v == "isl") return OperatingMode::Islanded;
    throw ParseError("[" + sec.name + "]: unknown mode '" + v + "'");
}

FaultType parse_fault_type(const Section& sec, const std::string& v, PhasePair& pair, Phase& ph) {
    if (v == "a-b-c" || v == "abc" || v == "3ph") return FaultType::ThreePhase;
    if (v == "a-b") { pair = PhasePair::AB; return FaultType::PhasePhase; }
    if (v == "b-c") { pair = PhasePair::BC; return FaultType::PhasePhase; }
    if (v == "c-a") { pair = PhasePair::CA; return FaultType::PhasePhase; }
    if (v == "a-b-g") { pair = PhasePair::AB; return FaultType::PhasePhaseGround; }
    if (v == "b-c-g") { pair = PhasePair::BC; return FaultType::PhasePhaseGround; }
    if (v == "c-a-g") { pair = PhasePair::CA; return FaultType::PhasePhaseGround; }
    if (v == "a-g") { ph = Phase::A; return FaultType::SingleLineGround; }
    if (v == "b-g") { ph = Phase::B; return FaultType::SingleLineGround; }
    if (v == "c-g") { ph = Phase::C; return FaultType::SingleLineGround; }
    throw ParseError("[" + sec.name + "]: unknown fault type '" + v + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string it;
    while (std::getline(ss, it, sep)) out.push_back(trim(it));
    return out;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_complex(const Complex& z) {
    std::string s = fmt_double(z.real());
    if (z.imag() >= 0) s += "+";
    s += fmt_double(z.imag()) + "j";
    return s;
}

}  // namespace

Network parse_network(const std::string& document) {
    Network n;
    bool saw_network = false;
    for (const auto& sec : tokenize(document)) {
        if (sec.name == "network") {
            saw_network = true;
            n.name = sec.get_or("name", "unnamed");
            n.base_mva = get_double_or(sec, "base_mva", 10.0);
            n.base_kv = get_double_or(sec, "base_kv", 20.0);
            n.frequency_hz = get_double_or(sec, "frequency_hz", 50.0);
            if (sec.has("mode")) n.mode = parse_mode(sec, sec.get("mode"));
            parse_ratio(sec, "ct_ratio", n.ct_primary_a, n.ct_secondary_a);
            parse_ratio(sec, "vt_ratio", n.vt_primary_v, n.vt_secondary_v);
        } else if (sec.name == "bus") {
            n.buses.push_back(Bus{sec.get("id")});
        } else if (sec.name == "segment") {
            LineSegment s;
            s.id = sec.get("id");
            s.from_bus = sec.get("from");
            s.to_bus = sec.get("to");
            s.length_km = get_double(sec, "length_km");
            s.z1_ohm_per_km = parse_complex(sec, "z1_ohm_per_km");
            s.z0_ohm_per_km = parse_complex(sec, "z0_ohm_per_km");
            s.breaker_interrupting_s = get_double_or(sec, "interrupting_s", 0.05);
            n.segments.push_back(std::move(s));
        } else if (sec.name == "lateral") {
            Lateral l;
            l.id = sec.get("id");
            l.host_bus = sec.get("host");
            l.endpoint_bus = sec.get("endpoint");
            l.toc_id = sec.get("toc");
            l.series_z1_ohm = parse_complex(sec, "series_z1_ohm");
            l.series_z0_ohm = parse_complex(sec, "series_z0_ohm");
            l.load_p_mw = get_double(sec, "load_p_mw");
            l.load_q_mvar = get_double_or(sec, "load_q_mvar", 0.0);
            l.transformer_double_side_grounded = get_bool(sec, "double_side_grounded", false);
            n.laterals.push_back(std::move(l));
        } else if (sec.name == "source") {
            Source s;
            s.id = sec.get("id");
            s.bus = sec.get("bus");
            std::string kind = sec.get("kind");
            if (kind == "grid") {
                GridEquivalent g;
                g.ssc_mva = get_double(sec, "ssc_mva");
                g.x_over_r = get_double_or(sec, "x_over_r", 10.0);
                s.kind = g;
            } else if (kind == "sync_gen") {
                SynchronousGen g;
                g.rated_mva = get_double(sec, "rated_mva");
                g.xd_transient_pu = get_double_or(sec, "xd_transient_pu", 0.25);
                s.kind = g;
            } else if (kind == "inverter") {
                InverterDG g;
                g.rated_mva = get_double(sec, "rated_mva");
                g.current_limit_pu = get_double_or(sec, "current_limit_pu", 1.2);
                g.reactive_support = get_bool(sec, "reactive_support", false);
                g.dispatch_p_mw = get_double_or(sec, "dispatch_p_mw", -1.0);
                g.dispatch_q_mvar = get_double_or(sec, "dispatch_q_mvar", 0.0);
                s.kind = g;
            } else {
                throw ParseError("[source] '" + s.id + "': unknown kind '" + kind + "'");
            }
            s.steps_up_grounded_mv = get_bool(sec, "grounded_mv", true);
            n.sources.push_back(std::move(s));
        } else if (sec.name == "toc") {
            TocCurve c;
            c.id = sec.get("id");
            for (const auto& pt : sec.get_list("points")) {
                auto parts = split(pt, ':');
                if (parts.size() != 2)
                    throw ParseError("[toc] '" + c.id + "': point '" + pt +
                                     "' must be current:time");
                c.points.emplace_back(parse_double(sec, "points", parts[0]),
                                      parse_double(sec, "points", parts[1]));
            }
            n.toc_curves[c.id] = std::move(c);
        } else if (sec.name == "scenario") {
            // scenario sections live in the same format; ignored here
        } else {
            throw ParseError("line " + std::to_string(sec.line) + ": unknown section [" +
                             sec.name + "]");
        }
    }
    if (!saw_network) throw ParseError("document has no [network] section");
    n.validate();
    return n;
}

Scenario parse_scenario(const std::string& document) {
    Scenario sc;
    bool found = false;
    for (const auto& sec : tokenize(document)) {
        if (sec.name != "scenario") continue;
        if (found) throw ParseError("document has more than one [scenario] section");
        found = true;
        sc.name = sec.get_or("name", "scenario");
        sc.sim_duration_s = get_double_or(sec, "sim_duration_s", 120.0);
        if (sec.has("mode"))
            sc.mutations.push_back({Mutation::SetMode{parse_mode(sec, sec.get("mode"))}});
        for (const auto& id : sec.get_list("remove_source"))
            sc.mutations.push_back({Mutation::RemoveSource{id}});
        for (const auto& spec : sec.get_list("add_source_to_lateral")) {
            auto parts = split(spec, ':');
            if (parts.size() != 2)
                throw ParseError("[scenario] add_source_to_lateral: expected SOURCE:LATERAL");
            sc.mutations.push_back({Mutation::AddSourceToLateral{parts[0], parts[1]}});
        }
        for (const auto& id : sec.get_list("open_breaker"))
            sc.mutations.push_back({Mutation::OpenBreaker{id}});
        for (const auto& spec : sec.get_list("load_step")) {
            auto parts = split(spec, ':');
            if (parts.size() != 3)
                throw ParseError("[scenario] load_step: expected LATERAL:MULTIPLIER:T_S");
            sc.mutations.push_back({Mutation::LoadStep{
                parts[0], parse_double(sec, "load_step", parts[1]),
                parse_double(sec, "load_step", parts[2])}});
        }
        if (sec.has("fault_type")) {
            FaultSpec f;
            f.type = parse_fault_type(sec, sec.get("fault_type"), f.pair, f.phase);
            std::string loc = sec.get("fault_location");
            auto parts = split(loc, ':');
            if (parts.size() == 3 && parts[0] == "segment") {
                double frac = parse_double(sec, "fault_location", parts[2]);
                if (frac <= 0.0 || frac >= 1.0)
                    throw ParseError("[scenario] fault_location: fraction must be inside (0,1)");
                f.location = FaultSpec::OnSegment{parts[1], frac};
            } else if (parts.size() == 2 && parts[0] == "bus") {
                f.location = FaultSpec::AtBus{parts[1]};
            } else if (parts.size() == 2 && parts[0] == "lateral_endpoint") {
                f.location = FaultSpec::AtLateralEndpoint{parts[1]};
            } else {
                throw ParseError("[scenario] fault_location: expected segment:ID:FRACTION, "
                                 "bus:ID or lateral_endpoint:ID");
            }
            f.r_fault_ohm = get_double_or(sec, "fault_r_ohm", 0.0);
            if (f.r_fault_ohm < 0) throw ParseError("[scenario] fault_r_ohm must be >= 0");
            f.t_inception_s = get_double_or(sec, "fault_t_s", 0.1);
            if (f.t_inception_s <= 0) throw ParseError("[scenario] fault_t_s must be > 0");
            sc.fault = f;
        }
        auto& o = sc.options;
        o.ground_element_enabled = get_bool(sec, "ground_element", true);
        if (sec.has("primary_ps")) {
            std::string v = sec.get("primary_ps");
            if (v == "current") o.primary_ps = PrimaryPs::CurrentBased;
            else if (v == "voltage") o.primary_ps = PrimaryPs::VoltageBased;
            else throw ParseError("[scenario] primary_ps must be current or voltage");
        }
        if (sec.has("dashed_frame")) o.dashed_frame_enabled = get_bool(sec, "dashed_frame", true);
        o.dotted_part_enabled = get_bool(sec, "dotted_part", true);
        o.latency_us_per_km = get_double_or(sec, "latency_us_per_km", 0.0);
        o.failed_fuses = sec.get_list("fuse_failed");
        o.stuck_breakers = sec.get_list("stuck_breaker");
        o.trip_disabled = sec.get_list("trip_disabled");
    }
    if (!found) throw ParseError("document has no [scenario] section");
    return sc;
}

std::string render_network(const Network& n) {
    std::ostringstream out;
    out << "[network]\n";
    out << "name = " << n.name << "\n";
    out << "base_mva = " << fmt_double(n.base_mva) << "\n";
    out << "base_kv = " << fmt_double(n.base_kv) << "\n";
    out << "frequency_hz = " << fmt_double(n.frequency_hz) << "\n";
    out << "mode = " << (n.mode == OperatingMode::GridConnected ? "grid_connected" : "islanded")
        << "\n";
    out << "ct_ratio = " << fmt_double(n.ct_primary_a) << ":" << fmt_double(n.ct_secondary_a)
        << "\n";
    out << "vt_ratio = " << fmt_double(n.vt_primary_v) << ":" << fmt_double(n.vt_secondary_v)
        << "\n";
    for (const auto& b : n.buses) out << "\n[bus]\nid = " << b.id << "\n";
    for (const auto& s : n.segments) {
        out << "\n[segment]\n";
        out << "id = " << s.id << "\nfrom = " << s.from_bus << "\nto = " << s.to_bus << "\n";
        out << "length_km = " << fmt_double(s.length_km) << "\n";
        out << "z1_ohm_per_km = " << fmt_complex(s.z1_ohm_per_km) << "\n";
        out << "z0_ohm_per_km = " << fmt_complex(s.z0_ohm_per_km) << "\n";
        out << "interrupting_s = " << fmt_double(s.breaker_interrupting_s) << "\n";
    }
    for (const auto& l : n.laterals) {
        out << "\n[lateral]\n";
        out << "id = " << l.id << "\nhost = " << l.host_bus << "\nendpoint = " << l.endpoint_bus
            << "\n";
        out << "toc = " << l.toc_id << "\n";
        out << "series_z1_ohm = " << fmt_complex(l.series_z1_ohm) << "\n";
        out << "series_z0_ohm = " << fmt_complex(l.series_z0_ohm) << "\n";
        out << "load_p_mw = " << fmt_double(l.load_p_mw) << "\n";
        out << "load_q_mvar = " << fmt_double(l.load_q_mvar) << "\n";
        out << "double_side_grounded = " << (l.transformer_double_side_grounded ? "true" : "false")
            << "\n";
    }
    for (const auto& s : n.sources) {
        out << "\n[source]\n";
        out << "id = " << s.id << "\nbus = " << s.bus << "\n";
        if (auto* g = std::get_if<GridEquivalent>(&s.kind)) {
            out << "kind = grid\n";
            out << "ssc_mva = " << fmt_double(g->ssc_mva) << "\n";
            out << "x_over_r = " << fmt_double(g->x_over_r) << "\n";
        } else if (auto* sg = std::get_if<SynchronousGen>(&s.kind)) {
            out << "kind = sync_gen\n";
            out << "rated_mva = " << fmt_double(sg->rated_mva) << "\n";
            out << "xd_transient_pu = " << fmt_double(sg->xd_transient_pu) << "\n";
        } else {
            const auto& inv = std::get<InverterDG>(s.kind);
            out << "kind = inverter\n";
            out << "rated_mva = " << fmt_double(inv.rated_mva) << "\n";
            out << "current_limit_pu = " << fmt_double(inv.current_limit_pu) << "\n";
            out << "reactive_support = " << (inv.reactive_support ? "true" : "false") << "\n";
            out << "dispatch_p_mw = " << fmt_double(inv.dispatch_p_mw) << "\n";
            out << "dispatch_q_mvar = " << fmt_double(inv.dispatch_q_mvar) << "\n";
        }
        out << "grounded_mv = " << (s.steps_up_grounded_mv ? "true" : "false") << "\n";
    }
    for (const auto& [id, c] : n.toc_curves) {
        out << "\n[toc]\nid = " << id << "\npoints = ";
        for (size_t k = 0; k < c.points.size(); ++k) {
            if (k) out << ", ";
            out << fmt_double(c.points[k].first) << ":" << fmt_double(c.points[k].second);
        }
        out << "\n";
    }
    return out.str();
}

namespace {
std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}
}  // namespace

Network load_network_file(const std::string& path) { return parse_network(read_file(path)); }
Scenario load_scenario_file(const std::string& path) { return parse_scenario(read_file(path)); }

}  // namespace meshprot
