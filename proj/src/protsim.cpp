#include "meshprot/protsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace meshprot {

std::vector<std::string> ProtectionSystem::group_peers(const std::string& relay_id) const {
    std::vector<std::string> peers;
    auto it = relays.find(relay_id);
    if (it == relays.end()) return peers;
    for (const auto& id : groups.at(it->second.local_bus))
        if (id != relay_id) peers.push_back(id);
    return peers;
}

ProtectionSystem build_protection_system(const Network& net, double latency_us_per_km) {
    ProtectionSystem ps;
    for (const auto& seg : net.segments) {
        RelayPlacement a, b;
        a.relay_id = relay_name(seg.from_bus, seg.to_bus);
        a.segment_id = seg.id;
        a.local_bus = seg.from_bus;
        a.remote_bus = seg.to_bus;
        a.breaker_id = breaker_name(seg.from_bus, seg.to_bus);
        a.at_from_end = true;
        b.relay_id = relay_name(seg.to_bus, seg.from_bus);
        b.segment_id = seg.id;
        b.local_bus = seg.to_bus;
        b.remote_bus = seg.from_bus;
        b.breaker_id = breaker_name(seg.to_bus, seg.from_bus);
        b.at_from_end = false;
        a.opponent_id = b.relay_id;
        b.opponent_id = a.relay_id;
        double lat = latency_us_per_km * 1e-6 * seg.length_km;
        ps.link_latency_s[a.relay_id] = lat;
        ps.link_latency_s[b.relay_id] = lat;
        ps.relays[a.relay_id] = a;
        ps.relays[b.relay_id] = b;
        ps.groups[seg.from_bus].push_back(a.relay_id);
        ps.groups[seg.to_bus].push_back(b.relay_id);
    }
    for (auto& [bus, members] : ps.groups) std::sort(members.begin(), members.end());
    for (const auto& src : net.sources) ps.bay_breakers[src.id] = "CB_" + src.id;
    return ps;
}

bool RunReport::relay_actions_clean() const {
    // sp1/sp2 alone are tolerated: a load rise can legitimately reach the
    // RFB, whose own conditions must then hold it back
    for (const auto& e : events) {
        if (e.kind == "trip" || e.kind == "sg" || e.kind == "rfb_timer_armed" ||
            e.kind == "breaker_open" || e.kind == "fuse_clear")
            return false;
    }
    return true;
}

namespace {

enum class EvKind : int {
    FaultOn = 0,
    LoadStep = 0,
    BreakerOpen = 1,
    FuseClear = 1,
    MsgArrive = 2,
    RfbTimer = 3,
    BfCheck = 3,
    Sample = 4,
};

struct Event {
    double t = 0.0;
    int prio = 0;
    std::string source;
    uint64_t seq = 0;
    int what = 0;  // discriminator, see Simulation::process
    // payload fields (only the relevant ones are set per kind)
    std::string a, b;
    Direction dir = Direction::Forward;
    int64_t sample_k = 0;
    uint64_t gen = 0;
};

struct EventOrder {
    bool operator()(const Event& x, const Event& y) const {
        if (x.t != y.t) return x.t > y.t;
        if (x.prio != y.prio) return x.prio > y.prio;
        if (x.source != y.source) return x.source > y.source;
        return x.seq > y.seq;
    }
};

constexpr int kFaultOn = 1, kLoadStep = 2, kBreakerOpen = 3, kFuseClear = 4, kMsg = 5,
              kRfbTimer = 6, kBfCheck = 7, kSample = 8;

struct FuseModel {
    double accumulated = 0.0;  // fraction of melting progress
    double last_t = 0.0;
    std::optional<double> rate;  // 1 / melt time at present current
    uint64_t gen = 0;
    bool failed = false;
    bool blown = false;
};

class Simulation {
  public:
    Simulation(const Network& base, const Scenario& scenario, const RunConfig& cfg)
        : scenario_(scenario),
          cfg_(cfg),
          net_(apply_scenario(base, scenario)),
          solver_(net_),
          ps_(build_protection_system(net_, scenario.options.latency_us_per_km)) {
        dt_ = net_.period_s() / cfg_.samples_per_cycle;
        report_.network_name = net_.name;
        report_.scenario_name = scenario_.name;
        report_.fault = scenario_.fault;
        report_.frequency_hz = net_.frequency_hz;
    }

    RunReport run();

  private:
    void log(double t, const std::string& source, const std::string& kind,
             const std::string& detail = "") {
        if (std::getenv("MESHPROT_TRACE"))
            std::fprintf(stderr, "%.6f %s %s %s\n", t, source.c_str(), kind.c_str(),
                         detail.c_str());
        report_.events.push_back(LogEvent{t, source, kind, detail});
    }
    void schedule(double t, EvKind prio, std::string source, int what, Event partial = {}) {
        partial.t = t;
        partial.prio = static_cast<int>(prio);
        partial.source = std::move(source);
        partial.seq = seq_++;
        partial.what = what;
        queue_.push(std::move(partial));
    }

    void init_topology_and_tracks();
    void resolve_and_stitch(double t);
    void update_fuse_schedules(double t, const PhasorState& st);
    void open_dense_window(double t);
    void ensure_sampler(double now);
    void process(const Event& ev);
    void process_sample(double t);
    void process_outputs(const std::string& relay_id, double t, RelayOutputs& out);
    void handle_trip(const std::string& relay_id, double t, Direction tag,
                     const std::string& reason);
    void order_breaker(const std::string& cb, double t, double delay, const std::string& why);
    void breaker_opened(const std::string& cb, double t);
    void check_clearance(double t);
    IncomingSignals incoming(const std::string& relay_id) const {
        IncomingSignals in;
        in.bf_active = bf_active_.count(relay_id) > 0;
        auto it = br_active_.find(relay_id);
        in.br_active = it == br_active_.end() ? 0 : static_cast<int>(it->second.size());
        return in;
    }
    void finish(double t);
    void compute_expected_isolation();
    bool breaker_is_open(const std::string& cb) const {
        return topo_.open_breakers.count(cb) > 0 ||
               open_bays_by_breaker_.count(cb) > 0;
    }

    const PhasorTrack* track(const std::string& key) const { return &tracks_.at(key); }

    Scenario scenario_;
    RunConfig cfg_;
    Network net_;
    FaultSolver solver_;
    ProtectionSystem ps_;
    double dt_ = 0.000625;

    TopologyState topo_;
    bool fault_on_ = false;
    std::map<std::string, PhasorTrack> tracks_;
    std::map<std::string, std::unique_ptr<Relay>> relays_;
    std::map<std::string, double> breaker_interrupting_;
    std::set<std::string> bf_active_;                       // relays blocked forward
    std::map<std::string, std::set<std::string>> br_active_;  // relay -> blocking peers
    std::map<std::string, FuseModel> fuses_;
    std::set<std::string> breaker_ordered_;
    std::set<std::string> breaker_open_or_opening_;
    std::map<std::string, std::string> open_bays_by_breaker_;  // breaker id -> source id

    std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
    uint64_t seq_ = 0;
    double dense_until_ = -1.0;
    bool sampler_alive_ = false;
    RunReport report_;
};

void Simulation::init_topology_and_tracks() {
    for (const auto& cb : net_.open_breakers) {
        topo_.open_breakers.insert(cb);
        breaker_open_or_opening_.insert(cb);
    }
    for (const auto& lat : net_.laterals) {
        FuseModel f;
        f.failed = std::find(scenario_.options.failed_fuses.begin(),
                             scenario_.options.failed_fuses.end(),
                             lat.id) != scenario_.options.failed_fuses.end();
        fuses_[lat.id] = f;
    }
    // load steps at t <= 0 shape the initial state
    for (const auto& m : scenario_.mutations) {
        if (auto* ls = std::get_if<Mutation::LoadStep>(&m.op)) {
            if (ls->t_s <= 0.0) topo_.load_multiplier[ls->lateral_id] = ls->multiplier;
        }
    }

    PhasorState st = solver_.solve_steady(topo_, scenario_.fault);
    const double inf = -std::numeric_limits<double>::infinity();
    auto mk = [&](const std::string& key, Complex v) {
        tracks_.emplace(key, PhasorTrack(net_.frequency_hz, cfg_.samples_per_cycle, v, inf));
    };
    const char* ph = "abc";
    for (const auto& [bus, v] : st.bus_v)
        for (int p = 0; p < 3; ++p) mk("V:" + bus + ":" + ph[p], v.phase(p));
    for (const auto& [seg, i] : st.segment_i_from)
        for (int p = 0; p < 3; ++p) mk("I:" + seg + ":f:" + ph[p], i.phase(p));
    for (const auto& [seg, i] : st.segment_i_to)
        for (int p = 0; p < 3; ++p) mk("I:" + seg + ":t:" + ph[p], i.phase(p));
    for (const auto& [lat, i] : st.lateral_i)
        for (int p = 0; p < 3; ++p) mk("IP:" + lat + ":" + ph[p], i.phase(p));

    // relay instances
    bool any_double_grounded = false;
    for (const auto& lat : net_.laterals)
        if (lat.transformer_double_side_grounded) any_double_grounded = true;
    for (const auto& [rid, pl] : ps_.relays) {
        RelayConfig rc;
        rc.relay_id = rid;
        rc.i_n_secondary_a = net_.ct_secondary_a;
        rc.ground_element_enabled = scenario_.options.ground_element_enabled;
        rc.primary_ps = scenario_.options.primary_ps;

        RfbConfig fc;
        const Lateral* lat = net_.lateral_at_bus(pl.local_bus);
        fc.curve = lat ? &net_.toc_curves.at(lat->toc_id) : nullptr;
        fc.dotted_part_enabled = scenario_.options.dotted_part_enabled;
        fc.dashed_frame_enabled = scenario_.options.dashed_frame_enabled.value_or(
            !any_double_grounded);

        ChannelSet ch;
        ch.period_s = net_.period_s();
        ch.i_pu_to_secondary = net_.i_base_a() / net_.ct_ratio();
        ch.i_pu_to_primary = net_.i_base_a();
        std::string end = pl.at_from_end ? "f" : "t";
        for (int p = 0; p < 3; ++p) {
            ch.v[p] = track("V:" + pl.local_bus + ":" + std::string(1, ph[p]));
            ch.i[p] = track("I:" + pl.segment_id + ":" + end + ":" + std::string(1, ph[p]));
            if (lat) ch.ip[p] = track("IP:" + lat->id + ":" + std::string(1, ph[p]));
        }
        relays_[rid] = std::make_unique<Relay>(rc, fc, ch);
        breaker_interrupting_[pl.breaker_id] = net_.find_segment(pl.segment_id)->breaker_interrupting_s;
    }
    update_fuse_schedules(0.0, st);
}

void Simulation::resolve_and_stitch(double t) {
    PhasorState st;
    bool feed = fault_on_ && scenario_.fault &&
                solver_.fault_energized(topo_, *scenario_.fault);
    if (feed) st = solver_.solve_faulted(topo_, *scenario_.fault);
    else st = solver_.solve_steady(topo_, scenario_.fault, /*allow_dead=*/true);

    const char* ph = "abc";
    auto put = [&](const std::string& key, Complex v) {
        auto it = tracks_.find(key);
        if (it != tracks_.end()) it->second.append(t, v);
    };
    for (const auto& [bus, v] : st.bus_v)
        for (int p = 0; p < 3; ++p) put("V:" + bus + ":" + ph[p], v.phase(p));
    for (const auto& [seg, i] : st.segment_i_from)
        for (int p = 0; p < 3; ++p) put("I:" + seg + ":f:" + ph[p], i.phase(p));
    for (const auto& [seg, i] : st.segment_i_to)
        for (int p = 0; p < 3; ++p) put("I:" + seg + ":t:" + ph[p], i.phase(p));
    for (const auto& [lat, i] : st.lateral_i)
        for (int p = 0; p < 3; ++p) put("IP:" + lat + ":" + ph[p], i.phase(p));

    update_fuse_schedules(t, st);
    check_clearance(t);
}

void Simulation::update_fuse_schedules(double t, const PhasorState& st) {
    for (const auto& lat : net_.laterals) {
        FuseModel& f = fuses_[lat.id];
        if (f.blown) continue;
        // accrue melting progress at the previous current level
        if (f.rate) f.accumulated += (t - f.last_t) * *f.rate;
        f.last_t = t;
        f.gen++;
        double ip_max = 0.0;
        auto it = st.lateral_i.find(lat.id);
        if (it != st.lateral_i.end())
            for (int p = 0; p < 3; ++p)
                ip_max = std::max(ip_max, std::abs(it->second.phase(p)) * net_.i_base_a());
        auto melt = toc_time(net_.toc_curves.at(lat.toc_id), ip_max);
        if (melt && !f.failed) {
            f.rate = 1.0 / *melt;
            double remaining = std::max(0.0, 1.0 - f.accumulated) * *melt;
            Event ev;
            ev.a = lat.id;
            ev.gen = f.gen;
            schedule(t + remaining, EvKind::FuseClear, "P:" + lat.id, kFuseClear, ev);
        } else {
            f.rate.reset();
        }
    }
}

void Simulation::open_dense_window(double t) {
    dense_until_ = std::max(dense_until_, t + 6.0 * net_.period_s());
    ensure_sampler(t);
}

void Simulation::ensure_sampler(double now) {
    if (sampler_alive_) return;
    int64_t k = static_cast<int64_t>(std::ceil((now - 1e-9) / dt_));
    if (k * dt_ < now - 1e-9) ++k;
    Event ev;
    ev.sample_k = k;
    schedule(k * dt_, EvKind::Sample, "~sampler", kSample, ev);
    sampler_alive_ = true;
}

void Simulation::check_clearance(double t) {
    if (!fault_on_ || report_.cleared || !scenario_.fault) return;
    if (!solver_.fault_energized(topo_, *scenario_.fault)) {
        report_.cleared = true;
        report_.cleared_at_s = t;
        log(t, "system", "cleared", "fault de-energized");
    }
}

void Simulation::order_breaker(const std::string& cb, double t, double delay,
                               const std::string& why) {
    if (breaker_open_or_opening_.count(cb)) return;
    breaker_ordered_.insert(cb);
    bool stuck = std::find(scenario_.options.stuck_breakers.begin(),
                           scenario_.options.stuck_breakers.end(),
                           cb) != scenario_.options.stuck_breakers.end();
    if (stuck) {
        log(t, cb, "breaker_stuck", why);
        return;
    }
    breaker_open_or_opening_.insert(cb);
    Event ev;
    ev.a = cb;
    ev.b = why;
    schedule(t + delay, EvKind::BreakerOpen, cb, kBreakerOpen, ev);
}

void Simulation::breaker_opened(const std::string& cb, double t) {
    // source bay breakers gate the source, segment breakers gate a line end
    bool is_bay = false;
    for (const auto& [src, bay] : ps_.bay_breakers) {
        if (bay == cb) {
            topo_.open_source_bays.insert(src);
            open_bays_by_breaker_[cb] = src;
            is_bay = true;
        }
    }
    if (!is_bay) topo_.open_breakers.insert(cb);
    report_.opened_breakers.push_back(cb);
    log(t, cb, "breaker_open");
    for (const auto& [rid, pl] : ps_.relays)
        if (pl.breaker_id == cb) relays_.at(rid)->own_breaker_opened(t);
    resolve_and_stitch(t);
    open_dense_window(t);
}

void Simulation::handle_trip(const std::string& relay_id, double t, Direction tag,
                             const std::string& reason) {
    log(t, relay_id, "trip", reason);
    bool disabled = std::find(scenario_.options.trip_disabled.begin(),
                              scenario_.options.trip_disabled.end(),
                              relay_id) != scenario_.options.trip_disabled.end();
    if (disabled) {
        log(t, relay_id, "trip_path_failed");
        return;
    }
    const RelayPlacement& pl = ps_.relays.at(relay_id);
    order_breaker(pl.breaker_id, t, breaker_interrupting_[pl.breaker_id], "trip " + relay_id);
    log(t, relay_id, "BFI", tag == Direction::Forward ? "forward" : "reverse");
    log(t, relay_id, "retrip", pl.breaker_id);
    Event bf;
    bf.a = relay_id;
    bf.dir = tag;
    schedule(t + cfg_.t_bf_s, EvKind::BfCheck, relay_id, kBfCheck, bf);

    double lat = ps_.link_latency_s.at(relay_id);
    if (tag == Direction::Forward) {
        const std::string& opp_cb = ps_.relays.at(pl.opponent_id).breaker_id;
        log(t, relay_id, "intertrip", opp_cb);
        Event ev;
        ev.a = "intertrip";
        ev.b = opp_cb;
        schedule(t + lat, EvKind::MsgArrive, relay_id, kMsg, ev);
    } else {
        for (const auto& peer : ps_.group_peers(relay_id)) {
            const std::string& cb = ps_.relays.at(peer).breaker_id;
            log(t, relay_id, "intertrip", cb);
            order_breaker(cb, t, breaker_interrupting_[cb], "intertrip from " + relay_id);
        }
        for (const auto& src : net_.sources) {
            if (src.bus == pl.local_bus && !topo_.open_source_bays.count(src.id) &&
                net_.source_energized(src)) {
                const std::string& cb = ps_.bay_breakers.at(src.id);
                log(t, relay_id, "intertrip", cb);
                order_breaker(cb, t, 0.05, "bus zone trip");
            }
        }
    }
}

void Simulation::process_outputs(const std::string& relay_id, double t, RelayOutputs& out) {
    if (!out.any()) return;
    const RelayPlacement& pl = ps_.relays.at(relay_id);
    double lat = ps_.link_latency_s.at(relay_id);
    auto msg = [&](const std::string& kind, const std::string& to, double delay) {
        Event ev;
        ev.a = kind;
        ev.b = to;
        schedule(t + delay, EvKind::MsgArrive, relay_id, kMsg, ev);
    };
    if (out.send_bf) {
        log(t, relay_id, "bf", pl.opponent_id);
        msg("bf", pl.opponent_id, lat);
    }
    if (out.send_br) {
        for (const auto& peer : ps_.group_peers(relay_id)) {
            log(t, relay_id, "br", peer);
            msg("br", peer, 0.0);
        }
    }
    if (out.cancel_bf) {
        log(t, relay_id, "cf", pl.opponent_id);
        msg("cf", pl.opponent_id, lat);
    }
    if (out.cancel_br) {
        for (const auto& peer : ps_.group_peers(relay_id)) {
            log(t, relay_id, "cr", peer);
            msg("cr", peer, 0.0);
        }
    }
    if (out.s_signal) log(t, relay_id, to_string(*out.s_signal));
    if (out.rfb_timer_at) {
        log(t, relay_id, "rfb_timer_armed",
            "t_tr=" + std::to_string(*out.rfb_timer_at));
        Event ev;
        schedule(*out.rfb_timer_at, EvKind::RfbTimer, relay_id, kRfbTimer, ev);
        open_dense_window(t);
    }
    if (out.concluded_no_fault) log(t, relay_id, "no_fault");
    if (out.trip) handle_trip(relay_id, t, out.trip->tag, out.trip->reason);
}

void Simulation::process_sample(double t) {
    for (auto& [rid, relay] : relays_) {
        RelayOutputs out;
        relay->step(t, incoming(rid), out);
        process_outputs(rid, t, out);
    }
}

void Simulation::process(const Event& ev) {
    const double t = ev.t;
    switch (ev.what) {
        case kFaultOn: {
            fault_on_ = true;
            log(t, "system", "fault_on", scenario_.fault->describe());
            resolve_and_stitch(t);
            open_dense_window(t);
            break;
        }
        case kLoadStep: {
            topo_.load_multiplier[ev.a] = std::stod(ev.b);
            log(t, "system", "load_step", ev.a + " x" + ev.b);
            resolve_and_stitch(t);
            open_dense_window(t);
            break;
        }
        case kBreakerOpen:
            breaker_opened(ev.a, t);
            break;
        case kFuseClear: {
            FuseModel& f = fuses_[ev.a];
            if (f.blown || f.gen != ev.gen) break;  // superseded schedule
            f.blown = true;
            topo_.blown_fuses.insert(ev.a);
            report_.blown_fuses.push_back(ev.a);
            log(t, "P:" + ev.a, "fuse_clear");
            resolve_and_stitch(t);
            open_dense_window(t);
            break;
        }
        case kMsg: {
            const std::string& kind = ev.a;
            const std::string& to = ev.b;
            if (kind == "intertrip") {
                double di = breaker_interrupting_.count(to) ? breaker_interrupting_[to] : 0.05;
                order_breaker(to, t, di, "intertrip");
                break;
            }
            if (kind == "bf") bf_active_.insert(to);
            else if (kind == "br") br_active_[to].insert(ev.source);
            else if (kind == "cf") {
                bf_active_.erase(to);
                RelayOutputs out;
                relays_.at(to)->on_unblock(t, incoming(to), out);
                process_outputs(to, t, out);
            } else if (kind == "cr") {
                br_active_[to].erase(ev.source);
                RelayOutputs out;
                relays_.at(to)->on_unblock(t, incoming(to), out);
                process_outputs(to, t, out);
            }
            break;
        }
        case kRfbTimer: {
            log(t, ev.source, "rfb_timer_expiry");
            RelayOutputs out;
            relays_.at(ev.source)->on_rfb_expiry(t, out);
            process_outputs(ev.source, t, out);
            open_dense_window(t);
            break;
        }
        case kBfCheck: {
            const std::string& rid = ev.a;
            const RelayPlacement& pl = ps_.relays.at(rid);
            if (breaker_is_open(pl.breaker_id)) break;  // opened in time
            log(t, rid, "bf_timeout", pl.breaker_id);
            auto adjacent_open = [&](const std::string& cb) {
                if (breaker_is_open(cb) || breaker_open_or_opening_.count(cb)) return;
                log(t, rid, "bf_adjacent_trip", cb);
                breaker_open_or_opening_.insert(cb);
                breaker_opened(cb, t);  // t_BF already covers the interrupting margin
            };
            if (ev.dir == Direction::Forward) {
                for (const auto& peer : ps_.group_peers(rid))
                    adjacent_open(ps_.relays.at(peer).breaker_id);
                for (const auto& src : net_.sources) {
                    if (src.bus == pl.local_bus && !topo_.open_source_bays.count(src.id) &&
                        net_.source_energized(src))
                        adjacent_open(ps_.bay_breakers.at(src.id));
                }
            } else {
                adjacent_open(ps_.relays.at(pl.opponent_id).breaker_id);
            }
            break;
        }
        case kSample: {
            sampler_alive_ = false;
            process_sample(t);
            if (t + dt_ <= dense_until_ + 1e-9) {
                Event nxt;
                nxt.sample_k = ev.sample_k + 1;
                schedule((ev.sample_k + 1) * dt_, EvKind::Sample, "~sampler", kSample, nxt);
                sampler_alive_ = true;
            }
            break;
        }
        default: break;
    }
}

void Simulation::compute_expected_isolation() {
    if (!scenario_.fault) return;
    std::vector<std::string> expected;
    const FaultSpec& f = *scenario_.fault;
    auto bus_zone = [&](const std::string& bus) {
        for (const auto& rid : ps_.groups[bus]) {
            const std::string& cb = ps_.relays.at(rid).breaker_id;
            if (std::find(net_.open_breakers.begin(), net_.open_breakers.end(), cb) !=
                net_.open_breakers.end())
                continue;  // already open before the fault
            expected.push_back(cb);
        }
        for (const auto& src : net_.sources)
            if (src.bus == bus && net_.source_energized(src))
                expected.push_back(ps_.bay_breakers.at(src.id));
        // a lateral source keeps feeding the bus until its fuse melts
        const Lateral* lat = net_.lateral_at_bus(bus);
        if (lat) {
            for (const auto& src : net_.sources)
                if (src.bus == lat->endpoint_bus && net_.source_energized(src))
                    expected.push_back("P:" + lat->id);
        }
    };
    if (auto* seg = std::get_if<FaultSpec::OnSegment>(&f.location)) {
        const LineSegment* s = net_.find_segment(seg->segment_id);
        for (const std::string& cb :
             {breaker_name(s->from_bus, s->to_bus), breaker_name(s->to_bus, s->from_bus)}) {
            if (std::find(net_.open_breakers.begin(), net_.open_breakers.end(), cb) ==
                net_.open_breakers.end())
                expected.push_back(cb);
        }
    } else if (auto* ab = std::get_if<FaultSpec::AtBus>(&f.location)) {
        bus_zone(ab->bus_id);
    } else {
        const auto& le = std::get<FaultSpec::AtLateralEndpoint>(f.location);
        const Lateral* lat = net_.find_lateral(le.lateral_id);
        // does the fuse see enough current to operate?
        bool fuse_operates = false;
        if (!fuses_[lat->id].failed) {
            try {
                TopologyState t0;
                for (const auto& cb : net_.open_breakers) t0.open_breakers.insert(cb);
                t0.load_multiplier = topo_.load_multiplier;
                PhasorState st = solver_.solve_faulted(t0, f);
                double ip = 0.0;
                auto it = st.lateral_i.find(lat->id);
                if (it != st.lateral_i.end())
                    for (int p = 0; p < 3; ++p)
                        ip = std::max(ip, std::abs(it->second.phase(p)) * net_.i_base_a());
                fuse_operates = toc_time(net_.toc_curves.at(lat->toc_id), ip).has_value();
            } catch (const std::exception&) {
            }
        }
        if (fuse_operates) expected.push_back("P:" + lat->id);
        else bus_zone(lat->host_bus);
    }
    std::sort(expected.begin(), expected.end());
    expected.erase(std::unique(expected.begin(), expected.end()), expected.end());
    report_.expected_isolation = expected;
}

void Simulation::finish(double t) {
    // devices that actually operated
    std::vector<std::string> actual = report_.opened_breakers;
    for (const auto& lat : report_.blown_fuses) actual.push_back("P:" + lat);
    std::sort(actual.begin(), actual.end());
    actual.erase(std::unique(actual.begin(), actual.end()), actual.end());

    compute_expected_isolation();
    report_.selectivity_ok =
        scenario_.fault ? (report_.cleared && actual == report_.expected_isolation) : true;
    if (scenario_.fault && !report_.cleared && report_.diagnosis.empty())
        report_.diagnosis = "fault not cleared within simulation horizon";
    if (scenario_.fault && report_.cleared && actual != report_.expected_isolation) {
        std::ostringstream os;
        os << "isolation mismatch; opened:";
        for (const auto& d : actual) os << " " << d;
        os << " expected:";
        for (const auto& d : report_.expected_isolation) os << " " << d;
        report_.diagnosis = os.str();
    }

    // de-energized buses at end of run
    for (const auto& b : net_.buses) {
        FaultSpec probe;
        probe.location = FaultSpec::AtBus{b.id};
        if (!solver_.fault_energized(topo_, probe)) report_.isolated_buses.push_back(b.id);
    }
    for (auto& [rid, relay] : relays_) report_.traces[rid] = relay->trace();
    log(t, "system", "end", report_.cleared ? "cleared" : "not cleared");
}

RunReport Simulation::run() {
    init_topology_and_tracks();
    log(0.0, "system", "start", net_.name + " / " + scenario_.name);

    if (scenario_.fault) {
        double t_f = std::ceil((scenario_.fault->t_inception_s - 1e-9) / dt_) * dt_;
        schedule(t_f, EvKind::FaultOn, "system", kFaultOn);
    }
    for (const auto& m : scenario_.mutations) {
        if (auto* ls = std::get_if<Mutation::LoadStep>(&m.op)) {
            if (ls->t_s > 0.0) {
                Event ev;
                ev.a = ls->lateral_id;
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.17g", ls->multiplier);
                ev.b = buf;
                schedule(ls->t_s, EvKind::LoadStep, "system", kLoadStep, ev);
            }
        }
    }

    double now = 0.0;
    while (!queue_.empty()) {
        Event ev = queue_.top();
        queue_.pop();
        if (ev.t > scenario_.sim_duration_s) {
            if (scenario_.fault && !report_.cleared)
                report_.diagnosis = "pending events beyond sim_duration while fault uncleared";
            break;
        }
        now = std::max(now, ev.t);
        process(ev);
    }
    finish(now);
    return report_;
}

}  // namespace

RunReport run_scenario(const Network& base, const Scenario& scenario, const RunConfig& cfg) {
    Simulation sim(base, scenario, cfg);
    return sim.run();
}

}  // namespace meshprot
