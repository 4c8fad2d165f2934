#include "meshprot/faultsolver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace meshprot {

namespace {

constexpr const char* kFaultNode = "@FAULT";

struct Branch {
    enum class Kind { SegmentWhole, SegmentFromHalf, SegmentToHalf, Lateral };
    Kind kind;
    std::string id;  // segment or lateral id
    int i = -1, j = -1;
    Complex z1, z0;  // pu
    bool in_service = true;
};

struct InverterRef {
    int node = -1;
    const Source* src = nullptr;
    Complex s_pu;       // dispatch
    double i_max = 0.0; // pu current magnitude cap
    bool reactive_support = false;
};

struct Model {
    const Network* net = nullptr;
    std::vector<std::string> ids;
    std::map<std::string, int> idx;
    std::vector<Branch> branches;
    std::vector<std::pair<int, Complex>> shunt1, shunt2, shunt0;
    std::vector<std::pair<int, Complex>> emf;  // node, Norton current (pos seq)
    std::vector<std::pair<int, Complex>> emf_y; // node, source admittance (for source_i)
    std::map<std::string, std::pair<int, Complex>> emf_by_source;  // id -> (node, y)
    std::vector<InverterRef> inverters;
    std::map<std::string, Complex> grounding_y;  // source id -> y0 shunt (for source_i)

    // grid-forming inverters: in any energized component without an EMF
    // source, the largest inverter provides the voltage reference (stiff
    // EMF behind a transformer-scale impedance, folded back at its limit)
    struct GridFormer {
        int node = -1;
        const Source* src = nullptr;
        Complex y;
        double i_max = 0.0;
    };
    std::vector<GridFormer> formers;

    int fault_node = -1;
    std::vector<int> red;       // node -> reduced index or -1 (de-energized)
    std::vector<int> unred;     // reduced -> node
    int n_red = 0;

    Eigen::MatrixXcd y1, y2, y0;
    Eigen::VectorXcd inorton;
    Eigen::FullPivLU<Eigen::MatrixXcd> lu1, lu2, lu0;
    bool y0_singular = true;
    bool y2_ok = false;

    int node(const std::string& id) const {
        auto it = idx.find(id);
        return it == idx.end() ? -1 : it->second;
    }
};

Complex source_z1(const Network& net, const Source& s) {
    if (auto* g = std::get_if<GridEquivalent>(&s.kind)) {
        double zmag = net.base_mva / g->ssc_mva;
        double angle = std::atan(g->x_over_r);
        return std::polar(zmag, angle);
    }
    if (auto* sg = std::get_if<SynchronousGen>(&s.kind)) {
        double x = sg->xd_transient_pu * net.base_mva / sg->rated_mva;
        return Complex(x / 25.0, x);
    }
    return Complex(0, 0);  // inverters carry no Thevenin branch
}

Complex source_z0(const Network& net, const Source& s) {
    if (s.is_grid()) return source_z1(net, s);
    // DG step-up transformer zero-sequence impedance on own rating; soft
    // enough that remote ground faults drain mostly through the stiff
    // substation grounding rather than circulating across the mesh
    double x = 0.25 * net.base_mva / s.rating_mva();
    return Complex(x / 6.0, x);
}

int add_node(Model& m, const std::string& id) {
    m.idx[id] = static_cast<int>(m.ids.size());
    m.ids.push_back(id);
    return m.idx[id];
}

/// Assemble the node/branch/shunt model for a switching state, optionally
/// splitting one segment at the fault fraction.
Model build_model(const Network& net, const TopologyState& topo,
                  const std::optional<FaultSpec>& fault) {
    Model m;
    m.net = &net;
    for (const auto& b : net.buses) add_node(m, b.id);
    for (const auto& l : net.laterals) add_node(m, l.endpoint_bus);

    const FaultSpec::OnSegment* split = nullptr;
    if (fault) {
        if (auto* os = std::get_if<FaultSpec::OnSegment>(&fault->location)) {
            split = os;
            if (!net.find_segment(os->segment_id))
                throw std::runtime_error("fault references unknown segment '" + os->segment_id +
                                         "'");
            if (os->fraction <= 0.0 || os->fraction >= 1.0)
                throw std::runtime_error("fault fraction must be strictly inside (0,1)");
            m.fault_node = add_node(m, kFaultNode);
        } else if (auto* ab = std::get_if<FaultSpec::AtBus>(&fault->location)) {
            m.fault_node = m.node(ab->bus_id);
            if (m.fault_node < 0)
                throw std::runtime_error("fault references unknown bus '" + ab->bus_id + "'");
        } else {
            const auto& le = std::get<FaultSpec::AtLateralEndpoint>(fault->location);
            const Lateral* lat = net.find_lateral(le.lateral_id);
            if (!lat)
                throw std::runtime_error("fault references unknown lateral '" + le.lateral_id +
                                         "'");
            m.fault_node = m.node(lat->endpoint_bus);
        }
    }

    const double zb = net.z_base_ohm();
    for (const auto& s : net.segments) {
        Complex z1 = s.z1_ohm_per_km * s.length_km / zb;
        Complex z0 = s.z0_ohm_per_km * s.length_km / zb;
        bool from_closed = !topo.open_breakers.count(breaker_name(s.from_bus, s.to_bus));
        bool to_closed = !topo.open_breakers.count(breaker_name(s.to_bus, s.from_bus));
        int ni = m.node(s.from_bus), nj = m.node(s.to_bus);
        if (split && split->segment_id == s.id) {
            double f = split->fraction;
            m.branches.push_back({Branch::Kind::SegmentFromHalf, s.id, ni, m.fault_node, z1 * f,
                                  z0 * f, from_closed});
            m.branches.push_back({Branch::Kind::SegmentToHalf, s.id, nj, m.fault_node,
                                  z1 * (1.0 - f), z0 * (1.0 - f), to_closed});
        } else {
            m.branches.push_back(
                {Branch::Kind::SegmentWhole, s.id, ni, nj, z1, z0, from_closed && to_closed});
        }
    }
    for (const auto& l : net.laterals) {
        bool closed = !topo.blown_fuses.count(l.id);
        m.branches.push_back({Branch::Kind::Lateral, l.id, m.node(l.host_bus),
                              m.node(l.endpoint_bus), l.series_z1_ohm / zb, l.series_z0_ohm / zb,
                              closed});
        double mult = topo.load_factor(l.id);
        if (mult > 0.0 && (l.load_p_mw != 0.0 || l.load_q_mvar != 0.0)) {
            Complex s_pu(l.load_p_mw / net.base_mva, l.load_q_mvar / net.base_mva);
            Complex y = std::conj(s_pu) * mult;  // constant impedance at nominal voltage
            int node = m.node(l.endpoint_bus);
            m.shunt1.emplace_back(node, y);
            m.shunt2.emplace_back(node, y);
            // no zero-sequence path through the distribution transformer
        }
    }

    for (const auto& s : net.sources) {
        bool removed = std::find(net.removed_sources.begin(), net.removed_sources.end(), s.id) !=
                       net.removed_sources.end();
        bool bay_open = topo.open_source_bays.count(s.id) > 0;
        if (removed || bay_open) continue;
        int node = m.node(s.bus);
        if (node < 0) throw std::runtime_error("source '" + s.id + "' on unknown bus " + s.bus);

        bool pos_energized = net.source_energized(s);
        if (pos_energized) {
            if (auto* inv = std::get_if<InverterDG>(&s.kind)) {
                InverterRef r;
                r.node = node;
                r.src = &s;
                double p = inv->dispatch_p_mw >= 0.0 ? inv->dispatch_p_mw : 0.8 * inv->rated_mva;
                r.s_pu = Complex(p / net.base_mva, inv->dispatch_q_mvar / net.base_mva);
                r.i_max = inv->current_limit_pu * inv->rated_mva / net.base_mva;
                r.reactive_support = inv->reactive_support;
                m.inverters.push_back(r);
            } else {
                Complex z = source_z1(net, s);
                Complex y = 1.0 / z;
                m.shunt1.emplace_back(node, y);
                m.shunt2.emplace_back(node, y);
                m.emf.emplace_back(node, y);  // E = 1∠0 Norton
                m.emf_by_source[s.id] = {node, y};
            }
        }
        // the interface transformer keeps its MV grounding while connected,
        // including a grid transformer whose HV side is open in islanded mode
        if (s.steps_up_grounded_mv) {
            Complex y0 = 1.0 / source_z0(net, s);
            m.shunt0.emplace_back(node, y0);
            m.grounding_y[s.id] = y0;
        }
    }

    return m;
}

/// Restrict the model to nodes galvanically connected to an energized
/// source through in-service branches. Handled per connected component: a
/// component holding an EMF source is kept as-is; a component holding only
/// inverters promotes its largest unit to grid-forming; a component with no
/// source at all is de-energized and dropped. With `allow_dead` a network
/// where nothing remains energized reduces to the empty (all-zero) state
/// instead of failing.
void reduce_to_energized(Model& m, bool allow_dead = false) {
    int n = static_cast<int>(m.ids.size());
    std::vector<std::vector<int>> adj(n);
    for (const auto& b : m.branches) {
        if (!b.in_service) continue;
        adj[b.i].push_back(b.j);
        adj[b.j].push_back(b.i);
    }
    std::vector<int> comp(n, -1);
    int n_comp = 0;
    for (int start = 0; start < n; ++start) {
        if (comp[start] >= 0) continue;
        comp[start] = n_comp;
        std::queue<int> q;
        q.push(start);
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v : adj[u])
                if (comp[v] < 0) { comp[v] = n_comp; q.push(v); }
        }
        n_comp++;
    }

    std::vector<char> comp_has_emf(n_comp, 0);
    for (const auto& [node, y] : m.emf) comp_has_emf[comp[node]] = 1;
    std::vector<int> comp_best_inv(n_comp, -1);
    for (size_t k = 0; k < m.inverters.size(); ++k) {
        int c = comp[m.inverters[k].node];
        int& best = comp_best_inv[c];
        if (best < 0 || m.inverters[k].i_max > m.inverters[best].i_max ||
            (m.inverters[k].i_max == m.inverters[best].i_max &&
             m.inverters[k].src->id < m.inverters[static_cast<size_t>(best)].src->id))
            best = static_cast<int>(k);
    }

    std::vector<char> comp_kept(n_comp, 0);
    std::vector<size_t> promoted;
    for (int c = 0; c < n_comp; ++c) {
        if (comp_has_emf[c]) {
            comp_kept[c] = 1;
        } else if (comp_best_inv[c] >= 0) {
            comp_kept[c] = 1;
            promoted.push_back(static_cast<size_t>(comp_best_inv[c]));
        }
    }
    std::sort(promoted.begin(), promoted.end());
    for (size_t pi = promoted.size(); pi-- > 0;) {
        const InverterRef unit = m.inverters[promoted[pi]];
        m.inverters.erase(m.inverters.begin() + static_cast<long>(promoted[pi]));
        double x = 0.06 * m.net->base_mva / unit.src->rating_mva();
        Complex y = 1.0 / Complex(x / 20.0, x);
        Model::GridFormer gf;
        gf.node = unit.node;
        gf.src = unit.src;
        gf.y = y;
        gf.i_max = unit.i_max;
        m.formers.push_back(gf);
        m.shunt1.emplace_back(unit.node, y);
        m.shunt2.emplace_back(unit.node, y);
        m.emf_by_source[unit.src->id] = {unit.node, y};
    }

    m.red.assign(n, -1);
    for (int k = 0; k < n; ++k) {
        if (comp_kept[comp[k]]) {
            m.red[k] = static_cast<int>(m.unred.size());
            m.unred.push_back(k);
        }
    }
    m.n_red = static_cast<int>(m.unred.size());
    if (m.n_red == 0 && !allow_dead)
        throw std::runtime_error("network has no energized source; nothing to solve");

    std::erase_if(m.inverters, [&](const InverterRef& r) { return m.red[r.node] < 0; });
}

void assemble_matrices(Model& m) {
    const int n = m.n_red;
    if (n == 0) return;  // fully de-energized
    m.y1 = Eigen::MatrixXcd::Zero(n, n);
    m.y2 = Eigen::MatrixXcd::Zero(n, n);
    m.y0 = Eigen::MatrixXcd::Zero(n, n);
    m.inorton = Eigen::VectorXcd::Zero(n);
    auto stamp = [&](Eigen::MatrixXcd& y, int gi, int gj, Complex z) {
        int i = m.red[gi], j = m.red[gj];
        if (i < 0 || j < 0) return;
        Complex yb = 1.0 / z;
        y(i, i) += yb;
        y(j, j) += yb;
        y(i, j) -= yb;
        y(j, i) -= yb;
    };
    for (const auto& b : m.branches) {
        if (!b.in_service) continue;
        stamp(m.y1, b.i, b.j, b.z1);
        stamp(m.y2, b.i, b.j, b.z1);
        stamp(m.y0, b.i, b.j, b.z0);
    }
    auto shunt = [&](Eigen::MatrixXcd& y, const std::vector<std::pair<int, Complex>>& list) {
        for (const auto& [gn, ys] : list) {
            int i = m.red[gn];
            if (i >= 0) y(i, i) += ys;
        }
    };
    shunt(m.y1, m.shunt1);
    shunt(m.y2, m.shunt2);
    shunt(m.y0, m.shunt0);
    for (const auto& [gn, y] : m.emf) {
        int i = m.red[gn];
        if (i >= 0) m.inorton(i) += y;  // E = 1∠0
    }

    m.lu1.compute(m.y1);
    if (!m.lu1.isInvertible())
        throw std::runtime_error("singular positive-sequence admittance matrix "
                                 "(no source or floating island)");
    m.lu2.compute(m.y2);
    m.y2_ok = m.lu2.isInvertible();
    m.lu0.compute(m.y0);
    m.y0_singular = !m.lu0.isInvertible();
}

int phase_index(Phase p) { return p == Phase::A ? 0 : (p == Phase::B ? 1 : 2); }

void pair_indices(PhasePair pp, int& p, int& q, int& r) {
    switch (pp) {
        case PhasePair::AB: p = 0; q = 1; r = 2; return;
        case PhasePair::BC: p = 1; q = 2; r = 0; return;
        case PhasePair::CA: p = 2; q = 0; r = 1; return;
    }
}

/// Sequence currents drawn by the fault, solving the phase-domain boundary
/// conditions against the Thevenin view (v0_seq - diag(z_th) * I).
/// Order (zero, positive, negative).
Eigen::Vector3cd fault_sequence_currents(const FaultSpec& f, Complex vpre, Complex z1, Complex z2,
                                         Complex z0, bool no_ground_path, double r_fault_pu) {
    using Eigen::Vector3cd;
    const Complex a = fortescue_a();
    const Complex a2 = a * a;
    Eigen::Matrix3cd T;
    T << Complex(1, 0), Complex(1, 0), Complex(1, 0),
         Complex(1, 0), a2, a,
         Complex(1, 0), a, a2;
    Vector3cd v0(Complex(0, 0), vpre, Complex(0, 0));
    Eigen::Matrix3cd Z = Eigen::Matrix3cd::Zero();
    Z(0, 0) = z0;
    Z(1, 1) = z1;
    Z(2, 2) = z2;

    FaultType type = f.type;
    double rf = r_fault_pu;
    if (no_ground_path) {
        if (type == FaultType::SingleLineGround) return Vector3cd::Zero();
        if (type == FaultType::PhasePhaseGround) {
            // ground return open: the two legs act in series between phases
            type = FaultType::PhasePhase;
            rf = 2.0 * rf;
        }
    }

    Eigen::Matrix3cd A;
    Vector3cd b;
    auto Trow = [&](int p) -> Eigen::RowVector3cd { return T.row(p); };

    switch (type) {
        case FaultType::ThreePhase: {
            // V_a - Rf I_a = V_b - Rf I_b = V_c - Rf I_c ; sum of currents zero
            Eigen::RowVector3cd dab = Trow(0) - Trow(1);
            Eigen::RowVector3cd dbc = Trow(1) - Trow(2);
            A.row(0) = -(dab * Z) - rf * dab;
            b(0) = -(dab * v0)(0);
            A.row(1) = -(dbc * Z) - rf * dbc;
            b(1) = -(dbc * v0)(0);
            A.row(2) = Trow(0) + Trow(1) + Trow(2);
            b(2) = Complex(0, 0);
            break;
        }
        case FaultType::PhasePhase: {
            int p, q, r;
            pair_indices(f.pair, p, q, r);
            A.row(0) = Trow(r);
            b(0) = Complex(0, 0);
            A.row(1) = Trow(p) + Trow(q);
            b(1) = Complex(0, 0);
            Eigen::RowVector3cd dpq = Trow(p) - Trow(q);
            A.row(2) = -(dpq * Z) - rf * Trow(p);
            b(2) = -(dpq * v0)(0);
            break;
        }
        case FaultType::PhasePhaseGround: {
            // fault resistance in each phase leg, common point solidly
            // grounded: V_p = Rf I_p and V_q = Rf I_q
            int p, q, r;
            pair_indices(f.pair, p, q, r);
            A.row(0) = Trow(r);
            b(0) = Complex(0, 0);
            A.row(1) = -(Trow(p) * Z) - rf * Trow(p);
            b(1) = -(Trow(p) * v0)(0);
            A.row(2) = -(Trow(q) * Z) - rf * Trow(q);
            b(2) = -(Trow(q) * v0)(0);
            break;
        }
        case FaultType::SingleLineGround: {
            int p = phase_index(f.phase);
            int q = (p + 1) % 3, r = (p + 2) % 3;
            A.row(0) = Trow(q);
            b(0) = Complex(0, 0);
            A.row(1) = Trow(r);
            b(1) = Complex(0, 0);
            A.row(2) = -(Trow(p) * Z) - rf * Trow(p);
            b(2) = -(Trow(p) * v0)(0);
            break;
        }
    }
    return A.fullPivLu().solve(b);
}

struct SequenceSolution {
    Eigen::VectorXcd v0, v1, v2;       // reduced node voltages
    Eigen::Vector3cd fault_iseq;       // (zero, pos, neg) into the fault
    std::vector<Complex> inverter_i;   // final injections, matches model order
    std::vector<Complex> former_emf;   // grid-forming EMFs after fold-back
};

/// Solve for steady or faulted voltages, iterating inverter injections to
/// their (possibly current-limited) fixed point. `anchor_angles` carries
/// the pre-disturbance terminal-voltage angles used as the clamp reference
/// (a current-limited inverter rides through on its tracked phase).
SequenceSolution solve_sequences(const Model& m, const FaultSpec* fault, double r_fault_pu,
                                 const std::vector<double>* anchor_angles = nullptr,
                                 const std::vector<Complex>* initial_injections = nullptr) {
    const int n = m.n_red;
    SequenceSolution sol;
    sol.v0 = Eigen::VectorXcd::Zero(n);
    sol.v1 = Eigen::VectorXcd::Zero(n);
    sol.v2 = Eigen::VectorXcd::Zero(n);
    sol.fault_iseq.setZero();
    if (n == 0) return sol;

    int fr = -1;
    Eigen::VectorXcd col1, col2, col0;
    Complex z1th, z2th, z0th;
    if (fault) {
        fr = m.fault_node >= 0 ? m.red[m.fault_node] : -1;
        if (fr < 0)
            throw std::runtime_error("fault location is de-energized");
        Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
        e(fr) = Complex(1, 0);
        col1 = m.lu1.solve(e);
        z1th = col1(fr);
        if (m.y2_ok) {
            col2 = m.lu2.solve(e);
            z2th = col2(fr);
        } else {
            col2 = col1;
            z2th = z1th;
        }
        if (!m.y0_singular) {
            col0 = m.lu0.solve(e);
            z0th = col0(fr);
        }
    }

    // linear-response data for the exact grid-former EMF fold-back
    Complex kappa(0, 0);
    if (!m.formers.empty() && fault)
        kappa = fault_sequence_currents(*fault, Complex(1, 0), z1th, z2th,
                                        m.y0_singular ? Complex(0, 0) : z0th, m.y0_singular,
                                        r_fault_pu)(1);
    std::vector<Complex> z_nn(m.formers.size()), z_nf(m.formers.size());
    for (size_t k = 0; k < m.formers.size(); ++k) {
        int nr = m.red[m.formers[k].node];
        Eigen::VectorXcd en = Eigen::VectorXcd::Zero(n);
        en(nr) = Complex(1, 0);
        z_nn[k] = m.lu1.solve(en)(nr);
        z_nf[k] = fault ? col1(nr) : Complex(0, 0);
    }

    std::vector<Complex> i_inv(m.inverters.size());
    for (size_t k = 0; k < m.inverters.size(); ++k)
        i_inv[k] = initial_injections ? (*initial_injections)[k]
                                      : std::conj(m.inverters[k].s_pu);  // desired at V = 1∠0
    // once a unit hits its limit it stays in the limited mode for the
    // remainder of this quasi-static window
    std::vector<char> clamped(m.inverters.size(), 0);

    // the fault iteration errors out at 50 per the solver contract; the
    // steady base solve in a slack-free island contracts slowly and gets a
    // larger budget plus over-relaxation
    const bool iterative = !m.inverters.empty() || !m.formers.empty();
    const int max_iter = !iterative ? 1 : (fault ? 50 : 400);
    double residual = 0.0;
    double step = 0.7;
    double prev_residual = std::numeric_limits<double>::infinity();
    std::vector<Complex> e_former(m.formers.size(), Complex(1.0, 0.0));
    for (int iter = 0; iter < max_iter; ++iter) {
        Eigen::VectorXcd inj = m.inorton;
        for (size_t k = 0; k < m.inverters.size(); ++k) inj(m.red[m.inverters[k].node]) += i_inv[k];
        for (size_t k = 0; k < m.formers.size(); ++k)
            inj(m.red[m.formers[k].node]) += e_former[k] * m.formers[k].y;
        Eigen::VectorXcd base1 = m.lu1.solve(inj);

        if (fault) {
            Complex vpre = base1(fr);
            sol.fault_iseq = fault_sequence_currents(*fault, vpre, z1th, z2th,
                                                     m.y0_singular ? Complex(0, 0) : z0th,
                                                     m.y0_singular, r_fault_pu);
            sol.v1 = base1 - sol.fault_iseq(1) * col1;
            sol.v2 = m.y2_ok ? Eigen::VectorXcd(-sol.fault_iseq(2) * col2)
                             : Eigen::VectorXcd::Zero(n);
            sol.v0 = m.y0_singular ? Eigen::VectorXcd::Zero(n)
                                   : Eigen::VectorXcd(-sol.fault_iseq(0) * col0);
        } else {
            sol.v1 = base1;
        }

        if (!iterative) break;
        residual = 0.0;
        for (size_t k = 0; k < m.formers.size(); ++k) {
            // with the other injections held, the former current is affine in
            // its EMF: solve |P e + Q| = i_max for the EMF magnitude exactly
            const Complex y = m.formers[k].y;
            Complex i_f = (e_former[k] - sol.v1(m.red[m.formers[k].node])) * y;
            Complex alpha = y * (z_nn[k] - kappa * z_nf[k] * z_nf[k]);
            Complex P = y * (Complex(1, 0) - alpha);
            Complex Q = i_f - P * e_former[k];
            double imax = m.formers[k].i_max;
            double x;
            if (std::abs(P * Complex(1, 0) + Q) <= imax) {
                x = 1.0;  // full EMF satisfies the limit
            } else {
                double a = std::norm(P);
                double beta = (P * std::conj(Q)).real();
                double disc = beta * beta - a * (std::norm(Q) - imax * imax);
                x = disc >= 0.0 ? (-beta + std::sqrt(disc)) / a : -beta / a;
                x = std::clamp(x, 0.0, 1.0);
            }
            Complex e_new(x, 0.0);
            residual = std::max(residual, std::abs((e_new - e_former[k]) * y));
            e_former[k] = e_new;
        }
        for (size_t k = 0; k < m.inverters.size(); ++k) {
            const auto& ref = m.inverters[k];
            Complex v = sol.v1(m.red[ref.node]);
            Complex desired;
            double vm = std::abs(v);
            if (vm > 1e-8) desired = std::conj(ref.s_pu / v);
            else desired = std::conj(ref.s_pu);  // flat-voltage fallback
            if (std::abs(desired) > ref.i_max) clamped[k] = 1;
            if (clamped[k]) {
                double ang;
                if (anchor_angles) ang = (*anchor_angles)[k];
                else ang = vm > 1e-8 ? std::arg(v) : 0.0;
                // reactive support injects reactive power: limited current
                // lags the terminal voltage by 90 degrees
                double shift = ref.reactive_support ? -kPi / 2.0 : 0.0;
                desired = std::polar(ref.i_max, ang + shift);
            }
            residual = std::max(residual, std::abs(desired - i_inv[k]));
            i_inv[k] += step * (desired - i_inv[k]);
        }
        if (residual < 1e-11) break;
        if (residual > prev_residual) step = std::max(0.05, 0.5 * step);
        else step = std::min(3.0, 1.3 * step);
        prev_residual = residual;
        if (iter == max_iter - 1) {
            std::ostringstream os;
            os << "inverter fixed-point iteration did not converge after " << max_iter
               << " iterations; last residual " << residual << " pu";
            throw std::runtime_error(os.str());
        }
    }
    sol.inverter_i = std::move(i_inv);
    sol.former_emf = std::move(e_former);
    return sol;
}

ThreePhase seq_to_phase(Complex zero, Complex pos, Complex neg) {
    return phase_components(SequenceSet{zero, pos, neg});
}

PhasorState extract_state(const Model& m, const SequenceSolution& sol, const FaultSpec* fault) {
    PhasorState st;
    auto vat = [&](int gn, int seq) -> Complex {
        int i = m.red[gn];
        if (i < 0) return Complex(0, 0);
        return seq == 0 ? sol.v0(i) : (seq == 1 ? sol.v1(i) : sol.v2(i));
    };
    const Network& net = *m.net;
    for (const auto& b : net.buses) {
        int gn = m.node(b.id);
        st.bus_v[b.id] = seq_to_phase(vat(gn, 0), vat(gn, 1), vat(gn, 2));
    }
    for (const auto& l : net.laterals) {
        int gn = m.node(l.endpoint_bus);
        st.bus_v[l.endpoint_bus] = seq_to_phase(vat(gn, 0), vat(gn, 1), vat(gn, 2));
    }

    auto branch_current = [&](const Branch& b) -> ThreePhase {
        if (!b.in_service || m.red[b.i] < 0 || m.red[b.j] < 0) return {};
        Complex i0 = (vat(b.i, 0) - vat(b.j, 0)) / b.z0;
        Complex i1 = (vat(b.i, 1) - vat(b.j, 1)) / b.z1;
        Complex i2 = (vat(b.i, 2) - vat(b.j, 2)) / b.z1;
        return seq_to_phase(i0, i1, i2);
    };
    for (const auto& s : net.segments) {
        st.segment_i_from[s.id] = ThreePhase{};
        st.segment_i_to[s.id] = ThreePhase{};
    }
    for (const auto& b : m.branches) {
        ThreePhase i = branch_current(b);
        switch (b.kind) {
            case Branch::Kind::SegmentWhole:
                st.segment_i_from[b.id] = i;
                st.segment_i_to[b.id] = i * Complex(-1, 0);
                break;
            case Branch::Kind::SegmentFromHalf:
                st.segment_i_from[b.id] = i;
                break;
            case Branch::Kind::SegmentToHalf:
                st.segment_i_to[b.id] = i;
                break;
            case Branch::Kind::Lateral:
                st.lateral_i[b.id] = i;
                break;
        }
    }
    for (const auto& s : net.sources) {
        auto it = m.emf_by_source.find(s.id);
        Complex i1(0, 0), i2(0, 0), i0(0, 0);
        int gn = m.node(s.bus);
        if (gn < 0 || m.red[gn] < 0) {
            st.source_i[s.id] = ThreePhase{};
            continue;
        }
        if (it != m.emf_by_source.end()) {
            Complex y = it->second.second;
            Complex e(1, 0);
            for (size_t k = 0; k < m.formers.size(); ++k)
                if (m.formers[k].src == &s) e = sol.former_emf[k];
            i1 = (e - vat(gn, 1)) * y;
            i2 = -vat(gn, 2) * y;
        }
        for (size_t k = 0; k < m.inverters.size(); ++k)
            if (m.inverters[k].src == &s) i1 += sol.inverter_i[k];
        auto git = m.grounding_y.find(s.id);
        if (git != m.grounding_y.end()) i0 = -vat(gn, 0) * git->second;
        st.source_i[s.id] = seq_to_phase(i0, i1, i2);
    }
    if (fault) {
        st.fault_active = true;
        st.fault_i = seq_to_phase(sol.fault_iseq(0), sol.fault_iseq(1), sol.fault_iseq(2));
    }
    return st;
}

}  // namespace

const ThreePhase& PhasorState::voltage(const std::string& bus) const {
    auto it = bus_v.find(bus);
    if (it == bus_v.end()) throw std::runtime_error("no voltage recorded for bus " + bus);
    return it->second;
}

PhasorState FaultSolver::solve_steady(const TopologyState& topo,
                                      const std::optional<FaultSpec>& split_for,
                                      bool allow_dead) const {
    Model m = build_model(net_, topo, split_for);
    reduce_to_energized(m, allow_dead);
    assemble_matrices(m);
    SequenceSolution sol = solve_sequences(m, nullptr, 0.0);
    return extract_state(m, sol, nullptr);
}

PhasorState FaultSolver::solve_faulted(const TopologyState& topo, const FaultSpec& fault) const {
    Model m = build_model(net_, topo, fault);
    reduce_to_energized(m);
    assemble_matrices(m);
    double rf_pu = fault.r_fault_ohm / net_.z_base_ohm();
    std::vector<double> anchors;
    std::vector<Complex> init;
    if (!m.inverters.empty()) {
        SequenceSolution pre = solve_sequences(m, nullptr, 0.0);
        for (const auto& inv : m.inverters)
            anchors.push_back(std::arg(pre.v1(m.red[inv.node])));
        init = pre.inverter_i;
    }
    SequenceSolution sol = solve_sequences(m, &fault, rf_pu, anchors.empty() ? nullptr : &anchors,
                                           init.empty() ? nullptr : &init);
    return extract_state(m, sol, &fault);
}

FaultSolution FaultSolver::solve_fault(const TopologyState& topo, const FaultSpec& fault) const {
    FaultSolution fs;
    fs.fault_spec = fault;
    fs.prefault = solve_steady(topo, fault);
    fs.faulted = solve_faulted(topo, fault);
    return fs;
}

bool FaultSolver::fault_energized(const TopologyState& topo, const FaultSpec& fault) const {
    Model m = build_model(net_, topo, fault);
    try {
        reduce_to_energized(m);
    } catch (const std::runtime_error&) {
        return false;  // no energized source at all
    }
    return m.fault_node >= 0 && m.red[m.fault_node] >= 0;
}

double FaultSolver::max_kcl_residual(const TopologyState& topo, const PhasorState& state,
                                     const std::optional<FaultSpec>& fault) const {
    Model m = build_model(net_, topo, fault);
    reduce_to_energized(m);

    // per-node per-phase mismatch from the extracted quantities
    std::map<std::string, ThreePhase> mismatch;
    auto add = [&](const std::string& bus, const ThreePhase& i) {
        auto& acc = mismatch[bus];
        acc = acc + i;
    };
    const FaultSpec::OnSegment* split = nullptr;
    if (fault) split = std::get_if<FaultSpec::OnSegment>(&fault->location);
    for (const auto& s : net_.segments) {
        auto f = state.segment_i_from.at(s.id);
        auto t = state.segment_i_to.at(s.id);
        add(s.from_bus, f * Complex(-1, 0));  // current leaves the bus into the segment
        add(s.to_bus, t * Complex(-1, 0));
        if (split && split->segment_id == s.id) {
            // both half currents arrive at the internal fault node
            add(kFaultNode, f + t);
            if (state.fault_active) add(kFaultNode, state.fault_i * Complex(-1, 0));
        }
    }
    for (const auto& l : net_.laterals) {
        auto i = state.lateral_i.count(l.id) ? state.lateral_i.at(l.id) : ThreePhase{};
        add(l.host_bus, i * Complex(-1, 0));
        add(l.endpoint_bus, i);  // arrives at the endpoint
        double mult = topo.load_factor(l.id);
        if (mult > 0.0) {
            Complex s_pu(l.load_p_mw / net_.base_mva, l.load_q_mvar / net_.base_mva);
            Complex y = std::conj(s_pu) * mult;
            const ThreePhase& v = state.voltage(l.endpoint_bus);
            // the load conducts positive and negative sequence only; its
            // phase current is y * (V_phase - V0)
            Complex v0 = (v.a + v.b + v.c) / 3.0;
            add(l.endpoint_bus, ThreePhase{-y * (v.a - v0), -y * (v.b - v0), -y * (v.c - v0)});
        }
    }
    for (const auto& s : net_.sources) {
        if (state.source_i.count(s.id)) add(s.bus, state.source_i.at(s.id));
    }
    if (fault && state.fault_active) {
        std::string fault_bus;
        if (auto* ab = std::get_if<FaultSpec::AtBus>(&fault->location)) fault_bus = ab->bus_id;
        else if (auto* le = std::get_if<FaultSpec::AtLateralEndpoint>(&fault->location))
            fault_bus = net_.find_lateral(le->lateral_id)->endpoint_bus;
        if (!fault_bus.empty()) add(fault_bus, state.fault_i * Complex(-1, 0));
    }

    double worst = 0.0;
    for (const auto& [bus, mm] : mismatch) {
        int gn = m.node(bus);
        if (gn < 0 || m.red[gn] < 0) continue;
        for (int p = 0; p < 3; ++p) worst = std::max(worst, std::abs(mm.phase(p)));
    }
    return worst;
}

PhasorState solve_prefault(const Network& net) {
    return FaultSolver(net).solve_steady(TopologyState{});
}

FaultSolution solve_fault(const Network& net, const FaultSpec& fault) {
    return FaultSolver(net).solve_fault(TopologyState{}, fault);
}

MeasuringPoint relay_ct(const Network& net, const std::string& relay_id) {
    MeasuringPoint p;
    p.kind = MeasuringPoint::Kind::RelayCt;
    p.id = relay_id;
    p.ct_ratio = net.ct_ratio();
    p.vt_ratio = net.vt_ratio();
    return p;
}

MeasuringPoint lateral_ct(const Network& net, const std::string& lateral_id) {
    MeasuringPoint p;
    p.kind = MeasuringPoint::Kind::LateralCt;
    p.id = lateral_id;
    p.ct_ratio = net.ct_ratio();
    p.vt_ratio = net.vt_ratio();
    return p;
}

SecondaryMeasurement measure(const Network& net, const PhasorState& state,
                             const MeasuringPoint& point) {
    ThreePhase v_pu, i_pu;
    if (point.kind == MeasuringPoint::Kind::RelayCt) {
        bool found = false;
        for (const auto& s : net.segments) {
            if (relay_name(s.from_bus, s.to_bus) == point.id) {
                i_pu = state.segment_i_from.at(s.id);
                v_pu = state.voltage(s.from_bus);
                found = true;
            } else if (relay_name(s.to_bus, s.from_bus) == point.id) {
                i_pu = state.segment_i_to.at(s.id);
                v_pu = state.voltage(s.to_bus);
                found = true;
            }
        }
        if (!found) throw std::runtime_error("no relay '" + point.id + "' in network");
    } else {
        const Lateral* lat = net.find_lateral(point.id);
        if (!lat) throw std::runtime_error("no lateral '" + point.id + "' in network");
        i_pu = state.lateral_i.count(lat->id) ? state.lateral_i.at(lat->id) : ThreePhase{};
        v_pu = state.voltage(lat->host_bus);
    }
    if (point.reversed) i_pu = i_pu * Complex(-1, 0);

    const double v_base_ln = net.base_kv * 1e3 / std::sqrt(3.0);
    SecondaryMeasurement out;
    out.v_volts = v_pu * Complex(v_base_ln / point.vt_ratio, 0);
    out.i_amps = i_pu * Complex(net.i_base_a() / point.ct_ratio, 0);
    return out;
}

}  // namespace meshprot
