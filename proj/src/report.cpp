#include "meshprot/report.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace meshprot {

namespace {

using Json = nlohmann::ordered_json;

std::string fmt_ms(double t_s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", t_s * 1e3);
    return buf;
}

std::string fmt1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

Json trace_to_json(const std::string& relay, const RelayTrace& tr) {
    Json j;
    j["relay"] = relay;
    if (tr.t_d) j["t_d_s"] = *tr.t_d;
    if (tr.t_s) j["t_s_s"] = *tr.t_s;
    if (tr.claiming_element) {
        switch (*tr.claiming_element) {
            case ElementKind::Ground: j["element"] = "ground"; break;
            case ElementKind::TwoPhase: j["element"] = "2ph"; break;
            case ElementKind::ThreePhase: j["element"] = "3ph"; break;
        }
    }
    if (tr.ft) {
        j["fault_type"] = to_string(tr.ft->value);
        j["ps_source"] = tr.ft->source == PsSource::CurrentPS
                             ? "current"
                             : (tr.ft->source == PsSource::VoltagePS ? "voltage" : "balanced");
    }
    if (tr.phi_i21) j["phi_is21_deg"] = *tr.phi_i21;
    if (tr.phi_i20) j["phi_is20_deg"] = *tr.phi_i20;
    if (tr.phi_v21) j["phi_v21_deg"] = *tr.phi_v21;
    if (tr.phi_v20) j["phi_v20_deg"] = *tr.phi_v20;
    if (tr.du_percent)
        j["du_percent"] = {(*tr.du_percent)[0], (*tr.du_percent)[1], (*tr.du_percent)[2]};
    if (tr.theta_deg) j["theta_deg"] = *tr.theta_deg;
    if (!tr.polarization.empty()) j["polarization"] = tr.polarization;
    if (tr.dir) j["direction"] = to_string(*tr.dir);
    if (tr.t_tf) j["t_tf_s"] = *tr.t_tf;
    if (tr.t_sr) j["t_sr_s"] = *tr.t_sr;
    if (tr.rfb_ip_max) {
        Json r;
        r["ip_max_primary_a"] = *tr.rfb_ip_max;
        if (tr.rfb_t_p) r["t_p_s"] = *tr.rfb_t_p;
        if (tr.rfb_t_tr) r["t_tr_s"] = *tr.rfb_t_tr;
        if (tr.rfb_theta_p) r["theta_p_deg"] = *tr.rfb_theta_p;
        r["v_bus_pu"] = {tr.rfb_v_pu[0], tr.rfb_v_pu[1], tr.rfb_v_pu[2]};
        r["path"] = tr.rfb_path;
        j["rfb"] = r;
    }
    if (tr.trip_t) j["trip_s"] = *tr.trip_t;
    return j;
}

}  // namespace

std::string report_to_json(const RunReport& report) {
    Json j;
    j["network"] = report.network_name;
    j["scenario"] = report.scenario_name;
    if (report.fault) j["fault"] = report.fault->describe();
    j["frequency_hz"] = report.frequency_hz;
    j["cleared"] = report.cleared;
    if (report.cleared) j["cleared_at_s"] = report.cleared_at_s;
    j["selectivity_ok"] = report.selectivity_ok;
    j["opened_breakers"] = report.opened_breakers;
    j["blown_fuses"] = report.blown_fuses;
    j["expected_isolation"] = report.expected_isolation;
    j["isolated_buses"] = report.isolated_buses;
    if (!report.diagnosis.empty()) j["diagnosis"] = report.diagnosis;
    Json traces = Json::array();
    for (const auto& [relay, tr] : report.traces) {
        if (!tr.t_d && !tr.trip_t) continue;  // relay never engaged
        traces.push_back(trace_to_json(relay, tr));
    }
    j["relay_traces"] = traces;
    Json events = Json::array();
    for (const auto& e : report.events) {
        Json je;
        je["t_s"] = e.t;
        je["source"] = e.source;
        je["kind"] = e.kind;
        if (!e.detail.empty()) je["detail"] = e.detail;
        events.push_back(je);
    }
    j["events"] = events;
    return j.dump(2) + "\n";
}

std::string events_to_csv(const RunReport& report) {
    std::ostringstream os;
    os << "t_s,source,kind,detail\n";
    for (const auto& e : report.events) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.9f", e.t);
        std::string detail = e.detail;
        for (auto& c : detail)
            if (c == ',') c = ';';
        os << buf << "," << e.source << "," << e.kind << "," << detail << "\n";
    }
    return os.str();
}

std::string render_table(const std::vector<RunReport>& reports, TableStyle style) {
    std::ostringstream os;
    auto cell = [&](const std::string& s, size_t w) {
        os << s;
        for (size_t k = s.size(); k < w; ++k) os << ' ';
        os << "  ";
    };
    if (style == TableStyle::StartPsDirection) {
        const char* hdr[] = {"scenario", "relay",  "t_S(ms)", "phi_Is21", "phi_Is20",
                             "phi_V21",  "phi_V20", "dU_a(%)", "dU_b(%)",  "dU_c(%)",
                             "theta(deg)", "t_TF(ms)", "t_SR(ms)"};
        const size_t w[] = {24, 8, 8, 9, 9, 9, 9, 8, 8, 8, 10, 9, 9};
        for (size_t k = 0; k < std::size(hdr); ++k) cell(hdr[k], w[k]);
        os << "\n";
        for (const auto& rep : reports) {
            for (const auto& [relay, tr] : rep.traces) {
                if (!tr.t_s) continue;
                size_t c = 0;
                cell(rep.scenario_name, w[c++]);
                cell(relay, w[c++]);
                cell(fmt_ms(*tr.t_s - (rep.fault ? rep.fault->t_inception_s : 0.0)), w[c++]);
                cell(tr.phi_i21 ? fmt1(*tr.phi_i21) : "-", w[c++]);
                cell(tr.phi_i20 ? fmt1(*tr.phi_i20) : "-", w[c++]);
                cell(tr.phi_v21 ? fmt1(*tr.phi_v21) : "-", w[c++]);
                cell(tr.phi_v20 ? fmt1(*tr.phi_v20) : "-", w[c++]);
                for (int p = 0; p < 3; ++p)
                    cell(tr.du_percent ? fmt1((*tr.du_percent)[p]) : "-", w[c++]);
                cell(tr.theta_deg ? fmt1(*tr.theta_deg) : "-", w[c++]);
                double t0 = rep.fault ? rep.fault->t_inception_s : 0.0;
                cell(tr.t_tf ? fmt_ms(*tr.t_tf - t0) : "-", w[c++]);
                cell(tr.t_sr ? fmt_ms(*tr.t_sr - t0) : "-", w[c++]);
                os << "\n";
            }
        }
        return os.str();
    }
    const char* hdr[] = {"scenario", "relay", "I_Pmax(A)", "V_a(pu)", "V_b(pu)",
                         "V_c(pu)",  "t_P(ms)", "theta_P",  "t_TR(ms)", "path"};
    const size_t w[] = {24, 8, 10, 8, 8, 8, 10, 8, 10, 16};
    for (size_t k = 0; k < std::size(hdr); ++k) cell(hdr[k], w[k]);
    os << "\n";
    for (const auto& rep : reports) {
        for (const auto& [relay, tr] : rep.traces) {
            if (!tr.rfb_ip_max) continue;
            size_t c = 0;
            double t0 = rep.fault ? rep.fault->t_inception_s : 0.0;
            cell(rep.scenario_name, w[c++]);
            cell(relay, w[c++]);
            cell(fmt1(*tr.rfb_ip_max), w[c++]);
            for (int p = 0; p < 3; ++p) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.3f", tr.rfb_v_pu[p]);
                cell(buf, w[c++]);
            }
            cell(tr.rfb_t_p ? fmt_ms(*tr.rfb_t_p) : "-", w[c++]);
            cell(tr.rfb_theta_p ? fmt1(*tr.rfb_theta_p) : "-", w[c++]);
            cell(tr.rfb_t_tr ? fmt_ms(*tr.rfb_t_tr - t0) : "-", w[c++]);
            cell(tr.rfb_path, w[c++]);
            os << "\n";
        }
    }
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

}  // namespace meshprot
