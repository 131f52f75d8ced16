#include "mmc_htf/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace htf {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Section {
public:
    Section(const json* j, std::string path) : j_(j), path_(std::move(path)) {
        if (j_ && !j_->is_object()) throw ConfigError(path_ + ": expected an object");
    }

    bool has(const char* key) const { return j_ && j_->contains(key); }

    void num(const char* key, double& out, double scale = 1.0) {
        if (const json* v = take(key)) {
            if (!v->is_number()) throw ConfigError(where(key) + ": expected a number");
            out = v->get<double>() * scale;
        }
    }
    void num(const char* key, std::optional<double>& out, double scale = 1.0) {
        if (const json* v = take(key)) {
            if (v->is_null()) {
                out.reset();
                return;
            }
            if (!v->is_number()) throw ConfigError(where(key) + ": expected a number or null");
            out = v->get<double>() * scale;
        }
    }
    void integer(const char* key, int& out) {
        if (const json* v = take(key)) {
            if (!v->is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
            out = v->get<int>();
        }
    }
    void boolean(const char* key, bool& out) {
        if (const json* v = take(key)) {
            if (!v->is_boolean()) throw ConfigError(where(key) + ": expected true or false");
            out = v->get<bool>();
        }
    }
    bool text(const char* key, std::string& out) {
        if (const json* v = take(key)) {
            if (!v->is_string()) throw ConfigError(where(key) + ": expected a string");
            out = v->get<std::string>();
            return true;
        }
        return false;
    }
    Section sub(const char* key) {
        const json* v = take(key);
        return Section(v, where(key));
    }
    std::string where(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        if (!j_) return;
        for (auto it = j_->begin(); it != j_->end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(where(it.key().c_str()) + ": unknown key");
    }

private:
    const json* take(const char* key) {
        if (!j_ || !j_->contains(key)) return nullptr;
        seen_.insert(key);
        return &(*j_)[key];
    }

    const json* j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class F>
auto rethrow_as_config(const std::string& key, F&& f) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

std::string fmt12(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

json spectrum_json(const HarmonicVector& v) {
    json re = json::array(), im = json::array();
    for (int k = -v.order(); k <= v.order(); ++k) {
        re.push_back(v.get(k).real());
        im.push_back(v.get(k).imag());
    }
    return {{"re", re}, {"im", im}};
}

HarmonicVector spectrum_from(const json& j, const std::string& name, int order, double w0) {
    if (!j.is_object() || !j.contains("re") || !j.contains("im"))
        throw ConfigError(name + ": expected {re, im}");
    const auto re = j.at("re").get<std::vector<double>>();
    const auto im = j.at("im").get<std::vector<double>>();
    const std::size_t n = static_cast<std::size_t>(2 * order + 1);
    if (re.size() != n || im.size() != n)
        throw ConfigError(name + ": expected " + std::to_string(n) + " coefficients");
    CVector c(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) c(static_cast<Eigen::Index>(i)) = cd(re[i], im[i]);
    try {
        return HarmonicVector(std::move(c), w0, true, 1e-8);
    } catch (const std::invalid_argument&) {
        throw ConfigError(name + ": spectrum is not conjugate-symmetric");
    }
}

struct NamedPhase {
    const char* name;
    PhaseSpectra OperatingPoint::*member;
};
struct NamedScalar {
    const char* name;
    HarmonicVector OperatingPoint::*member;
};

constexpr NamedPhase kPhaseSpectra[] = {
    {"m_u", &OperatingPoint::m_u},   {"m_l", &OperatingPoint::m_l}, {"u_cu", &OperatingPoint::u_cu},
    {"u_cl", &OperatingPoint::u_cl}, {"i_c", &OperatingPoint::i_c}, {"i_g", &OperatingPoint::i_g},
    {"u_g", &OperatingPoint::u_g},
};
constexpr NamedScalar kFrameSpectra[] = {
    {"u_d", &OperatingPoint::u_d},   {"u_q", &OperatingPoint::u_q},
    {"i_d", &OperatingPoint::i_d},   {"i_q", &OperatingPoint::i_q},
    {"m1_d", &OperatingPoint::m1_d}, {"m1_q", &OperatingPoint::m1_q},
    {"i_cd", &OperatingPoint::i_cd}, {"i_cq", &OperatingPoint::i_cq},
    {"m2_d", &OperatingPoint::m2_d}, {"m2_q", &OperatingPoint::m2_q},
    {"theta_offset", &OperatingPoint::theta_offset}, {"u_dc", &OperatingPoint::u_dc},
};

double wrap_deg(double d) {
    d = std::remainder(d, 360.0);
    return d == -180.0 ? 180.0 : d;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

FreqGrid FreqGrid::parse(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 4) throw ConfigError("grid '" + text + "': expected start:stop:points:log|lin");
    FreqGrid g;
    try {
        std::size_t used = 0;
        g.start_hz = std::stod(parts[0], &used);
        if (used != parts[0].size()) throw std::invalid_argument("start");
        g.stop_hz = std::stod(parts[1], &used);
        if (used != parts[1].size()) throw std::invalid_argument("stop");
        g.points = std::stoi(parts[2], &used);
        if (used != parts[2].size()) throw std::invalid_argument("points");
    } catch (const std::exception&) {
        throw ConfigError("grid '" + text + "': malformed number");
    }
    if (parts[3] == "log") g.log = true;
    else if (parts[3] == "lin") g.log = false;
    else throw ConfigError("grid '" + text + "': spacing must be log or lin");
    if (g.points < 1 || !(g.start_hz > 0.0) || !(g.stop_hz >= g.start_hz))
        throw ConfigError("grid '" + text + "': need 0 < start <= stop and points >= 1");
    return g;
}

std::string FreqGrid::to_string() const {
    return fmt12(start_hz) + ":" + fmt12(stop_hz) + ":" + std::to_string(points) +
           (log ? ":log" : ":lin");
}

std::vector<double> FreqGrid::values() const {
    std::vector<double> f(static_cast<std::size_t>(points));
    if (points == 1) {
        f[0] = start_hz;
        return f;
    }
    for (int i = 0; i < points; ++i) {
        const double t = static_cast<double>(i) / (points - 1);
        f[static_cast<std::size_t>(i)] =
            log ? start_hz * std::pow(stop_hz / start_hz, t) : start_hz + t * (stop_hz - start_hz);
    }
    f.back() = stop_hz;
    return f;
}

SystemConfig parse_config(const json& j) {
    SystemConfig cfg;
    Section root(&j, "");

    {
        Section m = root.sub("model");
        std::string s;
        if (m.text("converter", s))
            cfg.spec.converter = rethrow_as_config(m.where("converter"), [&] { return converter_from_string(s); });
        if (m.text("control", s))
            cfg.spec.control = rethrow_as_config(m.where("control"), [&] { return control_from_string(s); });
        m.integer("h", cfg.spec.h);
        m.finish();
    }
    {
        auto& c = cfg.spec.circuit;
        Section s = root.sub("circuit");
        s.num("S_rating_MVA", c.S_rating, 1e6);
        s.num("U_dc_kV", c.U_dc, 1e3);
        s.num("U_g_ll_rms_kV", c.U_g_ll_rms, 1e3);
        double f0 = c.w0 / (2.0 * kPi);
        s.num("f0_Hz", f0);
        c.w0 = 2.0 * kPi * f0;
        s.integer("N", c.N);
        s.num("L_arm_mH", c.L_arm, 1e-3);
        s.num("R_arm_ohm", c.R_arm);
        s.num("C_m_mF", c.C_m, 1e-3);
        s.num("R_g_ohm", c.R_g);
        s.num("L_g_mH", c.L_g, 1e-3);
        s.num("L_2l_mH", c.L_2l, 1e-3);
        s.num("R_2l_ohm", c.R_2l);
        s.finish();
    }
    {
        auto& p = cfg.spec.control_params;
        Section s = root.sub("control");
        Section g = s.sub("gfm");
        g.num("H_s", p.gfm.H);
        g.num("D_pu", p.gfm.D);
        g.num("D_v_pu", p.gfm.D_v);
        g.num("T_v_s", p.gfm.T_v);
        g.num("k_pv_pu", p.gfm.k_pv);
        g.num("k_iv_pu", p.gfm.k_iv);
        g.finish();
        Section pll = s.sub("pll");
        pll.num("k_p_pu", p.pll.k_p);
        pll.num("k_i_pu", p.pll.k_i);
        pll.finish();
        Section dc = s.sub("dc");
        dc.num("k_pd_pu", p.dc.k_pd);
        dc.num("k_id_pu", p.dc.k_id);
        dc.finish();
        Section pq = s.sub("pq");
        pq.num("k_pp_pu", p.pq.k_pp);
        pq.num("k_ip_pu", p.pq.k_ip);
        pq.finish();
        Section in = s.sub("inner");
        in.num("k_pi_pu", p.inner.k_pi);
        in.num("k_ii_pu", p.inner.k_ii);
        in.num("K_i_pu", p.inner.K_i);
        in.finish();
        Section cc = s.sub("ccsc");
        cc.num("k_pic_pu", p.ccsc.k_pic);
        cc.num("k_iic_pu", p.ccsc.k_iic);
        cc.num("K_c_pu", p.ccsc.K_c);
        cc.finish();
        s.finish();
    }
    {
        auto& sp = cfg.spec.setpoints;
        Section s = root.sub("setpoints");
        s.num("P_ref_pu", sp.P_ref_pu);
        s.num("Q_ref_pu", sp.Q_ref_pu);
        s.num("U_set_pu", sp.U_set_pu);
        s.num("m_d", sp.m_d);
        s.num("m_q", sp.m_q);
        s.num("I_dc_A", sp.I_dc);
        s.finish();
    }
    {
        Section s = root.sub("analysis");
        std::string g;
        if (s.text("grid", g)) cfg.grid = FreqGrid::parse(g);
        s.boolean("include_grid_impedance", cfg.assemble.include_grid_impedance);
        std::string form;
        if (s.text("power_balance", form)) {
            if (form == "exact") cfg.assemble.plant.power_balance = PowerBalanceForm::Exact;
            else if (form == "symmetrized") cfg.assemble.plant.power_balance = PowerBalanceForm::Symmetrized;
            else throw ConfigError(s.where("power_balance") + ": expected exact or symmetrized");
        }
        s.finish();
    }
    {
        Section s = root.sub("simulation");
        s.num("dt_us", cfg.sim.dt, 1e-6);
        s.num("C_dc_nF", cfg.sim.C_dc, 1e-9);
        s.num("R_dc_pu", cfg.sim.R_dc_pu);
        s.integer("warmup_periods", cfg.sim.warmup_periods);
        s.boolean("disable_ccsc", cfg.sim.disable_ccsc);
        s.finish();
        if (!(cfg.sim.dt > 0.0) || !(cfg.sim.C_dc > 0.0) || !(cfg.sim.R_dc_pu > 0.0) ||
            cfg.sim.warmup_periods < 0)
            throw ConfigError("simulation: values must be positive");
    }
    {
        Section s = root.sub("scan");
        std::string g;
        if (s.text("grid", g)) cfg.scan.grid = FreqGrid::parse(g);
        s.num("amplitude_pu", cfg.scan.amplitude_pu);
        s.num("window_s", cfg.scan.window_s);
        s.num("guard_band_Hz", cfg.scan.guard_band_hz);
        s.finish();
        if (!(cfg.scan.amplitude_pu > 0.0) || !(cfg.scan.window_s > 0.0) || cfg.scan.guard_band_hz < 0.0)
            throw ConfigError("scan: amplitude and window must be positive");
    }
    {
        Section s = root.sub("compare");
        s.num("tol_dB", cfg.compare.tol_db);
        s.num("tol_deg", cfg.compare.tol_deg);
        s.num("guard_band_Hz", cfg.compare.guard_band_hz);
        s.finish();
    }
    {
        Section s = root.sub("output");
        s.text("directory", cfg.output.directory);
        s.finish();
    }
    root.finish();

    try {
        cfg.spec.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid model: ") + e.what());
    }
    return cfg;
}

SystemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config(j);
}

json config_to_json(const SystemConfig& cfg) {
    const auto& c = cfg.spec.circuit;
    const auto& p = cfg.spec.control_params;
    const auto& sp = cfg.spec.setpoints;
    auto opt = [](const std::optional<double>& v, double scale) -> json {
        return v ? json(*v / scale) : json(nullptr);
    };
    json j;
    j["model"] = {{"converter", to_string(cfg.spec.converter)},
                  {"control", to_string(cfg.spec.control)},
                  {"h", cfg.spec.h}};
    j["circuit"] = {{"S_rating_MVA", c.S_rating / 1e6}, {"U_dc_kV", c.U_dc / 1e3},
                    {"U_g_ll_rms_kV", c.U_g_ll_rms / 1e3}, {"f0_Hz", c.w0 / (2.0 * kPi)},
                    {"N", c.N}, {"L_arm_mH", c.L_arm / 1e-3}, {"R_arm_ohm", c.R_arm},
                    {"C_m_mF", c.C_m / 1e-3}, {"R_g_ohm", c.R_g}, {"L_g_mH", c.L_g / 1e-3},
                    {"L_2l_mH", opt(c.L_2l, 1e-3)}, {"R_2l_ohm", opt(c.R_2l, 1.0)}};
    j["control"] = {
        {"gfm", {{"H_s", p.gfm.H}, {"D_pu", p.gfm.D}, {"D_v_pu", p.gfm.D_v}, {"T_v_s", p.gfm.T_v},
                 {"k_pv_pu", p.gfm.k_pv}, {"k_iv_pu", p.gfm.k_iv}}},
        {"pll", {{"k_p_pu", p.pll.k_p}, {"k_i_pu", p.pll.k_i}}},
        {"dc", {{"k_pd_pu", p.dc.k_pd}, {"k_id_pu", p.dc.k_id}}},
        {"pq", {{"k_pp_pu", p.pq.k_pp}, {"k_ip_pu", p.pq.k_ip}}},
        {"inner", {{"k_pi_pu", p.inner.k_pi}, {"k_ii_pu", p.inner.k_ii}, {"K_i_pu", opt(p.inner.K_i, 1.0)}}},
        {"ccsc", {{"k_pic_pu", p.ccsc.k_pic}, {"k_iic_pu", p.ccsc.k_iic}, {"K_c_pu", opt(p.ccsc.K_c, 1.0)}}}};
    j["setpoints"] = {{"P_ref_pu", sp.P_ref_pu}, {"Q_ref_pu", sp.Q_ref_pu}, {"U_set_pu", sp.U_set_pu},
                      {"m_d", sp.m_d}, {"m_q", sp.m_q}, {"I_dc_A", opt(sp.I_dc, 1.0)}};
    j["analysis"] = {{"grid", cfg.grid.to_string()},
                     {"include_grid_impedance", cfg.assemble.include_grid_impedance},
                     {"power_balance", cfg.assemble.plant.power_balance == PowerBalanceForm::Exact
                                           ? "exact" : "symmetrized"}};
    j["simulation"] = {{"dt_us", cfg.sim.dt / 1e-6}, {"C_dc_nF", cfg.sim.C_dc / 1e-9},
                       {"R_dc_pu", cfg.sim.R_dc_pu}, {"warmup_periods", cfg.sim.warmup_periods},
                       {"disable_ccsc", cfg.sim.disable_ccsc}};
    j["scan"] = {{"grid", cfg.scan.grid.to_string()}, {"amplitude_pu", cfg.scan.amplitude_pu},
                 {"window_s", cfg.scan.window_s}, {"guard_band_Hz", cfg.scan.guard_band_hz}};
    j["compare"] = {{"tol_dB", cfg.compare.tol_db}, {"tol_deg", cfg.compare.tol_deg},
                    {"guard_band_Hz", cfg.compare.guard_band_hz}};
    j["output"] = {{"directory", cfg.output.directory}};
    return j;
}

json opoint_to_json(const OperatingPoint& op) {
    json spectra;
    for (const auto& [name, member] : kPhaseSpectra) {
        const PhaseSpectra& ps = op.*member;
        spectra[name] = {{"a", spectrum_json(ps[0])}, {"b", spectrum_json(ps[1])},
                         {"c", spectrum_json(ps[2])}};
    }
    for (const auto& [name, member] : kFrameSpectra) spectra[name] = spectrum_json(op.*member);
    return {{"converter", to_string(op.converter)},
            {"control", to_string(op.control)},
            {"order", op.order},
            {"w0_rad_s", op.w0},
            {"U_dc_V", op.U_dc},
            {"I_dc_A", op.I_dc},
            {"spectra", spectra}};
}

OperatingPoint opoint_from_json(const json& j) {
    OperatingPoint op;
    try {
        op.converter = converter_from_string(j.at("converter").get<std::string>());
        op.control = control_from_string(j.at("control").get<std::string>());
        op.order = j.at("order").get<int>();
        op.w0 = j.at("w0_rad_s").get<double>();
        op.U_dc = j.at("U_dc_V").get<double>();
        op.I_dc = j.at("I_dc_A").get<double>();
        if (op.order < 0 || !(op.w0 > 0.0)) throw ConfigError("opoint: bad order or w0");
        const json& s = j.at("spectra");
        static const char* kPhases[] = {"a", "b", "c"};
        for (const auto& [name, member] : kPhaseSpectra)
            for (int p = 0; p < 3; ++p)
                (op.*member)[static_cast<std::size_t>(p)] =
                    spectrum_from(s.at(name).at(kPhases[p]),
                                  std::string(name) + "." + kPhases[p], op.order, op.w0);
        for (const auto& [name, member] : kFrameSpectra)
            op.*member = spectrum_from(s.at(name), name, op.order, op.w0);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("opoint: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("opoint: ") + e.what());
    }
    return op;
}

void save_opoint(const OperatingPoint& op, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << opoint_to_json(op).dump(1) << '\n';
}

OperatingPoint load_opoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open operating point " + path);
    try {
        return opoint_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::vector<double> scan_frequencies(const std::vector<double>& requested, double window_s,
                                     double f0, double guard_band_hz) {
    std::vector<double> out;
    for (double f : requested) {
        const double snapped = std::round(f * window_s) / window_s;
        if (snapped <= 0.0) continue;
        const double dist = std::abs(snapped - f0 * std::round(snapped / f0));
        if (dist <= guard_band_hz) continue;
        out.push_back(snapped);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<BodeRow> bode_rows(const std::vector<AdmittanceResult>& results) {
    std::vector<BodeRow> rows;
    rows.reserve(results.size());
    for (const auto& r : results)
        rows.push_back({r.s.imag() / (2.0 * kPi), r.y11, r.y12, r.y21, r.y22, r.flagged});
    return rows;
}

std::vector<BodeRow> bode_rows(const std::vector<ScanResult>& results) {
    std::vector<BodeRow> rows;
    rows.reserve(results.size());
    for (const auto& r : results)
        rows.push_back({r.freq_hz, r.Y[0][0], r.Y[0][1], r.Y[1][0], r.Y[1][1], r.flagged});
    return rows;
}

void write_bode_csv(std::ostream& os, const std::vector<BodeRow>& rows) {
    os << "freq_hz,y11_re,y11_im,y12_re,y12_im,y21_re,y21_im,y22_re,y22_im,"
          "y11_db,y11_deg,y12_db,y12_deg,y21_db,y21_deg,y22_db,y22_deg,flagged\n";
    for (const auto& r : rows) {
        os << fmt12(r.freq_hz);
        for (cd y : {r.y11, r.y12, r.y21, r.y22}) os << ',' << fmt12(y.real()) << ',' << fmt12(y.imag());
        for (cd y : {r.y11, r.y12, r.y21, r.y22})
            os << ',' << fmt12(magnitude_db(y)) << ',' << fmt12(phase_deg(y));
        os << ',' << (r.flagged ? 1 : 0) << '\n';
    }
}

std::vector<BodeRow> read_bode_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("csv: empty file");
    std::map<std::string, std::size_t> col;
    {
        std::stringstream ss(line);
        std::size_t i = 0;
        for (std::string name; std::getline(ss, name, ',');) col[name] = i++;
    }
    static const char* kNeeded[] = {"freq_hz", "y11_re", "y11_im", "y12_re", "y12_im", "y21_re",
                                    "y21_im",  "y22_re", "y22_im", "flagged"};
    for (const char* n : kNeeded)
        if (!col.count(n)) throw ConfigError(std::string("csv: missing column ") + n);

    std::vector<BodeRow> rows;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> v;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) {
            char* end = nullptr;
            const double x = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str()) throw ConfigError("csv line " + std::to_string(lineno) + ": bad number");
            v.push_back(x);
        }
        if (v.size() < col.size()) throw ConfigError("csv line " + std::to_string(lineno) + ": short row");
        auto at = [&](const char* n) { return v[col[n]]; };
        rows.push_back({at("freq_hz"), cd(at("y11_re"), at("y11_im")), cd(at("y12_re"), at("y12_im")),
                        cd(at("y21_re"), at("y21_im")), cd(at("y22_re"), at("y22_im")),
                        at("flagged") != 0.0});
    }
    return rows;
}

void save_bode_csv(const std::vector<BodeRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_bode_csv(out, rows);
}

std::vector<BodeRow> load_bode_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_bode_csv(in);
}

CompareReport compare_bode(const std::vector<BodeRow>& analytic, const std::vector<BodeRow>& measured,
                           const CompareConfig& tol, double f0) {
    CompareReport rep;
    rep.tolerances = tol;
    if (analytic.empty() || measured.empty()) {
        rep.pass = false;
        rep.warnings.push_back("no rows to compare");
        return rep;
    }
    std::vector<double> a11, p11, a12, p12;
    for (const auto& m : measured) {
        const BodeRow* best = &analytic.front();
        for (const auto& a : analytic)
            if (std::abs(a.freq_hz - m.freq_hz) < std::abs(best->freq_hz - m.freq_hz)) best = &a;
        CompareEntry e;
        e.freq_hz = m.freq_hz;
        e.paired_freq_hz = best->freq_hz;
        if (std::abs(best->freq_hz - m.freq_hz) > 1e-6 * std::max(1.0, m.freq_hz)) rep.grids_match = false;
        e.d11_db = magnitude_db(m.y11) - magnitude_db(best->y11);
        e.d11_deg = wrap_deg(phase_deg(m.y11) - phase_deg(best->y11));
        e.d12_db = magnitude_db(m.y12) - magnitude_db(best->y12);
        e.d12_deg = wrap_deg(phase_deg(m.y12) - phase_deg(best->y12));
        const double dist = std::abs(m.freq_hz - f0 * std::round(m.freq_hz / f0));
        const bool finite = std::isfinite(e.d11_db) && std::isfinite(e.d11_deg) &&
                            std::isfinite(e.d12_db) && std::isfinite(e.d12_deg);
        e.excluded = dist <= tol.guard_band_hz || m.flagged || best->flagged || !finite;
        if (!e.excluded) {
            a11.push_back(std::abs(e.d11_db));
            p11.push_back(std::abs(e.d11_deg));
            a12.push_back(std::abs(e.d12_db));
            p12.push_back(std::abs(e.d12_deg));
        }
        rep.entries.push_back(e);
    }
    if (!rep.grids_match)
        rep.warnings.push_back("frequency grids differ; rows paired with the nearest analytic frequency");
    auto summarize = [](const std::vector<double>& db, const std::vector<double>& deg) {
        CompareSummary s;
        if (!db.empty()) s.max_db = *std::max_element(db.begin(), db.end());
        if (!deg.empty()) s.max_deg = *std::max_element(deg.begin(), deg.end());
        s.median_db = median(db);
        s.median_deg = median(deg);
        return s;
    };
    rep.y11 = summarize(a11, p11);
    rep.y12 = summarize(a12, p12);
    if (a11.empty()) {
        rep.pass = false;
        rep.warnings.push_back("every row excluded");
    } else {
        rep.pass = rep.y11.max_db <= tol.tol_db && rep.y11.max_deg <= tol.tol_deg &&
                   rep.y12.max_db <= tol.tol_db && rep.y12.max_deg <= tol.tol_deg;
    }
    return rep;
}

json report_to_json(const CompareReport& r) {
    json entries = json::array();
    for (const auto& e : r.entries)
        entries.push_back({{"freq_hz", e.freq_hz}, {"paired_freq_hz", e.paired_freq_hz},
                           {"y11_ddb", e.d11_db}, {"y11_ddeg", e.d11_deg},
                           {"y12_ddb", e.d12_db}, {"y12_ddeg", e.d12_deg}, {"excluded", e.excluded}});
    auto summary = [](const CompareSummary& s) {
        return json{{"max_abs_db", s.max_db}, {"median_abs_db", s.median_db},
                    {"max_abs_deg", s.max_deg}, {"median_abs_deg", s.median_deg}};
    };
    return {{"pass", r.pass},
            {"grids_match", r.grids_match},
            {"tolerances", {{"tol_dB", r.tolerances.tol_db}, {"tol_deg", r.tolerances.tol_deg},
                            {"guard_band_Hz", r.tolerances.guard_band_hz}}},
            {"summary", {{"y11", summary(r.y11)}, {"y12", summary(r.y12)}}},
            {"warnings", r.warnings},
            {"entries", entries}};
}

}  // namespace htf
