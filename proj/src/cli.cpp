#include "mmc_htf/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "mmc_htf/io.hpp"

namespace htf {

namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config;
    std::string out;
    int workers = 1;
    std::optional<int> h;
    std::string grid;

    void attach(CLI::App* app, bool with_grid) {
        app->add_option("--config", config, "system config (JSON)")->required();
        app->add_option("--out", out, "output directory (overrides the config)");
        app->add_option("--workers", workers, "parallel frequency jobs")->check(CLI::PositiveNumber);
        app->add_option("--h", h, "harmonic truncation order")->check(CLI::Range(2, 50));
        if (with_grid) app->add_option("--grid", grid, "start:stop:points:log|lin");
    }

    SystemConfig load() const {
        SystemConfig cfg = load_config(config);
        if (h) cfg.spec.h = *h;
        if (!out.empty()) cfg.output.directory = out;
        try {
            cfg.spec.validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("invalid model: ") + e.what());
        }
        return cfg;
    }
};

fs::path prepare(const SystemConfig& cfg) {
    fs::path dir(cfg.output.directory);
    fs::create_directories(dir);
    return dir;
}

double f0_of(const SystemConfig& cfg) { return cfg.spec.circuit.w0 / (2.0 * kPi); }

int cmd_opoint(const Common& o, std::ostream& out) {
    const SystemConfig cfg = o.load();
    const fs::path dir = prepare(cfg);
    const AverageModel model(cfg.spec, cfg.sim);
    const PeriodicOrbit orbit = find_periodic_orbit(model);
    const OperatingPoint op = extract_opoint(model, orbit, 2 * cfg.spec.h);
    const fs::path path = dir / "opoint.json";
    save_opoint(op, path.string());
    out << "operating point: " << path.string() << "\n"
        << "  U_dc " << op.U_dc << " V, I_dc " << op.I_dc << " A, period RMS change "
        << orbit.period_rms_change << "\n"
        << "  m1 " << op.m1_d.get(0).real() << " + j" << op.m1_q.get(0).real() << ", u_d "
        << op.u_d.get(0).real() << " V, u_q " << op.u_q.get(0).real() << " V\n";
    return kExitOk;
}

int cmd_admittance(const Common& o, const std::string& opoint_path, bool scan_grid,
                   std::ostream& out) {
    SystemConfig cfg = o.load();
    if (!o.grid.empty()) (scan_grid ? cfg.scan.grid : cfg.grid) = FreqGrid::parse(o.grid);
    const fs::path dir = prepare(cfg);
    const std::string src = opoint_path.empty() ? (dir / "opoint.json").string() : opoint_path;
    if (!fs::exists(src)) throw std::runtime_error("operating point not found: " + src);
    const OperatingPoint op = load_opoint(src);
    if (op.converter != cfg.spec.converter || op.control != cfg.spec.control)
        throw std::runtime_error("operating point was computed for " +
                                 std::string(to_string(op.converter)) + "/" +
                                 std::string(to_string(op.control)) + ", config asks for " +
                                 std::string(to_string(cfg.spec.converter)) + "/" +
                                 std::string(to_string(cfg.spec.control)));
    op.validate(cfg.spec.h);
    // --scan-grid evaluates exactly where `scan` measures, so compare pairs rows one to one.
    const auto freqs = scan_grid ? scan_frequencies(cfg.scan.grid.values(), cfg.scan.window_s,
                                                    f0_of(cfg), cfg.scan.guard_band_hz)
                                 : cfg.grid.values();
    const auto results = sweep(cfg.spec, op, freqs, o.workers, cfg.assemble);
    const auto rows = bode_rows(results);
    const fs::path path = dir / "admittance.csv";
    save_bode_csv(rows, path.string());
    const auto flagged = std::count_if(rows.begin(), rows.end(), [](const BodeRow& r) { return r.flagged; });
    out << "admittance: " << path.string() << " (" << rows.size() << " rows, " << flagged
        << " flagged)\n";
    return kExitOk;
}

int cmd_scan(const Common& o, std::ostream& out, std::ostream& err) {
    SystemConfig cfg = o.load();
    if (!o.grid.empty()) cfg.scan.grid = FreqGrid::parse(o.grid);
    const fs::path dir = prepare(cfg);
    const auto requested = cfg.scan.grid.values();
    const auto freqs =
        scan_frequencies(requested, cfg.scan.window_s, f0_of(cfg), cfg.scan.guard_band_hz);
    if (freqs.size() != requested.size())
        err << "note: " << requested.size() - freqs.size()
            << " grid points dropped (guard bands, duplicates after snapping to 1/window)\n";
    const AverageModel model(cfg.spec, cfg.sim);
    const PeriodicOrbit orbit = find_periodic_orbit(model);
    ScanOptions so;
    so.amplitude_pu = cfg.scan.amplitude_pu;
    so.window_s = cfg.scan.window_s;
    so.workers = o.workers;
    const auto results = frequency_scan(model, orbit, freqs, so);
    for (const auto& r : results)
        if (r.flagged) err << "flagged " << r.freq_hz << " Hz: " << r.note << "\n";
    const fs::path path = dir / "scan.csv";
    save_bode_csv(bode_rows(results), path.string());
    out << "scan: " << path.string() << " (" << results.size() << " rows)\n";
    return kExitOk;
}

struct CompareArgs {
    std::string analytic, measured, config, out;
    std::optional<double> tol_db, tol_deg;
};

int cmd_compare(const CompareArgs& a, std::ostream& out, std::ostream& err) {
    SystemConfig cfg;
    if (!a.config.empty()) cfg = load_config(a.config);
    if (!a.out.empty()) cfg.output.directory = a.out;
    if (a.tol_db) cfg.compare.tol_db = *a.tol_db;
    if (a.tol_deg) cfg.compare.tol_deg = *a.tol_deg;
    const auto analytic = load_bode_csv(a.analytic);
    const auto measured = load_bode_csv(a.measured);
    const CompareReport rep = compare_bode(analytic, measured, cfg.compare, f0_of(cfg));
    for (const auto& w : rep.warnings) err << "warning: " << w << "\n";
    const fs::path dir = prepare(cfg);
    const fs::path path = dir / "report.json";
    std::ofstream(path, std::ios::binary) << report_to_json(rep).dump(1) << '\n';
    out << "y11 max " << rep.y11.max_db << " dB / " << rep.y11.max_deg << " deg, y12 max "
        << rep.y12.max_db << " dB / " << rep.y12.max_deg << " deg -> "
        << (rep.pass ? "PASS" : "FAIL") << " (" << path.string() << ")\n";
    return rep.pass ? kExitOk : kExitTolerance;
}

int cmd_simulate(const Common& o, double duration, int decimation, bool from_orbit,
                 std::ostream& out) {
    const SystemConfig cfg = o.load();
    const fs::path dir = prepare(cfg);
    const AverageModel model(cfg.spec, cfg.sim);
    std::vector<double> x0;
    if (from_orbit) x0 = find_periodic_orbit(model).x0;
    const TimeSeries ts = simulate(model, duration, x0, decimation);
    const fs::path path = dir / "waveform.csv";
    std::ofstream f(path, std::ios::binary);
    write_waveform_csv(f, ts);
    out << "waveform: " << path.string() << " (" << ts.t.size() << " rows)\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"HTF admittance models of MMC and 2L-VSC converters, with a frequency-scan check"};
    app.name("mmchtf");
    app.set_help_flag("--help", "print this help and exit");
    app.require_subcommand(1);

    Common op_o, adm_o, scan_o, sim_o;
    std::string opoint_path;
    bool scan_grid = false;
    CompareArgs cmp;
    double duration = 0.2;
    int decimation = 10;
    bool from_orbit = false;

    auto* op = app.add_subcommand("opoint", "periodic operating point from the simulator");
    op_o.attach(op, false);
    auto* adm = app.add_subcommand("admittance", "analytic admittance sweep");
    adm_o.attach(adm, true);
    adm->add_option("--opoint", opoint_path, "operating point JSON (default OUT/opoint.json)");
    adm->add_flag("--scan-grid", scan_grid, "use the scan frequencies (snapped, guard bands removed)");
    auto* sc = app.add_subcommand("scan", "simulated frequency scan");
    scan_o.attach(sc, true);
    auto* cp = app.add_subcommand("compare", "analytic vs scanned Bode data");
    cp->add_option("analytic", cmp.analytic, "analytic CSV")->required();
    cp->add_option("scan", cmp.measured, "scan CSV")->required();
    cp->add_option("--config", cmp.config, "config supplying tolerances and f0");
    cp->add_option("--out", cmp.out, "output directory");
    cp->add_option("--tol-db", cmp.tol_db, "magnitude tolerance, dB");
    cp->add_option("--tol-deg", cmp.tol_deg, "phase tolerance, degrees");
    auto* sim = app.add_subcommand("simulate", "raw waveform dump");
    sim_o.attach(sim, false);
    sim->add_option("--duration", duration, "seconds")->check(CLI::PositiveNumber);
    sim->add_option("--decimation", decimation, "keep every n-th step")->check(CLI::PositiveNumber);
    sim->add_flag("--from-orbit", from_orbit, "start on the periodic orbit");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (op->parsed()) return cmd_opoint(op_o, out);
        if (adm->parsed()) return cmd_admittance(adm_o, opoint_path, scan_grid, out);
        if (sc->parsed()) return cmd_scan(scan_o, out, err);
        if (cp->parsed()) return cmd_compare(cmp, out, err);
        if (sim->parsed()) return cmd_simulate(sim_o, duration, decimation, from_orbit, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}

}  // namespace htf
