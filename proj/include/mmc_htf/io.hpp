#pragma once

// Config ingestion, operating-point files, Bode CSV and comparison reports.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmc_htf/admittance.hpp"
#include "mmc_htf/emt_sim.hpp"
#include "mmc_htf/operating_point.hpp"
#include "mmc_htf/params.hpp"

namespace htf {

/// Schema violation or unreadable config; the message names the offending key.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FreqGrid {
    double start_hz = 5.0;
    double stop_hz = 1000.0;
    int points = 200;
    bool log = true;

    /// "start:stop:points:log|lin"
    static FreqGrid parse(const std::string& text);
    std::string to_string() const;
    std::vector<double> values() const;
};

struct ScanConfig {
    FreqGrid grid{5.0, 1000.0, 100, true};
    double amplitude_pu = 0.005;
    double window_s = 1.0;
    double guard_band_hz = 2.0;
};

struct CompareConfig {
    double tol_db = 1.0;
    double tol_deg = 5.0;
    double guard_band_hz = 2.0;
};

struct OutputConfig {
    std::string directory = "out";
};

struct SystemConfig {
    ModelSpec spec;
    SimOptions sim;
    AssembleOptions assemble;
    FreqGrid grid;  // analytic sweep
    ScanConfig scan;
    CompareConfig compare;
    OutputConfig output;
};

/// Unknown keys and wrong types raise ConfigError; missing keys keep defaults.
SystemConfig parse_config(const nlohmann::json& j);
SystemConfig load_config(const std::string& path);
nlohmann::json config_to_json(const SystemConfig& cfg);

nlohmann::json opoint_to_json(const OperatingPoint& op);
/// Rejects spectra that are not conjugate-symmetric.
OperatingPoint opoint_from_json(const nlohmann::json& j);
void save_opoint(const OperatingPoint& op, const std::string& path);
OperatingPoint load_opoint(const std::string& path);

/// Scan frequencies: snapped to multiples of 1/window, deduplicated, guard
/// bands around multiples of f0 removed.
std::vector<double> scan_frequencies(const std::vector<double>& requested, double window_s,
                                     double f0, double guard_band_hz);

struct BodeRow {
    double freq_hz = 0.0;
    cd y11, y12, y21, y22;
    bool flagged = false;
};

std::vector<BodeRow> bode_rows(const std::vector<AdmittanceResult>& results);
std::vector<BodeRow> bode_rows(const std::vector<ScanResult>& results);

void write_bode_csv(std::ostream& os, const std::vector<BodeRow>& rows);
std::vector<BodeRow> read_bode_csv(std::istream& is);
void save_bode_csv(const std::vector<BodeRow>& rows, const std::string& path);
std::vector<BodeRow> load_bode_csv(const std::string& path);

struct CompareEntry {
    double freq_hz = 0.0;
    double paired_freq_hz = 0.0;
    double d11_db = 0.0, d11_deg = 0.0, d12_db = 0.0, d12_deg = 0.0;
    bool excluded = false;  // guard band or flagged
};

struct CompareSummary {
    double max_db = 0.0, median_db = 0.0, max_deg = 0.0, median_deg = 0.0;
};

struct CompareReport {
    std::vector<CompareEntry> entries;
    CompareSummary y11, y12;
    bool grids_match = true;
    bool pass = true;
    CompareConfig tolerances;
    std::vector<std::string> warnings;
};

/// Pairs every measured row with the nearest analytic frequency.
CompareReport compare_bode(const std::vector<BodeRow>& analytic,
                           const std::vector<BodeRow>& measured, const CompareConfig& tol,
                           double f0);
nlohmann::json report_to_json(const CompareReport& report);

}  // namespace htf
