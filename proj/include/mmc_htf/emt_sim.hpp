#pragma once

// Average-model time-domain simulator (fixed-step RK4) of the MMC and the
// two-level VSC with the same controllers the analytic model linearizes.
// Provides the periodic operating point and the frequency-scan oracle.

#include <array>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmc_htf/operating_point.hpp"
#include "mmc_htf/params.hpp"

namespace htf {

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, double t) : std::runtime_error(what), t_(t) {}
    double time() const noexcept { return t_; }

private:
    double t_;
};

class SteadyStateError : public std::runtime_error {
public:
    SteadyStateError(const std::string& what, std::vector<double> trace)
        : std::runtime_error(what), trace_(std::move(trace)) {}
    const std::vector<double>& residual_trace() const noexcept { return trace_; }

private:
    std::vector<double> trace_;
};

enum class Sequence { Positive, Negative };

/// Balanced sinusoidal voltage added to the grid source. `freq_hz` may be
/// negative (a negative-sequence set at negative frequency is a positive
/// sequence set at |f|).
struct Injection {
    double freq_hz = 0.0;
    Sequence sequence = Sequence::Positive;
    double amplitude = 0.0;  // V peak
};

struct SimOptions {
    double dt = 20e-6;
    /// Norton DC side of the DC-voltage controlled MMC.
    double C_dc = 32e-9;
    double R_dc_pu = 1e4;
    /// Periods of plain time stepping before the periodic-orbit solve.
    int warmup_periods = 20;
    /// Switch the circulating current controller off (m_2 = 0).
    bool disable_ccsc = false;
    /// Multiplies the grid and DC source voltages (0 gives a source-free model).
    double source_scale = 1.0;
};

/// Instantaneous algebraic signals of the average model.
struct Signals {
    std::array<double, 3> m_u{}, m_l{}, u_cu{}, u_cl{}, i_c{}, i_g{}, u_pcc{}, u_s{};
    double u_d = 0, u_q = 0, i_d = 0, i_q = 0, m1_d = 0, m1_q = 0;
    double i_cd = 0, i_cq = 0, m2_d = 0, m2_q = 0;
    double theta_offset = 0;
    double u_dc = 0;
    double P = 0, Q = 0;
};

class AverageModel {
public:
    AverageModel(const ModelSpec& spec, const SimOptions& options = {});

    int size() const noexcept { return size_; }
    const ModelSpec& spec() const noexcept { return spec_; }
    const SimOptions& options() const noexcept { return options_; }
    double period() const noexcept { return 2.0 * 3.14159265358979323846 / spec_.circuit.w0; }
    int steps_per_period() const noexcept { return steps_per_period_; }

    /// Phasor-based estimate of the steady state at t = 0.
    std::vector<double> initial_state() const;
    /// Per-state normalization (per-unit bases, 1 for controller states).
    const std::vector<double>& scale() const noexcept { return scale_; }

    void set_injection(std::optional<Injection> inj) { injection_ = inj; }
    const std::optional<Injection>& injection() const noexcept { return injection_; }

    void rhs(double t, const double* x, double* dx) const;
    Signals measure(double t, const double* x) const;
    /// One RK4 step in place.
    void step(double t, std::vector<double>& x) const;
    /// Integrates `steps` steps from t0; throws DivergenceError when any
    /// state exceeds 100 times its base.
    void advance(double t0, int steps, std::vector<double>& x) const;

    /// Offset of the three grid-current states.
    int grid_current_offset() const noexcept { return i_g_; }
    /// DC source current of the Norton DC side (DC-voltage control only).
    double dc_source_current() const noexcept { return i_dc_; }

    /// Human-readable state names, in state order.
    std::vector<std::string> state_names() const;
    /// Mean value of stored energy (capacitors, inductors) at x.
    double stored_energy(const double* x) const;

private:
    void evaluate(double t, const double* x, double* dx, Signals* sig) const;

    ModelSpec spec_;
    SimOptions options_;
    PerUnitBases base_;
    std::optional<Injection> injection_;
    int size_ = 0;
    int steps_per_period_ = 0;
    std::vector<double> scale_;
    // State offsets (-1 when absent).
    int i_c_ = -1, i_g_ = -1, u_cu_ = -1, u_cl_ = -1, u_dc_ = -1;
    int angle_ = -1, angle_aux_ = -1, droop_ = -1, vpi_ = -1, ppi_ = -1, dcpi_ = -1, ipi_ = -1,
        cpi_ = -1;
    double delta_fixed_ = 0.0;           // ConstVf angle
    double i_dref0_ = 0.0, i_qref0_ = 0.0;  // ConstCurrent / GFL_DC q-axis
    double i_dc_ = 0.0;
    double k_i_ = 0.0, k_c_ = 0.0;
};

struct TimeSeries {
    std::vector<double> t;
    std::vector<Signals> signals;
};

/// Runs `duration` seconds from x0 (initial_state() when empty), recording
/// every `decimation`-th step.
TimeSeries simulate(const AverageModel& model, double duration,
                    std::vector<double> x0 = {}, int decimation = 1);

/// Waveform dump with header t_s, ic_a..c, ig_a..c, uCu_a..c, uCl_a..c, u_dc.
void write_waveform_csv(std::ostream& os, const TimeSeries& ts);

struct PeriodicOrbit {
    std::vector<double> x0;        // state at t = 0 (mod period)
    std::vector<double> residual;  // scaled RMS residual per Newton iteration
    double period_rms_change = 0;  // final period-to-period RMS change, p.u.
    Eigen::MatrixXd monodromy;     // one-period state transition at x0
};

/// Periodic steady state of the injection-free model by shooting.
PeriodicOrbit find_periodic_orbit(const AverageModel& model);

/// Operating-point spectra (order `order`) over one period of the orbit.
OperatingPoint extract_opoint(const AverageModel& model, const PeriodicOrbit& orbit, int order);
OperatingPoint extract_opoint(const ModelSpec& spec, const SimOptions& options = {});

/// Window-periodic state of `model` (injection set) near the baseline orbit,
/// by Newton with the baseline window map as Jacobian.
struct PeriodicResponse {
    std::vector<double> x0;
    double residual = 0.0;  // scaled RMS window-to-window change
};
PeriodicResponse periodic_response(const AverageModel& model, const PeriodicOrbit& orbit,
                                   double window_s, int max_newton = 6, double tol = 1e-12);

struct ScanOptions {
    double amplitude_pu = 0.005;  // of the peak phase voltage base
    double window_s = 1.0;
    int workers = 1;
    int max_newton = 6;
};

struct ScanResult {
    double freq_hz = 0.0;
    std::array<std::array<std::complex<double>, 2>, 2> Y{};  // [[y11, y12], [y21, y22]]
    double amplitude = 0.0;  // V peak
    double window_s = 0.0;
    double quality = 0.0;    // 1/cond of the injection matrix, in [0, 1]
    bool flagged = false;
    std::string note;
};

/// Two-injection sequence admittance scan, load convention, seen from the
/// grid source. `freq_hz` must be integer multiples of 1/window.
std::vector<ScanResult> frequency_scan(const AverageModel& model, const PeriodicOrbit& orbit,
                                       const std::vector<double>& freq_hz,
                                       const ScanOptions& options = {});

/// Fourier coefficient (complex amplitude) of a uniformly sampled record at
/// frequency f (signed), over the record length.
std::complex<double> fourier_at(const std::vector<double>& x, double dt, double f);

}  // namespace htf
