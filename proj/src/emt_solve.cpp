#include <atomic>
#include <cmath>
#include <iomanip>
#include <thread>

#include <Eigen/Dense>

#include "mmc_htf/emt_sim.hpp"

namespace htf {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double scaled_rms(const AverageModel& m, const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (int i = 0; i < m.size(); ++i) {
        const double d = (a[i] - b[i]) / m.scale()[i];
        acc += d * d;
    }
    return std::sqrt(acc / m.size());
}

std::vector<double> period_map(const AverageModel& m, std::vector<double> x, int periods = 1) {
    m.advance(0.0, periods * m.steps_per_period(), x);
    return x;
}

// One-period state transition in scaled coordinates by central differences.
MatrixXd monodromy_scaled(const AverageModel& m, const std::vector<double>& x0) {
    const int n = m.size();
    MatrixXd out(n, n);
    const double eps = 1e-5;
    for (int j = 0; j < n; ++j) {
        auto xp = x0, xm = x0;
        xp[j] += eps * m.scale()[j];
        xm[j] -= eps * m.scale()[j];
        const auto yp = period_map(m, xp);
        const auto ym = period_map(m, xm);
        for (int i = 0; i < n; ++i) out(i, j) = (yp[i] - ym[i]) / (2.0 * eps * m.scale()[i]);
    }
    return out;
}

}  // namespace

TimeSeries simulate(const AverageModel& model, double duration, std::vector<double> x0,
                    int decimation) {
    if (duration < 0.0) throw std::invalid_argument("duration must be nonnegative");
    if (decimation < 1) throw std::invalid_argument("decimation must be >= 1");
    if (x0.empty()) x0 = model.initial_state();
    if (static_cast<int>(x0.size()) != model.size()) throw DimensionError("initial state size");
    const double dt = model.options().dt;
    const long steps = std::lround(duration / dt);
    TimeSeries ts;
    for (long n = 0; n <= steps; ++n) {
        const double t = n * dt;
        if (n % decimation == 0) {
            ts.t.push_back(t);
            ts.signals.push_back(model.measure(t, x0.data()));
        }
        if (n < steps) model.advance(t, 1, x0);
    }
    return ts;
}

void write_waveform_csv(std::ostream& os, const TimeSeries& ts) {
    os << "t_s,ic_a,ic_b,ic_c,ig_a,ig_b,ig_c,uCu_a,uCu_b,uCu_c,uCl_a,uCl_b,uCl_c,u_dc\n";
    os << std::setprecision(12);
    for (std::size_t i = 0; i < ts.t.size(); ++i) {
        const auto& s = ts.signals[i];
        os << ts.t[i];
        for (const auto* v : {&s.i_c, &s.i_g, &s.u_cu, &s.u_cl})
            for (double x : *v) os << ',' << x;
        os << ',' << s.u_dc << '\n';
    }
}

PeriodicOrbit find_periodic_orbit(const AverageModel& model) {
    const int n = model.size();
    PeriodicOrbit orbit;
    std::vector<double> x = model.initial_state();
    model.advance(0.0, model.options().warmup_periods * model.steps_per_period(), x);

    const VectorXd sc = Eigen::Map<const VectorXd>(model.scale().data(), n);
    auto residual = [&](const std::vector<double>& at) {
        return scaled_rms(model, period_map(model, at), at);
    };
    double res = residual(x);
    orbit.residual.push_back(res);
    for (int it = 0; it < 12 && res > 1e-11; ++it) {
        const auto y = period_map(model, x);
        VectorXd r(n);
        for (int i = 0; i < n; ++i) r(i) = (y[i] - x[i]) / sc(i);
        const MatrixXd jac = monodromy_scaled(model, x) - MatrixXd::Identity(n, n);
        const VectorXd dz = jac.partialPivLu().solve(-r);
        double alpha = 1.0;
        std::vector<double> trial(n);
        for (int ls = 0; ls < 8; ++ls) {
            for (int i = 0; i < n; ++i) trial[i] = x[i] + alpha * dz(i) * sc(i);
            try {
                const double r_new = residual(trial);
                if (r_new < res) {
                    res = r_new;
                    break;
                }
            } catch (const DivergenceError&) {
            }
            alpha *= 0.5;
        }
        if (alpha < 0.5 / 128.0) break;
        x = trial;
        orbit.residual.push_back(res);
    }
    // Final check: plain period-to-period change of the converged orbit.
    orbit.period_rms_change = residual(x);
    if (!(orbit.period_rms_change < 1e-6))
        throw SteadyStateError("periodic steady state not reached", orbit.residual);
    orbit.x0 = x;
    orbit.monodromy = monodromy_scaled(model, x);
    return orbit;
}

OperatingPoint extract_opoint(const AverageModel& model, const PeriodicOrbit& orbit, int order) {
    const int spp = model.steps_per_period();
    const double w0 = model.spec().circuit.w0;
    const double dt = model.options().dt;
    std::vector<Signals> sig;
    sig.reserve(spp);
    auto x = orbit.x0;
    for (int k = 0; k < spp; ++k) {
        sig.push_back(model.measure(k * dt, x.data()));
        model.advance(k * dt, 1, x);
    }
    auto spectrum = [&](auto getter) {
        std::vector<double> v(spp);
        for (int k = 0; k < spp; ++k) v[k] = getter(sig[k]);
        HarmonicVector hv = HarmonicVector::from_samples(v, order, w0);
        // Enforce exact conjugate symmetry (removes round-off only).
        for (int j = 1; j <= order; ++j) {
            const cd avg = 0.5 * (hv.get(j) + std::conj(hv.get(-j)));
            hv.set(j, avg);
            hv.set(-j, std::conj(avg));
        }
        hv.set(0, hv.get(0).real());
        return hv;
    };
    OperatingPoint op;
    op.converter = model.spec().converter;
    op.control = model.spec().control;
    op.order = order;
    op.w0 = w0;
    for (int p = 0; p < 3; ++p) {
        op.m_u[p] = spectrum([p](const Signals& s) { return s.m_u[p]; });
        op.m_l[p] = spectrum([p](const Signals& s) { return s.m_l[p]; });
        op.u_cu[p] = spectrum([p](const Signals& s) { return s.u_cu[p]; });
        op.u_cl[p] = spectrum([p](const Signals& s) { return s.u_cl[p]; });
        op.i_c[p] = spectrum([p](const Signals& s) { return s.i_c[p]; });
        op.i_g[p] = spectrum([p](const Signals& s) { return s.i_g[p]; });
        op.u_g[p] = spectrum([p](const Signals& s) { return s.u_pcc[p]; });
    }
    op.u_d = spectrum([](const Signals& s) { return s.u_d; });
    op.u_q = spectrum([](const Signals& s) { return s.u_q; });
    op.i_d = spectrum([](const Signals& s) { return s.i_d; });
    op.i_q = spectrum([](const Signals& s) { return s.i_q; });
    op.m1_d = spectrum([](const Signals& s) { return s.m1_d; });
    op.m1_q = spectrum([](const Signals& s) { return s.m1_q; });
    op.i_cd = spectrum([](const Signals& s) { return s.i_cd; });
    op.i_cq = spectrum([](const Signals& s) { return s.i_cq; });
    op.m2_d = spectrum([](const Signals& s) { return s.m2_d; });
    op.m2_q = spectrum([](const Signals& s) { return s.m2_q; });
    op.theta_offset = spectrum([](const Signals& s) { return s.theta_offset; });
    op.u_dc = spectrum([](const Signals& s) { return s.u_dc; });
    op.U_dc = op.u_dc.get(0).real();
    if (model.spec().control == ControlMode::GFL_DC) {
        op.I_dc = model.dc_source_current();
    } else {
        double sum = 0.0;
        for (int p = 0; p < 3; ++p) sum += op.i_c[p].get(0).real();
        op.I_dc = sum;
    }
    return op;
}

OperatingPoint extract_opoint(const ModelSpec& spec, const SimOptions& options) {
    const AverageModel model(spec, options);
    return extract_opoint(model, find_periodic_orbit(model), 2 * spec.h);
}

cd fourier_at(const std::vector<double>& x, double dt, double f) {
    cd acc = 0.0;
    const double w = 2.0 * kPi * f * dt;
    for (std::size_t n = 0; n < x.size(); ++n) acc += x[n] * std::polar(1.0, -w * static_cast<double>(n));
    return 2.0 * acc / static_cast<double>(x.size());
}

namespace {

struct Record {
    std::array<std::vector<double>, 3> i_g;
    std::array<std::vector<double>, 3> u_s;
};

// Integrates `steps` steps from t = 0, recording grid current and source voltage.
std::vector<double> run_recorded(const AverageModel& m, std::vector<double> x, int steps, Record& rec) {
    const int g = m.grid_current_offset();
    const double dt = m.options().dt;
    for (int p = 0; p < 3; ++p) {
        rec.i_g[p].assign(steps, 0.0);
        rec.u_s[p].assign(steps, 0.0);
    }
    for (int k = 0; k < steps; ++k) {
        const double t = k * dt;
        const Signals s = m.measure(t, x.data());
        for (int p = 0; p < 3; ++p) {
            rec.i_g[p][k] = x[g + p];
            rec.u_s[p][k] = s.u_s[p];
        }
        m.advance(t, 1, x);
    }
    return x;
}

cd sequence_component(const std::array<std::vector<double>, 3>& v,
                      const std::array<std::vector<double>, 3>& base, double dt, double f,
                      Sequence seq) {
    const cd a = std::polar(1.0, 2.0 * kPi / 3.0);
    const std::array<cd, 3> w = seq == Sequence::Positive ? std::array<cd, 3>{1.0, a * a, a}
                                                          : std::array<cd, 3>{1.0, a, a * a};
    cd acc = 0.0;
    for (int p = 0; p < 3; ++p) {
        std::vector<double> d(v[p].size());
        for (std::size_t k = 0; k < d.size(); ++k) d[k] = v[p][k] - base[p][k];
        acc += std::conj(w[p]) * fourier_at(d, dt, f);
    }
    return acc / 3.0;
}

}  // namespace

namespace {

int window_periods(const AverageModel& model, double window_s) {
    const double f0 = model.spec().circuit.w0 / (2.0 * kPi);
    const int periods = static_cast<int>(std::lround(window_s * f0));
    if (periods < 1 || std::abs(periods / f0 - window_s) > 1e-9)
        throw std::invalid_argument("scan window must hold an integer number of periods");
    return periods;
}

Eigen::PartialPivLU<MatrixXd> window_jacobian(const PeriodicOrbit& orbit, int periods) {
    const auto n = orbit.monodromy.rows();
    MatrixXd mw = MatrixXd::Identity(n, n);
    for (int k = 0; k < periods; ++k) mw = orbit.monodromy * mw;
    return Eigen::PartialPivLU<MatrixXd>(mw - MatrixXd::Identity(n, n));
}

// Newton on the window map; `rec` holds the last integrated window.
PeriodicResponse solve_window(const AverageModel& m, const PeriodicOrbit& orbit,
                              const Eigen::PartialPivLU<MatrixXd>& jac, int steps, int max_newton,
                              double tol, Record& rec) {
    const int n = m.size();
    PeriodicResponse out;
    out.x0 = orbit.x0;
    for (int it = 0; it <= max_newton; ++it) {
        const auto y = run_recorded(m, out.x0, steps, rec);
        Eigen::VectorXd rz(n);
        for (int i = 0; i < n; ++i) rz(i) = (y[i] - out.x0[i]) / m.scale()[i];
        out.residual = rz.norm() / std::sqrt(static_cast<double>(n));
        if (out.residual < tol || it == max_newton) break;
        const Eigen::VectorXd dz = jac.solve(-rz);
        for (int i = 0; i < n; ++i) out.x0[i] += dz(i) * m.scale()[i];
    }
    return out;
}

}  // namespace

PeriodicResponse periodic_response(const AverageModel& model, const PeriodicOrbit& orbit,
                                   double window_s, int max_newton, double tol) {
    const int periods = window_periods(model, window_s);
    Record rec;
    return solve_window(model, orbit, window_jacobian(orbit, periods),
                        periods * model.steps_per_period(), max_newton, tol, rec);
}

std::vector<ScanResult> frequency_scan(const AverageModel& model, const PeriodicOrbit& orbit,
                                       const std::vector<double>& freq_hz,
                                       const ScanOptions& options) {
    const double dt = model.options().dt;
    const double f0 = model.spec().circuit.w0 / (2.0 * kPi);
    const int periods = window_periods(model, options.window_s);
    const int steps = periods * model.steps_per_period();
    const double amp = options.amplitude_pu * PerUnitBases::from(model.spec().circuit).U;

    const auto jac = window_jacobian(orbit, periods);

    Record base;
    {
        AverageModel m = model;
        m.set_injection(std::nullopt);
        run_recorded(m, orbit.x0, steps, base);
    }

    std::vector<ScanResult> out(freq_hz.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        AverageModel m = model;
        for (std::size_t idx = next++; idx < freq_hz.size(); idx = next++) {
            const double f = freq_hz[idx];
            ScanResult& res = out[idx];
            res.freq_hz = f;
            res.amplitude = amp;
            res.window_s = options.window_s;
            if (std::abs(f * options.window_s - std::round(f * options.window_s)) > 1e-6) {
                res.flagged = true;
                res.note = "frequency not commensurate with the window";
                continue;
            }
            const double f2 = f - 2.0 * f0;
            Eigen::Matrix2cd u, r;
            double worst = 0.0;
            try {
                for (int col = 0; col < 2; ++col) {
                    const Sequence seq = col == 0 ? Sequence::Positive : Sequence::Negative;
                    m.set_injection(Injection{col == 0 ? f : f2, seq, amp});
                    Record rec;
                    const auto pr = solve_window(m, orbit, jac, steps, options.max_newton,
                                                 1e-8 * options.amplitude_pu, rec);
                    worst = std::max(worst, pr.residual);
                    for (int row = 0; row < 2; ++row) {
                        const double fr = row == 0 ? f : f2;
                        const Sequence sr = row == 0 ? Sequence::Positive : Sequence::Negative;
                        // Load convention: current into the converter is -i_g.
                        r(row, col) = -sequence_component(rec.i_g, base.i_g, dt, fr, sr);
                        u(row, col) = sequence_component(rec.u_s, base.u_s, dt, fr, sr);
                    }
                }
            } catch (const DivergenceError& e) {
                res.flagged = true;
                res.note = e.what();
                continue;
            }
            const Eigen::JacobiSVD<Eigen::Matrix2cd> svd(u);
            const double cond = svd.singularValues()(0) / svd.singularValues()(1);
            res.quality = 1.0 / cond;
            if (!(cond <= 1e6)) {
                res.flagged = true;
                res.note = "ill-conditioned injection matrix";
                continue;
            }
            const Eigen::Matrix2cd y = r * u.inverse();
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) res.Y[a][b] = y(a, b);
            if (worst > 1e-6 * options.amplitude_pu) res.note = "periodic response not fully converged";
        }
    };
    const int nthreads = std::max(1, std::min<int>(options.workers, static_cast<int>(freq_hz.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return out;
}

}  // namespace htf
