#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <cmath>
#include <random>

#include "mmc_htf/admittance.hpp"
#include "mmc_htf/emt_sim.hpp"
#include "mmc_htf/frames.hpp"
#include "mmc_htf/harmonic.hpp"
#include "mmc_htf/operating_point.hpp"

namespace htf::testing {

inline double rel_diff(const CMatrix& a, const CMatrix& b) {
    const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    return scale == 0.0 ? 0.0 : (a - b).cwiseAbs().maxCoeff() / scale;
}

inline double rel_diff(cd a, cd b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

inline ModelSpec make_spec(ControlMode mode, Converter conv = Converter::MMC) {
    ModelSpec s;
    s.converter = conv;
    s.control = mode;
    if (mode == ControlMode::GFM) {
        s.circuit.R_g = 5.0;
        s.setpoints.P_ref_pu = 0.2;
    }
    return s;
}

/// Balanced operating point built from a few harmonics. Not a steady state
/// of the circuit; it only exercises the matrix structure.
inline OperatingPoint synthetic_op(Converter conv, int order, double w0 = 100.0 * kPi) {
    OperatingPoint op;
    op.converter = conv;
    op.order = order;
    op.w0 = w0;
    op.U_dc = 135e3;
    auto cosx = [&](int x, int m, double amp, double ph) {
        return HarmonicVector::cosine(order, w0, m, amp, ph - m * 2.0 * kPi * x / 3.0);
    };
    auto cst = [&](double v) { return HarmonicVector::constant(order, w0, v); };
    for (int x = 0; x < 3; ++x) {
        const auto ux = static_cast<std::size_t>(x);
        op.m_u[ux] = cst(0.5) + cosx(x, 1, -0.4, 0.05) + cosx(x, 2, 0.01, 0.4);
        op.m_l[ux] = cst(0.5) + cosx(x, 1, 0.4, 0.05) + cosx(x, 2, 0.01, 0.4);
        op.u_cu[ux] = cst(135e3) + cosx(x, 1, 3e3, 0.3) + cosx(x, 2, 1e3, -0.7);
        op.u_cl[ux] = cst(135e3) + cosx(x, 1, -3e3, 0.3) + cosx(x, 2, 1e3, -0.7);
        op.i_c[ux] = cst(220.0) + cosx(x, 2, 40.0, 1.1);
        op.i_g[ux] = cosx(x, 1, 1300.0, -0.2);
        op.u_g[ux] = cosx(x, 1, 53.9e3, 0.0);
    }
    op.u_d = cst(53.9e3);
    op.u_q = cst(0.0);
    op.i_d = cst(1300.0 * std::cos(0.2));
    op.i_q = cst(-1300.0 * std::sin(0.2));
    op.m1_d = cst(0.8 * std::cos(0.05));
    op.m1_q = cst(0.8 * std::sin(0.05));
    op.i_cd = cst(40.0 * std::cos(1.1));
    op.i_cq = cst(40.0 * std::sin(1.1));
    op.m2_d = cst(0.0);
    op.m2_q = cst(0.0);
    op.theta_offset = cst(0.0);
    op.u_dc = cst(op.U_dc);
    op.I_dc = 3.0 * 220.0;
    return op;
}

/// Periodic operating point of `spec` from the simulator, stored at order 2h.
inline OperatingPoint simulated_op(const ModelSpec& spec, const SimOptions& sim = {}) {
    return extract_opoint(spec, sim);
}

/// Positive-sequence element of a phase-stacked admittance evaluated at the
/// centred frequency (injection and response at shift +1).
inline cd positive_element(const CMatrix& y, int h) {
    const auto pos = SequenceBasis::positive();
    return project_sequence(CVector(y * sequence_vector(h, pos, 1)), h, pos, 1);
}

inline std::vector<double> random_freqs(int count, unsigned seed, double lo = 5.0, double hi = 1000.0) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    std::vector<double> f;
    while (static_cast<int>(f.size()) < count) {
        const double x = std::exp(u(rng));
        if (std::abs(x - 50.0 * std::round(x / 50.0)) > 0.5) f.push_back(x);
    }
    return f;
}

/// Baseline periodic orbit and the window-periodic response to one injection.
struct InjectedRun {
    OperatingPoint op;
    TimeSeries base, inj;
    double dt = 0.0;
    double residual = 0.0;
};

inline InjectedRun run_injection(const ModelSpec& spec, const Injection& injection,
                                 const SimOptions& sim = {}, double window_s = 1.0) {
    AverageModel model(spec, sim);
    const PeriodicOrbit orbit = find_periodic_orbit(model);
    InjectedRun r;
    r.op = extract_opoint(model, orbit, 2 * spec.h);
    r.dt = sim.dt;
    r.base = simulate(model, window_s, orbit.x0);
    model.set_injection(injection);
    const PeriodicResponse pr = periodic_response(model, orbit, window_s);
    r.residual = pr.residual;
    r.inj = simulate(model, window_s, pr.x0);
    // One full window without the repeated end point.
    r.base.t.pop_back();
    r.base.signals.pop_back();
    r.inj.t.pop_back();
    r.inj.signals.pop_back();
    return r;
}

/// Coefficient of e^{j 2 pi f t} in the baseline-subtracted signal get(Signals).
template <class Get>
cd coefficient(const InjectedRun& r, Get get, double f) {
    std::vector<double> d(r.inj.signals.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = get(r.inj.signals[k]) - get(r.base.signals[k]);
    return 0.5 * fourier_at(d, r.dt, f);
}

/// Phase-stacked harmonic vector (order h) of a three-phase signal around
/// the centred injection frequency f - f0: entry k sits at f - f0 + k f0.
template <class Get3>
CVector phase_spectrum(const InjectedRun& r, Get3 get, double f, double f0, int h) {
    const int n = 2 * h + 1;
    CVector v(3 * n);
    for (int x = 0; x < 3; ++x)
        for (int k = -h; k <= h; ++k)
            v(x * n + k + h) = coefficient(
                r, [&](const Signals& s) { return get(s)[static_cast<std::size_t>(x)]; },
                f - f0 + k * f0);
    return v;
}

}  // namespace htf::testing
