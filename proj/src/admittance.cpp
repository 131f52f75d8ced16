#include "mmc_htf/admittance.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "mmc_htf/frames.hpp"

namespace htf {

GeneralModel build_general_model(const ModelSpec& spec, const OperatingPoint& op, cd s,
                                 const AssembleOptions& options) {
    const int h = spec.h;
    const auto& c = spec.circuit;
    const auto& k = spec.control_params;
    GeneralModel m;
    if (spec.converter == Converter::VSC2L) {
        m.plant = build_2lvsc(c, op, s, h);
        m.control = build_2lvsc_control(c, k, op, s, h, spec.control);
        return m;
    }
    if (spec.control == ControlMode::GFL_DC) {
        m.plant = build_mmc_dc_dynamics(c, op, s, h, options.plant);
        m.control = build_gfl_dc(c, k, op, m.plant, s, h);
        return m;
    }
    m.plant = build_mmc_const_dc(c, op, s, h, options.plant);
    switch (spec.control) {
        case ControlMode::OpenLoop: m.control = build_open_loop(Converter::MMC, h); break;
        case ControlMode::GFM: m.control = build_gfm(c, k, op, s, h, true); break;
        case ControlMode::ConstVf: m.control = build_gfm(c, k, op, s, h, false); break;
        case ControlMode::GFL_PQ: m.control = build_gfl_pq(c, k, op, s, h, true); break;
        case ControlMode::ConstCurrent: m.control = build_gfl_pq(c, k, op, s, h, false); break;
        case ControlMode::GFL_DC: break;
    }
    return m;
}

CMatrix general_admittance(const GeneralModel& model, const CMatrix& z_grid, cd s) {
    const auto& p = model.plant;
    const CMatrix& c = p.C.dense();
    const CMatrix& d = p.D.dense();
    CMatrix z = p.Z.dense();
    CMatrix f = model.control.F.dense();
    const CMatrix& b = model.control.B.dense();
    const int n = 2 * p.order + 1;
    const int g0 = p.grid_block * n;
    if (z_grid.size() > 0) {
        // u_terminal = u_source + Z_g i_g.
        CMatrix pg = CMatrix::Zero(3 * n, z.cols());
        pg.middleCols(g0, 3 * n) = z_grid;
        z -= d * pg;
        f += b * pg;
    }
    const CMatrix x = solve(z - c * f, c * b + d, s);
    return -x.middleRows(g0, 3 * n);
}

namespace {

AdmittanceResult flagged_result(cd s, cd sc) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    AdmittanceResult r;
    r.s = s;
    r.s_centre = sc;
    r.y11 = r.y12 = r.y21 = r.y22 = cd(nan, nan);
    r.condition_estimate = std::numeric_limits<double>::infinity();
    r.flagged = true;
    return r;
}

}  // namespace

AdmittanceResult assemble(const ModelSpec& spec, const OperatingPoint& op, cd s,
                          const AssembleOptions& options) {
    const int h = spec.h;
    const cd sc = s - cd(0.0, op.w0);
    try {
        const GeneralModel m = build_general_model(spec, op, sc, options);
        CMatrix zg;
        const auto& ckt = spec.circuit;
        if (options.include_grid_impedance && (ckt.R_g > 0.0 || ckt.L_g > 0.0)) {
            const CMatrix d = shifted_diagonal([&](cd x) { return ckt.R_g + ckt.L_g * x; }, sc,
                                               op.w0, h).entries;
            zg = repeat_diagonal(d, 3);
        }
        AdmittanceResult r;
        r.s = s;
        r.s_centre = sc;
        r.Y_full = general_admittance(m, zg, sc);
        const auto pos = SequenceBasis::positive();
        const auto neg = SequenceBasis::negative();
        const CVector resp1 = r.Y_full * sequence_vector(h, pos, 1);
        const CVector resp2 = r.Y_full * sequence_vector(h, neg, -1);
        r.y11 = project_sequence(resp1, h, pos, 1);
        r.y21 = project_sequence(resp1, h, neg, -1);
        r.y12 = project_sequence(resp2, h, pos, 1);
        r.y22 = project_sequence(resp2, h, neg, -1);
        r.condition_estimate = condition_estimate(r.Y_full);
        if (!r.Y_full.allFinite()) r.flagged = true;
        return r;
    } catch (const SingularMatrixError&) {
        return flagged_result(s, sc);
    } catch (const SingularityError&) {
        return flagged_result(s, sc);
    }
}

std::vector<AdmittanceResult> sweep(const ModelSpec& spec, const OperatingPoint& op,
                                    const std::vector<double>& freq_hz, int workers,
                                    const AssembleOptions& options) {
    std::vector<AdmittanceResult> out(freq_hz.size());
    const double f0 = op.w0 / (2.0 * kPi);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < freq_hz.size(); i = next++) {
            double f = freq_hz[i];
            const double ratio = f / f0;
            const bool on_grid = std::abs(ratio - std::round(ratio)) < 1e-9;
            if (on_grid) f += 0.01;
            out[i] = assemble(spec, op, cd(0.0, 2.0 * kPi * f), options);
            out[i].offset_applied = on_grid;
        }
    };
    const int nthreads = std::max(1, std::min<int>(workers, static_cast<int>(freq_hz.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return out;
}

double symmetry_residual(const ModelSpec& spec, const OperatingPoint& op, cd s,
                         const AssembleOptions& options) {
    const cd mirror = std::conj(s) + cd(0.0, 2.0 * op.w0);
    const auto a = assemble(spec, op, s, options);
    const auto b = assemble(spec, op, mirror, options);
    if (a.flagged || b.flagged) return std::numeric_limits<double>::quiet_NaN();
    const double scale = std::max({std::abs(a.y11), std::abs(a.y12), std::abs(a.y21),
                                   std::abs(a.y22), std::abs(b.y11), std::abs(b.y12),
                                   std::abs(b.y21), std::abs(b.y22)});
    const double r = std::max(std::abs(a.y11 - std::conj(b.y22)), std::abs(a.y12 - std::conj(b.y21)));
    return r / scale;
}

double magnitude_db(cd y) { return 20.0 * std::log10(std::abs(y)); }
double phase_deg(cd y) { return std::arg(y) * 180.0 / kPi; }

}  // namespace htf
