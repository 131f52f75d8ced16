#include "mmc_htf/plant.hpp"

#include <cmath>

namespace htf {

namespace {

CMatrix tp(const HarmonicVector& sig, int h) { return toeplitz_from_signal(sig, h).entries; }

CMatrix shifted(const TransferFunction& tf, cd s, double w0, int h) {
    return shifted_diagonal(tf, s, w0, h).entries;
}

void put(CMatrix& m, int br, int bc, int n, const CMatrix& v) { m.block(br * n, bc * n, n, n) = v; }

// Capacitor voltage Toeplitz source, or the stiff-capacitor constant.
CMatrix cap_voltage(const HarmonicVector& u, const OperatingPoint& op, int h, bool stiff) {
    const int n = 2 * h + 1;
    if (stiff) return op.U_dc * CMatrix::Identity(n, n);
    return tp(u, h);
}

PlantParts mmc_parts(const CircuitParams& p, const OperatingPoint& op, cd s, int h,
                     const PlantOptions& opt) {
    op.validate(h);
    const int n = 2 * h + 1;
    const double w0 = op.w0;
    PlantParts parts;

    const CMatrix zl = shifted([&](cd x) { return p.L_arm * x + p.R_arm; }, s, w0, h);
    parts.Z_Larm = repeat_diagonal(zl, 6);
    if (opt.stiff_capacitors) {
        parts.Z_Ceq = CMatrix::Zero(6 * n, 6 * n);
    } else {
        const double c = p.C_eq();
        parts.Z_Ceq = repeat_diagonal(shifted([&](cd x) { return 1.0 / (c * x); }, s, w0, h), 6);
    }

    parts.U_C = CMatrix::Zero(6 * n, 6 * n);
    parts.M_v = CMatrix::Zero(6 * n, 6 * n);
    parts.M_i = CMatrix::Zero(6 * n, 6 * n);
    parts.I_s = CMatrix::Zero(6 * n, 6 * n);
    parts.E_t = CMatrix::Zero(6 * n, 3 * n);
    parts.E_v = CMatrix::Zero(6 * n, n);
    const CMatrix id = CMatrix::Identity(n, n);
    const auto iu = op.i_u();
    const auto il = op.i_l();
    for (int x = 0; x < 3; ++x) {
        const CMatrix ucu = cap_voltage(op.u_cu[x], op, h, opt.stiff_capacitors);
        const CMatrix ucl = cap_voltage(op.u_cl[x], op, h, opt.stiff_capacitors);
        const CMatrix mu = tp(op.m_u[x], h);
        const CMatrix ml = tp(op.m_l[x], h);
        // Circulating rows carry -(v_u + v_l)/2, grid rows v_l - v_u (moved to the left side).
        put(parts.U_C, x, x, n, 0.5 * ucu);
        put(parts.U_C, x, 3 + x, n, 0.5 * ucl);
        put(parts.U_C, 3 + x, x, n, ucu);
        put(parts.U_C, 3 + x, 3 + x, n, -ucl);
        put(parts.M_v, x, x, n, 0.5 * mu);
        put(parts.M_v, x, 3 + x, n, 0.5 * ml);
        put(parts.M_v, 3 + x, x, n, mu);
        put(parts.M_v, 3 + x, 3 + x, n, -ml);
        // C du_C/dt = m * i_arm with i_u = i_c + i_g/2, i_l = i_c - i_g/2.
        put(parts.M_i, x, x, n, mu);
        put(parts.M_i, x, 3 + x, n, 0.5 * mu);
        put(parts.M_i, 3 + x, x, n, ml);
        put(parts.M_i, 3 + x, 3 + x, n, -0.5 * ml);
        put(parts.I_s, x, x, n, tp(iu[x], h));
        put(parts.I_s, 3 + x, 3 + x, n, tp(il[x], h));
        put(parts.E_t, 3 + x, x, n, 2.0 * id);
        parts.E_v.block(x * n, 0, n, n) = -0.5 * id;
    }
    return parts;
}

PlantMatrices finish(const PlantParts& parts, const CMatrix& z, const CMatrix& c,
                     const CMatrix& d, int h) {
    PlantMatrices out;
    out.order = h;
    out.Z = BlockMatrix(z, h);
    out.C = BlockMatrix(c, h);
    out.D = BlockMatrix(d, h);
    out.grid_block = 3;
    out.parts = parts;
    return out;
}

}  // namespace

PlantMatrices build_mmc_const_dc(const CircuitParams& params, const OperatingPoint& op, cd s,
                                 int h, const PlantOptions& options) {
    const PlantParts p = mmc_parts(params, op, s, h, options);
    const CMatrix mvz = p.M_v * p.Z_Ceq;
    return finish(p, p.Z_Larm + mvz * p.M_i, -(p.U_C + mvz * p.I_s), -p.E_t, h);
}

PlantMatrices build_mmc_dc_dynamics(const CircuitParams& params, const OperatingPoint& op,
                                    cd s, int h, const PlantOptions& options) {
    if (op.I_dc == 0.0 || !std::isfinite(op.I_dc))
        throw std::invalid_argument("DC-voltage dynamics need a nonzero DC current");
    PlantParts p = mmc_parts(params, op, s, h, options);
    p.dc_dynamics = true;
    const int n = 2 * h + 1;
    const double w0 = op.w0;
    const double idc = op.I_dc;
    const CMatrix dt = shifted([](cd x) { return x; }, s, w0, h);
    const CMatrix zl = shifted([&](cd x) { return params.L_arm * x + params.R_arm; }, s, w0, h);
    const CMatrix yc = shifted([&](cd x) { return params.C_eq() * x; }, s, w0, h);
    const CMatrix r2 = 2.0 * params.R_arm * CMatrix::Identity(n, n);

    // Power held in an inductor or capacitor driven by a periodic operating signal X.
    auto inductor = [&](const CMatrix& x) -> CMatrix {
        if (options.power_balance == PowerBalanceForm::Symmetrized) return 0.5 * (zl * x + x * zl);
        return (params.L_arm * dt + r2) * x;
    };
    auto capacitor = [&](const CMatrix& x) -> CMatrix {
        if (options.power_balance == PowerBalanceForm::Symmetrized) return 0.5 * (yc * x + x * yc);
        return yc * x;
    };

    p.K_vi = CMatrix::Zero(n, 6 * n);
    p.K_uc = CMatrix::Zero(n, 6 * n);
    p.K_ug = CMatrix::Zero(n, 3 * n);
    const auto iu = op.i_u();
    const auto il = op.i_l();
    for (int x = 0; x < 3; ++x) {
        const CMatrix wu = inductor(tp(iu[x], h));
        const CMatrix wl = inductor(tp(il[x], h));
        p.K_vi.block(0, x * n, n, n) = (wu + wl) / idc;
        p.K_vi.block(0, (3 + x) * n, n, n) = (0.5 * (wu - wl) + tp(op.u_g[x], h)) / idc;
        p.K_uc.block(0, x * n, n, n) = capacitor(tp(op.u_cu[x], h)) / idc;
        p.K_uc.block(0, (3 + x) * n, n, n) = capacitor(tp(op.u_cl[x], h)) / idc;
        p.K_ug.block(0, x * n, n, n) = tp(op.i_g[x], h) / idc;
    }

    const CMatrix mvk = (p.M_v + p.E_v * p.K_uc) * p.Z_Ceq;
    const CMatrix z = p.Z_Larm + p.E_v * p.K_vi + mvk * p.M_i;
    const CMatrix c = -(p.U_C + mvk * p.I_s);
    const CMatrix d = -(p.E_t + p.E_v * p.K_ug);
    return finish(p, z, c, d, h);
}

PlantMatrices build_2lvsc(const CircuitParams& params, const OperatingPoint& op, cd s, int h) {
    if (!(params.L_filter() > 0.0)) throw std::invalid_argument("filter inductance must be positive");
    if (op.order < 2 * h) throw DimensionError("operating point order too low");
    const int n = 2 * h + 1;
    const double l = params.L_filter();
    const double r = params.R_filter();
    const CMatrix zl = shifted([&](cd x) { return l * x + r; }, s, op.w0, h);
    PlantMatrices out;
    out.order = h;
    out.Z = BlockMatrix(repeat_diagonal(zl, 3), h);
    out.C = BlockMatrix(0.5 * op.U_dc * CMatrix::Identity(3 * n, 3 * n), h);
    out.D = BlockMatrix(-CMatrix::Identity(3 * n, 3 * n), h);
    out.grid_block = 0;
    return out;
}

}  // namespace htf
