#include "mmc_htf/control.hpp"

namespace htf {

namespace {

// Small-signal quantities are carried as coefficient matrices over the
// stacked perturbation [di_c (3n); di_g (3n); du (3n); du_dc (n)].
struct Chain {
    int h;
    int n;
    cd s;
    double w0;
    PerUnitBases base;
    double u_dc_nom;
    const OperatingPoint& op;

    int cols() const { return 10 * n; }
    CMatrix source(int offset, int width) const {
        CMatrix m = CMatrix::Zero(width, cols());
        m.block(0, offset, width, width).setIdentity();
        return m;
    }
    CMatrix i_c() const { return source(0, 3 * n); }
    CMatrix i_g() const { return source(3 * n, 3 * n); }
    CMatrix u() const { return source(6 * n, 3 * n); }
    CMatrix u_dc() const { return source(9 * n, n); }

    CMatrix t(const HarmonicVector& sig) const { return toeplitz_from_signal(sig, h).entries; }
    CMatrix diag(const TransferFunction& tf) const { return shifted_diagonal(tf, s, w0, h).entries; }
    CMatrix pi(double kp, double ki) const {
        return diag([=](cd x) { return kp + ki / x; });
    }
    CMatrix zero(int rows) const { return CMatrix::Zero(rows, cols()); }

    // Stack two n-row maps / build 2x2 block operators.
    CMatrix stack(const CMatrix& a, const CMatrix& b) const {
        CMatrix out(a.rows() + b.rows(), a.cols());
        out << a, b;
        return out;
    }
    CMatrix blocks(const CMatrix& a, const CMatrix& b, const CMatrix& c, const CMatrix& d) const {
        CMatrix out(2 * n, 2 * n);
        out << a, b, c, d;
        return out;
    }
    CMatrix rows(const CMatrix& m, int first) const { return m.middleRows(first * n, n); }
};

CMatrix columns(const CMatrix& lin, int offset, int width) { return lin.middleCols(offset, width); }

struct Fundamental {
    ParkHtf park;
    CMatrix u_dq;   // 2n x cols, Park image without angle term
    CMatrix i_dq;
    CMatrix dP;     // n x cols
    CMatrix dQ;
};

Fundamental fundamental(const Chain& c) {
    Fundamental f{build_park(c.h, 1, c.op.theta_offset), {}, {}, {}, {}};
    f.u_dq = f.park.abc_to_dq * c.u();
    f.i_dq = f.park.abc_to_dq * c.i_g();
    const auto ps = power_sensitivity(c.op, c.h);
    const CMatrix pq = ps.U_PQ0 * f.i_dq + ps.I_PQ0 * f.u_dq;
    f.dP = c.rows(pq, 0);
    f.dQ = c.rows(pq, 1);
    return f;
}

// Current loop, modulation and conversion to phase coordinates for given
// angle and current-reference perturbations. Returns dm_1.
CMatrix current_loop(const Chain& c, const Fundamental& f, const ControlParams& ctl,
                     const CMatrix& dtheta, const CMatrix& di_ref, double k_i) {
    const auto& op = c.op;
    const CMatrix iqd = c.stack(c.t(op.i_q), -c.t(op.i_d));
    const CMatrix mqd = c.stack(-c.t(op.m1_q), c.t(op.m1_d));
    const CMatrix g = c.pi(ctl.inner.k_pi, ctl.inner.k_ii);
    const CMatrix id = CMatrix::Identity(c.n, c.n);
    const CMatrix hi = c.blocks(g, -k_i * id, k_i * id, g);
    const CMatrix di_dq = f.i_dq + iqd * dtheta;
    const CMatrix de = (c.base.U / c.base.I) * hi * (di_ref - di_dq);
    const CMatrix dm_dq = (2.0 / c.u_dc_nom) * de;
    return f.park.dq_to_abc * (dm_dq + mqd * dtheta);
}

// Circulating current suppression in the 2*theta frame. Returns dm_2.
CMatrix ccsc(const Chain& c, const ControlParams& ctl, const CMatrix& dtheta, double k_c) {
    const auto& op = c.op;
    const ParkHtf p2 = build_park(c.h, 2, op.theta_offset);
    const CMatrix icqd = c.stack(c.t(op.i_cq), -c.t(op.i_cd));
    const CMatrix mqd = c.stack(-c.t(op.m2_q), c.t(op.m2_d));
    const CMatrix g = c.pi(ctl.ccsc.k_pic, ctl.ccsc.k_iic);
    const CMatrix id = CMatrix::Identity(c.n, c.n);
    const CMatrix hc = c.blocks(g, k_c * id, -k_c * id, g);
    const CMatrix dic_dq = p2.abc_to_dq * c.i_c() + 2.0 * icqd * dtheta;
    const CMatrix de = (c.base.U / c.base.I) * hc * (-dic_dq);
    const CMatrix dm_dq = (2.0 / c.u_dc_nom) * de;
    return p2.dq_to_abc * (dm_dq + 2.0 * mqd * dtheta);
}

CMatrix pll_angle(const Chain& c, const Fundamental& f, const CircuitParams& circuit,
                  const ControlParams& ctl) {
    const CMatrix tpll = build_pll(circuit, ctl, c.op, c.s, c.h).entries;
    return tpll * c.rows(f.u_dq, 1);
}

Chain make_chain(const CircuitParams& circuit, const OperatingPoint& op, cd s, int h) {
    op.validate(h);
    return Chain{h, 2 * h + 1, s, op.w0, PerUnitBases::from(circuit), circuit.U_dc, op};
}

ControlChains split(const Chain& c, const CMatrix& dm1, const CMatrix& dm2) {
    const int n = c.n;
    ControlChains out;
    out.T_gi = columns(dm1, 3 * n, 3 * n);
    out.T_gu = columns(dm1, 6 * n, 3 * n);
    out.T_gv = columns(dm1, 9 * n, n);
    out.T_cic = columns(dm2, 0, 3 * n);
    out.T_cig = columns(dm2, 3 * n, 3 * n);
    out.T_cu = columns(dm2, 6 * n, 3 * n);
    out.T_cv = columns(dm2, 9 * n, n);
    return out;
}

enum class Sync { SwingDroop, Fixed, Pll };

struct Loops {
    Sync sync;
    bool power_loop = false;   // GFL PQ outer loop
    bool voltage_loop = false; // GFM voltage loop
    bool dc_loop = false;
    bool ccsc = false;
    bool mmc = true;
};

ControlChains linearize(const CircuitParams& circuit, const ControlParams& ctl,
                        const OperatingPoint& op, cd s, int h, const Loops& loops) {
    const Chain c = make_chain(circuit, op, s, h);
    const Fundamental f = fundamental(c);
    const double sb = c.base.S;

    CMatrix dtheta = c.zero(c.n);
    if (loops.sync == Sync::SwingDroop) {
        const double H = ctl.gfm.H, D = ctl.gfm.D;
        const CMatrix g_apc = c.diag([=](cd x) { return 1.0 / (x * (H * x + D)); });
        dtheta = -(1.0 / sb) * g_apc * f.dP;
    } else if (loops.sync == Sync::Pll) {
        dtheta = pll_angle(c, f, circuit, ctl);
    }

    CMatrix di_ref = c.zero(2 * c.n);
    if (loops.voltage_loop) {
        CMatrix du_ref = c.zero(c.n);
        if (loops.sync == Sync::SwingDroop) {
            const double dv = ctl.gfm.D_v, tv = ctl.gfm.T_v;
            const CMatrix g_avc = c.diag([=](cd x) { return dv / (1.0 + tv * x); });
            du_ref = -(c.base.U / sb) * g_avc * f.dQ;
        }
        const CMatrix uqd = c.stack(c.t(op.u_q), -c.t(op.u_d));
        const CMatrix du_dq = f.u_dq + uqd * dtheta;
        const CMatrix gv = c.pi(ctl.gfm.k_pv, ctl.gfm.k_iv);
        const CMatrix hv = c.blocks(gv, CMatrix::Zero(c.n, c.n), CMatrix::Zero(c.n, c.n), gv);
        di_ref = (c.base.I / c.base.U) * hv * (c.stack(du_ref, c.zero(c.n)) - du_dq);
    } else if (loops.power_loop) {
        const CMatrix gp = c.pi(ctl.pq.k_pp, ctl.pq.k_ip);
        di_ref = (c.base.I / sb) * c.stack(-gp * f.dP, gp * f.dQ);
    } else if (loops.dc_loop) {
        const CMatrix gd = c.pi(ctl.dc.k_pd, ctl.dc.k_id);
        di_ref = c.stack((c.base.I / c.base.U_dc) * gd * c.u_dc(), c.zero(c.n));
    }

    const CMatrix dm1 = current_loop(c, f, ctl, dtheta, di_ref, ctl.K_i(circuit, loops.mmc));
    const CMatrix dm2 = loops.ccsc ? ccsc(c, ctl, dtheta, ctl.K_c(circuit)) : c.zero(3 * c.n);
    return split(c, dm1, dm2);
}

ControlMatrices two_level(const ControlChains& ch, int h) {
    ControlMatrices out;
    out.order = h;
    out.F = BlockMatrix(ch.T_gi, h);
    out.B = BlockMatrix(ch.T_gu, h);
    out.chains = ch;
    return out;
}

}  // namespace

HtfBlock build_pll(const CircuitParams& circuit, const ControlParams& control,
                   const OperatingPoint& op, cd s, int h) {
    if (!(op.u_d.get(0).real() > 0.0))
        throw std::invalid_argument("PLL linearization needs U_d > 0");
    const double kp = control.pll.k_p, ki = control.pll.k_i;
    const double ub = PerUnitBases::from(circuit).U;
    const int n = 2 * h + 1;
    const CMatrix hp = shifted_diagonal([=](cd x) { return (kp + ki / x) / x; }, s, op.w0, h).entries;
    const CMatrix ud = toeplitz_from_signal(op.u_d, h).entries;
    const CMatrix lhs = CMatrix::Identity(n, n) + hp * ud / ub;
    return HtfBlock{h, solve(lhs, hp / ub, s), BlockKind::Dense};
}

PowerSensitivity power_sensitivity(const OperatingPoint& op, int h) {
    const int n = 2 * h + 1;
    auto t = [&](const HarmonicVector& v) { return toeplitz_from_signal(v, h).entries; };
    PowerSensitivity out{CMatrix(2 * n, 2 * n), CMatrix(2 * n, 2 * n)};
    out.U_PQ0 << t(op.u_d), t(op.u_q), t(op.u_q), -t(op.u_d);
    out.I_PQ0 << t(op.i_d), t(op.i_q), -t(op.i_q), t(op.i_d);
    out.U_PQ0 *= 1.5;
    out.I_PQ0 *= 1.5;
    return out;
}

ControlMatrices assemble_mmc_control(const ControlChains& ch, int h) {
    const int n = 2 * h + 1;
    const int m = 3 * n;
    CMatrix f(2 * m, 2 * m), b(2 * m, m);
    f << -ch.T_cic, -(ch.T_cig + ch.T_gi), -ch.T_cic, -(ch.T_cig - ch.T_gi);
    b << -(ch.T_gu + ch.T_cu), ch.T_gu - ch.T_cu;
    ControlMatrices out;
    out.order = h;
    out.F = BlockMatrix(0.5 * f, h);
    out.B = BlockMatrix(0.5 * b, h);
    out.chains = ch;
    return out;
}

ControlMatrices build_gfm(const CircuitParams& circuit, const ControlParams& control,
                          const OperatingPoint& op, cd s, int h, bool outer_loops) {
    Loops l{outer_loops ? Sync::SwingDroop : Sync::Fixed};
    l.voltage_loop = true;
    l.ccsc = true;
    return assemble_mmc_control(linearize(circuit, control, op, s, h, l), h);
}

ControlMatrices build_gfl_pq(const CircuitParams& circuit, const ControlParams& control,
                             const OperatingPoint& op, cd s, int h, bool power_loop) {
    Loops l{Sync::Pll};
    l.power_loop = power_loop;
    l.ccsc = true;
    return assemble_mmc_control(linearize(circuit, control, op, s, h, l), h);
}

ControlMatrices build_gfl_dc(const CircuitParams& circuit, const ControlParams& control,
                             const OperatingPoint& op, const PlantMatrices& plant, cd s,
                             int h) {
    const auto& p = plant.parts;
    if (!p.dc_dynamics)
        throw std::invalid_argument("DC-voltage control needs the DC-dynamics plant");
    Loops l{Sync::Pll};
    l.dc_loop = true;
    l.ccsc = true;
    const ControlChains ch = linearize(circuit, control, op, s, h, l);
    const ControlMatrices base = assemble_mmc_control(ch, h);
    const int n = 2 * h + 1;
    CMatrix gv(6 * n, n);
    gv << -(ch.T_gv + ch.T_cv), ch.T_gv - ch.T_cv;
    gv *= 0.5;
    // du_dc = K_vi di + K_uc du_C + K_ug du with du_C = Z_Ceq (M_i di + I_s dm).
    const CMatrix j_i = base.F.dense() + gv * p.K_vi;
    const CMatrix j_u = base.B.dense() + gv * p.K_ug;
    const CMatrix j_v = gv * p.K_uc;
    const CMatrix lhs = CMatrix::Identity(6 * n, 6 * n) - j_v * p.Z_Ceq * p.I_s;
    CMatrix rhs(6 * n, 9 * n);
    rhs << j_i + j_v * p.Z_Ceq * p.M_i, j_u;
    const CMatrix x = solve(lhs, rhs, s);
    ControlMatrices out;
    out.order = h;
    out.F = BlockMatrix(x.leftCols(6 * n), h);
    out.B = BlockMatrix(x.rightCols(3 * n), h);
    out.chains = ch;
    return out;
}

ControlMatrices build_2lvsc_control(const CircuitParams& circuit, const ControlParams& control,
                                    const OperatingPoint& op, cd s, int h, ControlMode mode) {
    Loops l{Sync::Fixed};
    l.mmc = false;
    switch (mode) {
        case ControlMode::GFM: l.sync = Sync::SwingDroop; l.voltage_loop = true; break;
        case ControlMode::ConstVf: l.voltage_loop = true; break;
        case ControlMode::GFL_PQ: l.sync = Sync::Pll; l.power_loop = true; break;
        case ControlMode::ConstCurrent: l.sync = Sync::Pll; break;
        case ControlMode::OpenLoop: return build_open_loop(Converter::VSC2L, h);
        case ControlMode::GFL_DC:
            throw std::invalid_argument("DC-voltage control is not defined for the 2L-VSC");
    }
    return two_level(linearize(circuit, control, op, s, h, l), h);
}

ControlMatrices build_open_loop(Converter converter, int h) {
    const int n = 2 * h + 1;
    const int rows = converter == Converter::MMC ? 6 * n : 3 * n;
    ControlMatrices out;
    out.order = h;
    out.F = BlockMatrix(CMatrix::Zero(rows, rows), h);
    out.B = BlockMatrix(CMatrix::Zero(rows, 3 * n), h);
    const CMatrix z = CMatrix::Zero(3 * n, 3 * n);
    const CMatrix zv = CMatrix::Zero(3 * n, n);
    out.chains = ControlChains{z, z, zv, z, z, z, zv};
    return out;
}

}  // namespace htf
