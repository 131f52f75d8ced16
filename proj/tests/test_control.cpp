#include <gtest/gtest.h>

#include "mmc_htf/control.hpp"
#include "support.hpp"

using namespace htf;
using namespace htf::testing;

namespace {

constexpr double kW0 = 100.0 * kPi;

CMatrix flip(const CMatrix& m, int n) {
    CMatrix out(m.rows(), m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            out((r / n) * n + (n - 1 - r % n), (c / n) * n + (n - 1 - c % n)) = m(r, c);
    return out;
}

CVector stack2(const CVector& a, const CVector& b) {
    CVector v(a.size() + b.size());
    v << a, b;
    return v;
}

// Rows with |k| <= keep inside each phase block of a phase-stacked vector.
CVector central(const CVector& v, int h, int keep) {
    const int n = 2 * h + 1;
    const auto blocks = static_cast<int>(v.size()) / n;
    CVector out(blocks * (2 * keep + 1));
    for (int b = 0; b < blocks; ++b) out.segment(b * (2 * keep + 1), 2 * keep + 1) = v.segment(b * n + h - keep, 2 * keep + 1);
    return out;
}

}  // namespace

TEST(Control, PowerGainExample) {
    const ControlParams p;
    const auto g = shifted_diagonal([&](cd s) { return p.pq.k_pp + p.pq.k_ip / s; },
                                    cd(0.0, 2.0 * kPi * 5.0), kW0, 3);
    EXPECT_NEAR(g.entries(3, 3).real(), 0.2, 1e-12);
    EXPECT_NEAR(g.entries(3, 3).imag(), -0.4775, 5e-5);
}

TEST(Control, PowerSensitivityBlocks) {
    const int h = 3, n = 7;
    auto op = synthetic_op(Converter::MMC, 6);
    op.u_q = HarmonicVector::constant(6, kW0, 700.0);
    const auto ps = power_sensitivity(op, h);
    ASSERT_EQ(ps.U_PQ0.rows(), 2 * n);
    ASSERT_EQ(ps.U_PQ0.cols(), 2 * n);
    const double ud = op.u_d.get(0).real(), uq = 700.0;
    const double id = op.i_d.get(0).real(), iq = op.i_q.get(0).real();
    const CMatrix eye = CMatrix::Identity(n, n);
    auto blk = [&](const CMatrix& m, int r, int c) { return CMatrix(m.block(r * n, c * n, n, n)); };
    EXPECT_LE(rel_diff(blk(ps.U_PQ0, 0, 0), 1.5 * ud * eye), 1e-15);
    EXPECT_LE(rel_diff(blk(ps.U_PQ0, 0, 1), 1.5 * uq * eye), 1e-15);
    EXPECT_LE(rel_diff(blk(ps.U_PQ0, 1, 0), 1.5 * uq * eye), 1e-15);
    EXPECT_LE(rel_diff(blk(ps.U_PQ0, 1, 1), -1.5 * ud * eye), 1e-15);
    EXPECT_LE(rel_diff(blk(ps.I_PQ0, 0, 0), 1.5 * id * eye), 1e-15);
    EXPECT_LE(rel_diff(blk(ps.I_PQ0, 0, 1), 1.5 * iq * eye), 1e-15);
    EXPECT_LE(rel_diff(blk(ps.I_PQ0, 1, 0), -1.5 * iq * eye), 1e-15);
    EXPECT_LE(rel_diff(blk(ps.I_PQ0, 1, 1), 1.5 * id * eye), 1e-15);
}

TEST(Control, PowerSensitivityMatchesPowerFormula) {
    // P = 1.5(u_d i_d + u_q i_q), Q = 1.5(u_q i_d - u_d i_q), perturbed by
    // differences on constant dq quantities (exact for a bilinear form).
    auto op = synthetic_op(Converter::MMC, 6);
    op.u_q = HarmonicVector::constant(6, kW0, 700.0);
    const double ud = op.u_d.get(0).real(), uq = 700.0;
    const double id = op.i_d.get(0).real(), iq = op.i_q.get(0).real();
    auto pq = [](double a, double b, double c, double d) {
        return std::array<double, 2>{1.5 * (a * c + b * d), 1.5 * (b * c - a * d)};
    };
    const auto ps = power_sensitivity(op, 3);
    const double e = 1.0;
    const auto base = pq(ud, uq, id, iq);
    const std::array<std::array<double, 2>, 4> fd{
        std::array<double, 2>{(pq(ud, uq, id + e, iq)[0] - base[0]) / e, (pq(ud, uq, id + e, iq)[1] - base[1]) / e},
        {(pq(ud, uq, id, iq + e)[0] - base[0]) / e, (pq(ud, uq, id, iq + e)[1] - base[1]) / e},
        {(pq(ud + e, uq, id, iq)[0] - base[0]) / e, (pq(ud + e, uq, id, iq)[1] - base[1]) / e},
        {(pq(ud, uq + e, id, iq)[0] - base[0]) / e, (pq(ud, uq + e, id, iq)[1] - base[1]) / e}};
    for (int row = 0; row < 2; ++row) {
        EXPECT_NEAR(ps.U_PQ0(row * 7 + 3, 3).real(), fd[0][row], 1e-9 * std::abs(fd[0][row]));
        EXPECT_NEAR(ps.U_PQ0(row * 7 + 3, 10).real(), fd[1][row], 1e-9 * std::abs(fd[1][row]));
        EXPECT_NEAR(ps.I_PQ0(row * 7 + 3, 3).real(), fd[2][row], 1e-9 * std::abs(fd[2][row]));
        EXPECT_NEAR(ps.I_PQ0(row * 7 + 3, 10).real(), fd[3][row], 1e-9 * std::abs(fd[3][row]));
    }
}

TEST(Control, PllLimits) {
    const CircuitParams c;
    const ControlParams k;
    const auto op = synthetic_op(Converter::MMC, 6);
    const double ud = op.u_d.get(0).real();
    const auto low = build_pll(c, k, op, cd(0.0, 2.0 * kPi * 0.01), 3);
    EXPECT_NEAR(std::abs(ud * low.entries(3, 3)), 1.0, 1e-3);
    // Above the loop bandwidth the proportional path dominates:
    // |U_d T_pll| -> k_p U_d / (U_b |s|), a first-order roll-off.
    const double ub = PerUnitBases::from(c).U;
    for (double f : {1e4, 1e6}) {
        const cd s(0.0, 2.0 * kPi * f);
        const double x = std::abs(ud * build_pll(c, k, op, s, 3).entries(3, 3));
        const double asym = k.pll.k_p * ud / ub / std::abs(s);
        EXPECT_NEAR(x / asym, 1.0, f > 1e5 ? 1e-3 : 0.05) << f;
    }
    EXPECT_LT(std::abs(ud * build_pll(c, k, op, cd(0.0, 2.0 * kPi * 1e4), 3).entries(3, 3)), 0.03);
}

TEST(Control, CcscVanishesWithZeroGains) {
    ControlParams k;
    k.ccsc.k_pic = 0.0;
    k.ccsc.k_iic = 0.0;
    k.ccsc.K_c = 0.0;
    const auto op = synthetic_op(Converter::MMC, 6);  // m2_dq = 0
    const cd s(0.0, 2.0 * kPi * 37.0);
    for (const auto& cm : {build_gfm(CircuitParams{}, k, op, s, 3), build_gfl_pq(CircuitParams{}, k, op, s, 3)}) {
        EXPECT_EQ(cm.chains.T_cic.cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ(cm.chains.T_cig.cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ(cm.chains.T_cu.cwiseAbs().maxCoeff(), 0.0);
    }
    const auto on = build_gfm(CircuitParams{}, ControlParams{}, op, s, 3);
    EXPECT_GT(on.chains.T_cic.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Control, ArmSplitAssembly) {
    // F = 1/2 [-T_cic, -(T_cig + T_gi); -T_cic, -(T_cig - T_gi)],
    // B = 1/2 [-(T_gu + T_cu); T_gu - T_cu].
    const int h = 3;
    const auto op = synthetic_op(Converter::MMC, 6);
    const auto cm = build_gfl_pq(CircuitParams{}, ControlParams{}, op, cd(0.0, 2.0 * kPi * 23.0), h);
    const auto& t = cm.chains;
    const int m = 21;
    CMatrix f(2 * m, 2 * m), b(2 * m, m);
    f << -t.T_cic, -(t.T_cig + t.T_gi), -t.T_cic, -(t.T_cig - t.T_gi);
    b << -(t.T_gu + t.T_cu), t.T_gu - t.T_cu;
    EXPECT_LE(rel_diff(cm.F.dense(), 0.5 * f), 1e-15);
    EXPECT_LE(rel_diff(cm.B.dense(), 0.5 * b), 1e-15);
    EXPECT_EQ(cm.F.dense().rows(), 42);
    EXPECT_EQ(cm.B.dense().cols(), 21);
}

TEST(Control, ConstVfDropsOuterLoops) {
    const auto op = synthetic_op(Converter::MMC, 6);
    const cd s(0.0, 2.0 * kPi * 31.0);
    const auto gfm = build_gfm(CircuitParams{}, ControlParams{}, op, s, 3, true);
    const auto vf = build_gfm(CircuitParams{}, ControlParams{}, op, s, 3, false);
    // The circulating-current controller is untouched by the outer loops.
    EXPECT_LE(rel_diff(vf.chains.T_cic, gfm.chains.T_cic), 1e-15);
    EXPECT_GT(rel_diff(vf.chains.T_gu, gfm.chains.T_gu), 1e-3);
    // Without power loops only the current-loop path depends on di_g and the
    // grid voltage reaches dm only through the voltage loop.
    ControlParams k;
    k.gfm.k_pv = 0.0;
    k.gfm.k_iv = 0.0;
    const auto vf0 = build_gfm(CircuitParams{}, k, op, s, 3, false);
    EXPECT_EQ(vf0.chains.T_gu.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Control, GflDcWithZeroDcGainsIsConstantCurrent) {
    ControlParams k;
    k.dc.k_pd = 0.0;
    k.dc.k_id = 0.0;
    const auto op = simulated_op(make_spec(ControlMode::GFL_DC));
    const cd s(0.0, 2.0 * kPi * 40.0);
    const CircuitParams c;
    const auto plant = build_mmc_dc_dynamics(c, op, s, 3);
    const auto dc = build_gfl_dc(c, k, op, plant, s, 3);
    const auto cc = build_gfl_pq(c, k, op, s, 3, false);
    EXPECT_EQ(dc.chains.T_gv.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LE(rel_diff(dc.F.dense(), cc.F.dense()), 1e-12);
    EXPECT_LE(rel_diff(dc.B.dense(), cc.B.dense()), 1e-12);
}

TEST(Control, GflDcBackSubstitution) {
    // dm = G_v du_dc + F0 di + B0 du, du_dc = K_vi di + K_uc du_C + K_ug du,
    // du_C = Z_Ceq (M_i di + I_s dm); solved for dm.
    const int h = 3, n = 7;
    const auto op = simulated_op(make_spec(ControlMode::GFL_DC));
    const cd s(0.0, 2.0 * kPi * 75.0);
    const CircuitParams c;
    const auto plant = build_mmc_dc_dynamics(c, op, s, h);
    const auto dc = build_gfl_dc(c, ControlParams{}, op, plant, s, h);
    const auto& t = dc.chains;
    ASSERT_EQ(t.T_gv.rows(), 3 * n);
    ASSERT_EQ(t.T_gv.cols(), n);
    EXPECT_GT(t.T_gv.cwiseAbs().maxCoeff(), 0.0);
    ControlChains no_dc = t;
    no_dc.T_gv.setZero();
    no_dc.T_cv.setZero();
    const auto base = assemble_mmc_control(no_dc, h);
    CMatrix gv(6 * n, n);
    gv << -0.5 * (t.T_gv + t.T_cv), 0.5 * (t.T_gv - t.T_cv);
    const auto& p = plant.parts;
    const CMatrix jv = gv * p.K_uc;
    const CMatrix lhs = CMatrix::Identity(6 * n, 6 * n) - jv * p.Z_Ceq * p.I_s;
    const CMatrix f = lhs.lu().solve(base.F.dense() + gv * p.K_vi + jv * p.Z_Ceq * p.M_i);
    const CMatrix b = lhs.lu().solve(base.B.dense() + gv * p.K_ug);
    EXPECT_LE(rel_diff(dc.F.dense(), f), 1e-12);
    EXPECT_LE(rel_diff(dc.B.dense(), b), 1e-12);
}

TEST(Control, TwoLevelStructure) {
    const auto op = synthetic_op(Converter::VSC2L, 6);
    const cd s(0.0, 2.0 * kPi * 61.0);
    for (auto mode : {ControlMode::GFM, ControlMode::GFL_PQ, ControlMode::ConstCurrent, ControlMode::ConstVf}) {
        const auto cm = build_2lvsc_control(CircuitParams{}, ControlParams{}, op, s, 3, mode);
        EXPECT_EQ(cm.F.dense().rows(), 21);
        EXPECT_EQ(cm.F.dense().cols(), 21);
        EXPECT_EQ(cm.B.dense().cols(), 21);
    }
    // Same fundamental chain as the MMC once the arm split is removed.
    ControlParams k;
    const auto two = build_2lvsc_control(CircuitParams{}, k, op, s, 3, ControlMode::GFM);
    auto mop = op;
    mop.converter = Converter::MMC;
    const auto mmc = build_gfm(CircuitParams{}, k, mop, s, 3);
    EXPECT_LE(rel_diff(two.F.dense(), mmc.chains.T_gi), 1e-12);
    EXPECT_LE(rel_diff(two.B.dense(), mmc.chains.T_gu), 1e-12);
    const auto ol = build_open_loop(Converter::VSC2L, 3);
    EXPECT_EQ(ol.F.dense().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(build_open_loop(Converter::MMC, 3).B.dense().rows(), 42);
}

TEST(Control, ConjugateMirrorSymmetry) {
    const int n = 7;
    const auto op = simulated_op(make_spec(ControlMode::GFM));
    for (double f : random_freqs(3, 5)) {
        const cd s(0.3, 2.0 * kPi * f);
        const auto a = build_gfm(CircuitParams{}, ControlParams{}, op, s, 3);
        const auto b = build_gfm(CircuitParams{}, ControlParams{}, op, std::conj(s), 3);
        EXPECT_LE(rel_diff(a.F.dense(), flip(b.F.dense().conjugate(), n)), 1e-12);
        EXPECT_LE(rel_diff(a.B.dense(), flip(b.B.dense().conjugate(), n)), 1e-12);
    }
}

// F and B against the simulator's nonlinear controllers: inject a small
// grid-voltage perturbation, take the periodic response, and check that the
// measured modulation perturbation equals F di + B du for the measured
// current and terminal-voltage perturbations.
class ControlVsSimulator : public ::testing::TestWithParam<std::tuple<ControlMode, double>> {};

TEST_P(ControlVsSimulator, ModulationResponse) {
    const auto [mode, f] = GetParam();
    ModelSpec spec = make_spec(mode);
    spec.h = 5;
    const int h = spec.h;
    const double f0 = 50.0;
    const double amp = 0.005 * PerUnitBases::from(spec.circuit).U;
    const auto run = run_injection(spec, Injection{f, Sequence::Positive, amp});
    ASSERT_LT(run.residual, 1e-9);
    auto ic = [](const Signals& s) { return s.i_c; };
    auto ig = [](const Signals& s) { return s.i_g; };
    auto up = [](const Signals& s) { return s.u_pcc; };
    auto mu = [](const Signals& s) { return s.m_u; };
    auto ml = [](const Signals& s) { return s.m_l; };
    const CVector di = stack2(phase_spectrum(run, ic, f, f0, h), phase_spectrum(run, ig, f, f0, h));
    const CVector du = phase_spectrum(run, up, f, f0, h);
    const CVector dm = stack2(phase_spectrum(run, mu, f, f0, h), phase_spectrum(run, ml, f, f0, h));
    const cd sc(0.0, 2.0 * kPi * (f - f0));
    const auto model = build_general_model(spec, run.op, sc);
    const CVector pred = model.control.F.dense() * di + model.control.B.dense() * du;
    const CVector a = central(pred, h, 2), b = central(dm, h, 2);
    EXPECT_LE((a - b).norm() / b.norm(), 0.01) << to_string(mode) << " " << f << " Hz";
}

INSTANTIATE_TEST_SUITE_P(
    Modes, ControlVsSimulator,
    ::testing::Values(std::tuple{ControlMode::GFM, 17.0}, std::tuple{ControlMode::GFM, 73.0},
                      std::tuple{ControlMode::GFM, 260.0}, std::tuple{ControlMode::GFL_PQ, 23.0},
                      std::tuple{ControlMode::GFL_PQ, 133.0}, std::tuple{ControlMode::GFL_PQ, 410.0},
                      std::tuple{ControlMode::GFL_DC, 40.0}, std::tuple{ControlMode::GFL_DC, 76.0}),
    [](const auto& info) {
        return std::string(to_string(std::get<0>(info.param))) + "_" +
               std::to_string(static_cast<int>(std::get<1>(info.param))) + "Hz";
    });
