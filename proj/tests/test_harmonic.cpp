#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mmc_htf/harmonic.hpp"

using namespace htf;

namespace {

constexpr double kW0 = 2.0 * kPi * 50.0;

// Sample a harmonic vector over one fundamental period.
std::vector<double> sample_real(const HarmonicVector& x, int n) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = x.evaluate(2.0 * kPi * i / (n * kW0)).real();
    return out;
}

HarmonicVector random_real(int order, std::mt19937& rng) {
    std::normal_distribution<double> g;
    HarmonicVector v(order, kW0);
    v.set(0, g(rng));
    for (int k = 1; k <= order; ++k) {
        cd c{g(rng), g(rng)};
        v.set(k, c);
        v.set(-k, std::conj(c));
    }
    return v;
}

// Explicit inverse by Gauss-Jordan elimination with partial pivoting.
CMatrix gauss_jordan_inverse(CMatrix a) {
    const int n = static_cast<int>(a.rows());
    CMatrix inv = CMatrix::Identity(n, n);
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        a.row(col).swap(a.row(piv));
        inv.row(col).swap(inv.row(piv));
        const cd d = a(col, col);
        a.row(col) /= d;
        inv.row(col) /= d;
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const cd f = a(r, col);
            a.row(r) -= f * a.row(col);
            inv.row(r) -= f * inv.row(col);
        }
    }
    return inv;
}

}  // namespace

TEST(HarmonicVector, LengthAndIndexing) {
    HarmonicVector v(3, kW0);
    EXPECT_EQ(v.size(), 7);
    v.set(-2, {1.0, 2.0});
    EXPECT_EQ(v.at(-2), cd(1.0, 2.0));
    EXPECT_EQ(v.get(5), cd(0.0, 0.0));
    EXPECT_THROW(v.at(4), DimensionError);
}

TEST(HarmonicVector, RealSignalCheck) {
    CVector c(3);
    c << cd(1, 1), cd(0.5, 0), cd(1, -1);
    EXPECT_NO_THROW(HarmonicVector(c, kW0, true));
    c(0) = cd(2, 1);
    EXPECT_THROW(HarmonicVector(c, kW0, true), std::invalid_argument);
}

TEST(HarmonicVector, FromSamplesRecoversCosine) {
    const int n = 64;
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = 3.0 * std::cos(2.0 * kPi * i / n + 0.4) + 0.5;
    const auto v = HarmonicVector::from_samples(x, 3, kW0);
    EXPECT_NEAR(std::abs(v.at(1) - std::polar(1.5, 0.4)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(v.at(-1) - std::polar(1.5, -0.4)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(v.at(0) - 0.5), 0.0, 1e-12);
    EXPECT_LT(v.conjugate_asymmetry(), 1e-12);
}

TEST(Toeplitz, CosineBlock) {
    const auto b = toeplitz_from_signal(HarmonicVector::cosine(2, kW0, 1), 1);
    ASSERT_EQ(b.entries.rows(), 3);
    EXPECT_EQ(b.kind, BlockKind::ToeplitzOfSignal);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            const double expect = std::abs(r - c) == 1 ? 0.5 : 0.0;
            EXPECT_NEAR(std::abs(b.entries(r, c) - expect), 0.0, 1e-15);
        }
}

TEST(Toeplitz, PhaseBCosineTerms) {
    const cd a = std::polar(1.0, 2.0 * kPi / 3.0);
    const auto sig = HarmonicVector::cosine(2, kW0, 1, 1.0, -2.0 * kPi / 3.0);
    EXPECT_NEAR(std::abs(sig.at(1) - std::conj(a) / 2.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(sig.at(-1) - a / 2.0), 0.0, 1e-15);
    // Same terms from sampling the time-domain waveform.
    const int n = 96;
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = std::cos(2.0 * kPi * i / n - 2.0 * kPi / 3.0);
    const auto fft = HarmonicVector::from_samples(x, 2, kW0);
    EXPECT_NEAR((fft.coeffs() - sig.coeffs()).norm(), 0.0, 1e-13);
    const auto blk = toeplitz_from_signal(sig, 1);
    EXPECT_NEAR(std::abs(blk.entries(1, 0) - std::conj(a) / 2.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(blk.entries(0, 1) - a / 2.0), 0.0, 1e-15);
}

TEST(Toeplitz, ProductMatchesSampledMultiplication) {
    std::mt19937 rng(7);
    const int h = 3;
    const auto x = random_real(3, rng);
    const auto y = random_real(3, rng);
    const int n = 256;
    const auto xs = sample_real(x, n);
    const auto ys = sample_real(y, n);
    std::vector<double> prod(n);
    for (int i = 0; i < n; ++i) prod[i] = xs[i] * ys[i];
    const auto oracle = HarmonicVector::from_samples(prod, h, kW0);
    const CVector got = toeplitz_from_signal(x.resized(2 * h), h).entries * y.coeffs();
    // y has bandwidth 3 and x bandwidth 3, so only orders |k| <= 3 of the
    // product are complete; those are exactly the rows of a h = 3 block.
    EXPECT_LT((got - oracle.coeffs()).norm() / oracle.coeffs().norm(), 1e-10);
}

TEST(Toeplitz, ConjugateSymmetryOfRealSignal) {
    std::mt19937 rng(3);
    const int h = 3;
    const auto x = random_real(2 * h, rng);
    const auto m = toeplitz_from_signal(x, h).entries;
    const int n = 2 * h + 1;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            EXPECT_NEAR(std::abs(m(r, c) - std::conj(m(n - 1 - r, n - 1 - c))), 0.0, 1e-14);
}

TEST(Toeplitz, OrderMismatch) {
    EXPECT_THROW(toeplitz_from_signal(HarmonicVector(2, kW0), -1), DimensionError);
}

TEST(ShiftedDiagonal, ArmInductorAtFundamental) {
    const double L = 16.37e-3, R = 0.03;
    const auto b = shifted_diagonal([&](cd s) { return L * s + R; }, cd(0, kW0), kW0, 3);
    EXPECT_EQ(b.kind, BlockKind::ShiftedDiagonal);
    EXPECT_NEAR(b.entries(3, 3).real(), 0.03, 1e-12);
    EXPECT_NEAR(b.entries(3, 3).imag(), 5.1433, 1e-3);
    EXPECT_EQ(b.entries(0, 1), cd(0.0, 0.0));
    // Entry k sits at s + j k w0; k = -1 lands on DC.
    EXPECT_NEAR(std::abs(b.entries(2, 2) - R), 0.0, 1e-12);
}

TEST(ShiftedDiagonal, ArmCapacitorAt10Hz) {
    const double C = 10.48e-3 / 50.0;
    const auto b = shifted_diagonal([&](cd s) { return 1.0 / (C * s); }, cd(0, 2 * kPi * 10), kW0, 3);
    EXPECT_NEAR(b.entries(3, 3).real(), 0.0, 1e-12);
    EXPECT_NEAR(b.entries(3, 3).imag(), -75.93, 5e-3);
}

TEST(ShiftedDiagonal, SwingTransferAt5Hz) {
    const auto b = shifted_diagonal([](cd s) { return 1.0 / (s * (1.0 * s + 100.0)); },
                                    cd(0, 2 * kPi * 5), kW0, 3);
    EXPECT_NEAR(std::abs(b.entries(3, 3)), 3.04e-4, 5e-7);
}

TEST(ShiftedDiagonal, PoleNamesHarmonic) {
    try {
        shifted_diagonal([](cd s) { return 1.0 / s; }, cd(0, 2 * kW0), kW0, 3);
        FAIL();
    } catch (const SingularityError& e) {
        EXPECT_EQ(e.harmonic(), -2);
    }
}

TEST(ShiftedDiagonal, SumAndProduct) {
    const cd s(0.3, 17.0);
    auto h1 = [](cd x) { return 1.0 / (x + 2.0); };
    auto h2 = [](cd x) { return x * x + 1.0; };
    const auto b1 = shifted_diagonal(h1, s, kW0, 3).entries;
    const auto b2 = shifted_diagonal(h2, s, kW0, 3).entries;
    const auto bs = shifted_diagonal([&](cd x) { return h1(x) + h2(x); }, s, kW0, 3).entries;
    const auto bp = shifted_diagonal([&](cd x) { return h1(x) * h2(x); }, s, kW0, 3).entries;
    EXPECT_LT((bs - (b1 + b2)).norm(), 1e-9 * bs.norm());
    EXPECT_LT((bp - b1 * b2).norm(), 1e-12 * bp.norm());
    EXPECT_LT((b1 * b2 - b2 * b1).norm(), 1e-12);
}

TEST(BlockMatrixTest, Layout) {
    BlockMatrix m(2, 3, 3);
    EXPECT_EQ(m.dense().rows(), 14);
    EXPECT_EQ(m.dense().cols(), 21);
    CMatrix b = CMatrix::Constant(7, 7, cd(1, 2));
    m.set_block(1, 2, b);
    EXPECT_EQ(m.block(1, 2), b);
    EXPECT_EQ(m.dense()(7, 14), cd(1, 2));
    EXPECT_THROW(m.set_block(2, 0, b), DimensionError);
    EXPECT_THROW(m.set_block(0, 0, CMatrix::Zero(5, 5)), DimensionError);
}

TEST(Solve, Identity) {
    std::mt19937 rng(1);
    CMatrix rhs = CMatrix::Random(9, 4);
    EXPECT_EQ(solve(CMatrix::Identity(9, 9), rhs), rhs);
}

TEST(Solve, DiagonalInverse) {
    const double L = 16.37e-3, R = 0.03;
    const auto d = shifted_diagonal([&](cd s) { return L * s + R; }, cd(0, 2 * kPi * 30), kW0, 3);
    const CMatrix x = solve(d.entries, CMatrix::Identity(7, 7));
    for (int k = 0; k < 7; ++k) EXPECT_NEAR(std::abs(x(k, k) * d.entries(k, k) - 1.0), 0.0, 1e-14);
}

TEST(Solve, MatchesGaussJordan42) {
    std::srand(11);
    CMatrix a = CMatrix::Random(42, 42) + 8.0 * CMatrix::Identity(42, 42);
    CMatrix rhs = CMatrix::Random(42, 21);
    const CMatrix x = solve(a, rhs);
    const CMatrix oracle = gauss_jordan_inverse(a) * rhs;
    EXPECT_LT((x - oracle).norm() / oracle.norm(), 1e-9);
    EXPECT_LT((a * x - rhs).norm() / rhs.norm(), 1e-10);
}

TEST(Solve, RoundTrip) {
    std::srand(5);
    CMatrix a = CMatrix::Random(21, 21);
    CMatrix x = CMatrix::Random(21, 3);
    ASSERT_LT(condition_estimate(a), 1e8);
    EXPECT_LT((solve(a, a * x) - x).norm() / x.norm(), 1e-9);
}

TEST(Solve, SingularReportsFrequency) {
    CMatrix a = CMatrix::Identity(4, 4);
    a(2, 2) = 0.0;
    try {
        solve(a, CMatrix::Identity(4, 4), cd(0, 123.0));
        FAIL();
    } catch (const SingularMatrixError& e) {
        EXPECT_EQ(e.frequency(), cd(0, 123.0));
    }
}
