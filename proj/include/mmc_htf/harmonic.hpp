#pragma once

// Harmonic-domain linear algebra for linear time-periodic (LTP) models.
//
// Index convention: a harmonic vector of order h stores 2h+1 coefficients
// ordered k = -h..+h, where entry k belongs to frequency s + j*k*w0. Matrix
// rows and columns follow the same ordering, so position (r, c) of an HTF
// block couples input harmonic c to output harmonic r.

#include <complex>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace htf {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kPi = 3.14159265358979323846;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A transfer function evaluated on a pole (non-finite value) at harmonic k.
class SingularityError : public std::runtime_error {
public:
    SingularityError(const std::string& what, int harmonic)
        : std::runtime_error(what), harmonic_(harmonic) {}
    int harmonic() const noexcept { return harmonic_; }

private:
    int harmonic_;
};

/// Dense solve failed the relative pivot test.
class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(const std::string& what, cd s)
        : std::runtime_error(what), s_(s) {}
    cd frequency() const noexcept { return s_; }

private:
    cd s_;
};

class HarmonicVector {
public:
    HarmonicVector() = default;
    HarmonicVector(int order, double base_freq);
    /// `real_signal` asserts coeffs[k] == conj(coeffs[-k]) within `tol`
    /// relative to the largest coefficient.
    HarmonicVector(CVector coeffs, double base_freq, bool real_signal = false,
                   double tol = 1e-10);

    /// Fourier coefficients of one uniformly sampled period.
    static HarmonicVector from_samples(std::span<const double> samples, int order,
                                       double base_freq);
    /// A real sinusoid amplitude*cos(multiple*w0*t + phase).
    static HarmonicVector cosine(int order, double base_freq, int multiple,
                                 double amplitude = 1.0, double phase = 0.0);
    static HarmonicVector constant(int order, double base_freq, double value);

    int order() const noexcept { return order_; }
    int size() const noexcept { return 2 * order_ + 1; }
    double base_freq() const noexcept { return base_freq_; }
    const CVector& coeffs() const noexcept { return coeffs_; }

    /// Coefficient at harmonic k; throws DimensionError when |k| > order.
    cd at(int k) const;
    /// Coefficient at harmonic k, zero outside the stored range.
    cd get(int k) const noexcept;
    void set(int k, cd value);

    /// Largest |c[k] - conj(c[-k])| relative to the largest coefficient.
    double conjugate_asymmetry() const;

    /// Re-sized copy: truncates or zero-pads to the new order.
    HarmonicVector resized(int order) const;
    /// Time-domain value at t (sum over stored harmonics, w.r.t. w0 only).
    cd evaluate(double t) const;

    HarmonicVector& operator+=(const HarmonicVector& other);
    HarmonicVector& operator*=(double factor);

private:
    int order_ = 0;
    double base_freq_ = 0.0;
    CVector coeffs_ = CVector::Zero(1);
};

HarmonicVector operator+(HarmonicVector a, const HarmonicVector& b);
HarmonicVector operator*(double f, HarmonicVector a);

enum class BlockKind { ToeplitzOfSignal, ShiftedDiagonal, Dense };

/// (2h+1) x (2h+1) complex HTF operator.
struct HtfBlock {
    int order = 0;
    CMatrix entries;
    BlockKind kind = BlockKind::Dense;

    int size() const noexcept { return 2 * order + 1; }
};

/// M[r][c] = sig[r - c]; sig needs coefficients up to order 2h, missing
/// orders are treated as zero.
HtfBlock toeplitz_from_signal(const HarmonicVector& sig, int h);

using TransferFunction = std::function<cd(cd)>;

/// diag(H(s + j*k*w0)), k = -h..h. Throws SingularityError on a non-finite
/// entry, naming the harmonic.
HtfBlock shifted_diagonal(const TransferFunction& tf, cd s, double w0, int h);

/// Grid of equally sized HTF blocks stored densely.
class BlockMatrix {
public:
    BlockMatrix() = default;
    BlockMatrix(int row_blocks, int col_blocks, int order);
    BlockMatrix(CMatrix dense, int order);

    int row_blocks() const noexcept { return row_blocks_; }
    int col_blocks() const noexcept { return col_blocks_; }
    int order() const noexcept { return order_; }
    int block_size() const noexcept { return 2 * order_ + 1; }

    const CMatrix& dense() const noexcept { return dense_; }
    CMatrix& dense() noexcept { return dense_; }

    CMatrix block(int r, int c) const;
    void set_block(int r, int c, const CMatrix& value);
    void set_block(int r, int c, const HtfBlock& value) { set_block(r, c, value.entries); }

private:
    int row_blocks_ = 0;
    int col_blocks_ = 0;
    int order_ = 0;
    CMatrix dense_;
};

/// Block-diagonal matrix with `count` copies of `block`.
CMatrix repeat_diagonal(const CMatrix& block, int count);
/// Block-diagonal matrix from a list of blocks.
CMatrix block_diagonal(std::span<const CMatrix> blocks);

inline constexpr double kPivotTolerance = 1e-14;

/// Partial-pivoted dense solve of A X = rhs. Throws SingularMatrixError when
/// the smallest pivot falls below kPivotTolerance * max|A|; `s` is reported
/// as context.
CMatrix solve(const CMatrix& a, const CMatrix& rhs, cd s = cd{0.0, 0.0});

/// Rough 1-norm condition estimate from the LU factors.
double condition_estimate(const CMatrix& a);

}  // namespace htf
