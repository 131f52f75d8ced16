#include "mmc_htf/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace htf {

HarmonicVector::HarmonicVector(int order, double base_freq)
    : order_(order), base_freq_(base_freq), coeffs_(CVector::Zero(2 * order + 1)) {
    if (order < 0) throw DimensionError("harmonic order must be nonnegative");
}

HarmonicVector::HarmonicVector(CVector coeffs, double base_freq, bool real_signal, double tol)
    : base_freq_(base_freq), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() % 2 == 0)
        throw DimensionError("harmonic vector length must be odd (2h+1)");
    order_ = static_cast<int>(coeffs_.size() / 2);
    if (real_signal && conjugate_asymmetry() > tol)
        throw std::invalid_argument("coefficients are not conjugate-symmetric");
}

HarmonicVector HarmonicVector::from_samples(std::span<const double> samples, int order,
                                            double base_freq) {
    const auto n = static_cast<double>(samples.size());
    if (samples.empty()) throw DimensionError("no samples");
    HarmonicVector out(order, base_freq);
    for (int k = -order; k <= order; ++k) {
        cd acc{0.0, 0.0};
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const double ang = -2.0 * kPi * k * static_cast<double>(i) / n;
            acc += samples[i] * cd{std::cos(ang), std::sin(ang)};
        }
        out.set(k, acc / n);
    }
    return out;
}

HarmonicVector HarmonicVector::cosine(int order, double base_freq, int multiple,
                                      double amplitude, double phase) {
    HarmonicVector out(order, base_freq);
    if (multiple == 0) {
        out.set(0, amplitude * std::cos(phase));
        return out;
    }
    const cd half = 0.5 * amplitude * std::polar(1.0, phase);
    out.set(multiple, out.get(multiple) + half);
    out.set(-multiple, out.get(-multiple) + std::conj(half));
    return out;
}

HarmonicVector HarmonicVector::constant(int order, double base_freq, double value) {
    HarmonicVector out(order, base_freq);
    out.set(0, value);
    return out;
}

cd HarmonicVector::at(int k) const {
    if (k < -order_ || k > order_) {
        std::ostringstream os;
        os << "harmonic " << k << " outside stored order " << order_;
        throw DimensionError(os.str());
    }
    return coeffs_(k + order_);
}

cd HarmonicVector::get(int k) const noexcept {
    if (k < -order_ || k > order_) return {0.0, 0.0};
    return coeffs_(k + order_);
}

void HarmonicVector::set(int k, cd value) {
    if (k < -order_ || k > order_) throw DimensionError("harmonic index out of range");
    coeffs_(k + order_) = value;
}

double HarmonicVector::conjugate_asymmetry() const {
    const double scale = std::max(coeffs_.cwiseAbs().maxCoeff(), 1e-300);
    double worst = 0.0;
    for (int k = 0; k <= order_; ++k)
        worst = std::max(worst, std::abs(get(k) - std::conj(get(-k))));
    return worst / scale;
}

HarmonicVector HarmonicVector::resized(int order) const {
    HarmonicVector out(order, base_freq_);
    for (int k = -std::min(order, order_); k <= std::min(order, order_); ++k) out.set(k, get(k));
    return out;
}

cd HarmonicVector::evaluate(double t) const {
    cd acc{0.0, 0.0};
    for (int k = -order_; k <= order_; ++k) acc += get(k) * std::polar(1.0, k * base_freq_ * t);
    return acc;
}

HarmonicVector& HarmonicVector::operator+=(const HarmonicVector& other) {
    if (other.order_ > order_) *this = resized(other.order_);
    for (int k = -other.order_; k <= other.order_; ++k) set(k, get(k) + other.get(k));
    return *this;
}

HarmonicVector& HarmonicVector::operator*=(double factor) {
    coeffs_ *= factor;
    return *this;
}

HarmonicVector operator+(HarmonicVector a, const HarmonicVector& b) { return a += b; }
HarmonicVector operator*(double f, HarmonicVector a) { return a *= f; }

HtfBlock toeplitz_from_signal(const HarmonicVector& sig, int h) {
    if (h < 0) throw DimensionError("negative harmonic order");
    const int n = 2 * h + 1;
    HtfBlock out{h, CMatrix::Zero(n, n), BlockKind::ToeplitzOfSignal};
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) out.entries(r, c) = sig.get(r - c);
    return out;
}

HtfBlock shifted_diagonal(const TransferFunction& tf, cd s, double w0, int h) {
    if (h < 0) throw DimensionError("negative harmonic order");
    const int n = 2 * h + 1;
    HtfBlock out{h, CMatrix::Zero(n, n), BlockKind::ShiftedDiagonal};
    for (int k = -h; k <= h; ++k) {
        const cd v = tf(s + cd{0.0, k * w0});
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            std::ostringstream os;
            os << "transfer function singular at harmonic k=" << k << " (s + jk*w0 = "
               << (s + cd{0.0, k * w0}) << ")";
            throw SingularityError(os.str(), k);
        }
        out.entries(k + h, k + h) = v;
    }
    return out;
}

BlockMatrix::BlockMatrix(int row_blocks, int col_blocks, int order)
    : row_blocks_(row_blocks), col_blocks_(col_blocks), order_(order),
      dense_(CMatrix::Zero(row_blocks * (2 * order + 1), col_blocks * (2 * order + 1))) {
    if (row_blocks <= 0 || col_blocks <= 0) throw DimensionError("block counts must be positive");
}

BlockMatrix::BlockMatrix(CMatrix dense, int order) : order_(order), dense_(std::move(dense)) {
    const int n = 2 * order + 1;
    if (dense_.rows() % n != 0 || dense_.cols() % n != 0)
        throw DimensionError("dense size is not a multiple of the block size");
    row_blocks_ = static_cast<int>(dense_.rows() / n);
    col_blocks_ = static_cast<int>(dense_.cols() / n);
}

CMatrix BlockMatrix::block(int r, int c) const {
    const int n = block_size();
    if (r < 0 || r >= row_blocks_ || c < 0 || c >= col_blocks_)
        throw DimensionError("block index out of range");
    return dense_.block(r * n, c * n, n, n);
}

void BlockMatrix::set_block(int r, int c, const CMatrix& value) {
    const int n = block_size();
    if (r < 0 || r >= row_blocks_ || c < 0 || c >= col_blocks_)
        throw DimensionError("block index out of range");
    if (value.rows() != n || value.cols() != n) throw DimensionError("block order mismatch");
    dense_.block(r * n, c * n, n, n) = value;
}

CMatrix repeat_diagonal(const CMatrix& block, int count) {
    const auto r = block.rows(), c = block.cols();
    CMatrix out = CMatrix::Zero(r * count, c * count);
    for (int i = 0; i < count; ++i) out.block(i * r, i * c, r, c) = block;
    return out;
}

CMatrix block_diagonal(std::span<const CMatrix> blocks) {
    Eigen::Index rows = 0, cols = 0;
    for (const auto& b : blocks) {
        rows += b.rows();
        cols += b.cols();
    }
    CMatrix out = CMatrix::Zero(rows, cols);
    Eigen::Index r = 0, c = 0;
    for (const auto& b : blocks) {
        out.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    return out;
}

CMatrix solve(const CMatrix& a, const CMatrix& rhs, cd s) {
    if (a.rows() != a.cols()) throw DimensionError("solve: matrix is not square");
    if (a.rows() != rhs.rows()) throw DimensionError("solve: rhs row count mismatch");
    if (!a.allFinite()) throw SingularMatrixError("solve: non-finite matrix entries", s);
    const Eigen::PartialPivLU<CMatrix> lu(a);
    const double scale = a.cwiseAbs().maxCoeff();
    const double pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (scale == 0.0 || pivot < kPivotTolerance * scale) {
        std::ostringstream os;
        os << "solve: numerically singular matrix at s = " << s << " (min pivot " << pivot
           << ", max entry " << scale << ")";
        throw SingularMatrixError(os.str(), s);
    }
    return lu.solve(rhs);
}

double condition_estimate(const CMatrix& a) {
    const Eigen::PartialPivLU<CMatrix> lu(a);
    const double rc = lu.rcond();
    return rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
}

}  // namespace htf
