#include "mmc_htf/frames.hpp"

#include <cmath>
#include <vector>

namespace htf {

namespace {

constexpr int kAngleSamples = 512;

ParkHtf assemble_park(int h, int m, const std::array<HarmonicVector, 3>& cosines,
                      const std::array<HarmonicVector, 3>& sines) {
    const int n = 2 * h + 1;
    ParkHtf out{m, h, CMatrix::Zero(2 * n, 3 * n), CMatrix::Zero(3 * n, 2 * n)};
    for (int x = 0; x < 3; ++x) {
        const CMatrix tc = toeplitz_from_signal(cosines[x], h).entries;
        const CMatrix ts = toeplitz_from_signal(sines[x], h).entries;
        out.abc_to_dq.block(0, x * n, n, n) = (2.0 / 3.0) * tc;
        out.abc_to_dq.block(n, x * n, n, n) = (-2.0 / 3.0) * ts;
        out.dq_to_abc.block(x * n, 0, n, n) = tc;
        out.dq_to_abc.block(x * n, n, n, n) = -ts;
    }
    return out;
}

}  // namespace

ParkHtf build_park(int h, int angle_multiple, double theta0) {
    if (angle_multiple < 1) throw DimensionError("angle multiple must be >= 1");
    if (h < angle_multiple) throw DimensionError("harmonic order below angle multiple");
    std::array<HarmonicVector, 3> c, s;
    for (int x = 0; x < 3; ++x) {
        const double phase = angle_multiple * (theta0 - 2.0 * kPi * x / 3.0);
        c[x] = HarmonicVector::cosine(2 * h, 1.0, angle_multiple, 1.0, phase);
        s[x] = HarmonicVector::cosine(2 * h, 1.0, angle_multiple, 1.0, phase - kPi / 2.0);
    }
    return assemble_park(h, angle_multiple, c, s);
}

ParkHtf build_park(int h, int angle_multiple, const HarmonicVector& angle_offset) {
    if (angle_multiple < 1) throw DimensionError("angle multiple must be >= 1");
    if (h < angle_multiple) throw DimensionError("harmonic order below angle multiple");
    std::array<std::vector<double>, 3> cs, ss;
    for (int i = 0; i < kAngleSamples; ++i) {
        const double wt = 2.0 * kPi * i / kAngleSamples;
        double offset = 0.0;
        for (int k = -angle_offset.order(); k <= angle_offset.order(); ++k)
            offset += (angle_offset.get(k) * std::polar(1.0, k * wt)).real();
        for (int x = 0; x < 3; ++x) {
            const double a = angle_multiple * (wt + offset - 2.0 * kPi * x / 3.0);
            cs[x].push_back(std::cos(a));
            ss[x].push_back(std::sin(a));
        }
    }
    std::array<HarmonicVector, 3> c, s;
    for (int x = 0; x < 3; ++x) {
        c[x] = HarmonicVector::from_samples(cs[x], 2 * h, 1.0);
        s[x] = HarmonicVector::from_samples(ss[x], 2 * h, 1.0);
    }
    return assemble_park(h, angle_multiple, c, s);
}

SequenceBasis SequenceBasis::positive() {
    const cd a = std::polar(1.0, 2.0 * kPi / 3.0);
    return {{cd{1.0, 0.0}, a * a, a}};
}

SequenceBasis SequenceBasis::negative() {
    const cd a = std::polar(1.0, 2.0 * kPi / 3.0);
    return {{cd{1.0, 0.0}, a, a * a}};
}

cd project_sequence(const CVector& y_abc, int h, const SequenceBasis& basis, int shift) {
    const int n = 2 * h + 1;
    if (y_abc.size() != 3 * n) throw DimensionError("project_sequence: expected 3 phase stacks");
    if (shift < -h || shift > h) throw DimensionError("project_sequence: shift out of range");
    cd acc{0.0, 0.0};
    for (int x = 0; x < 3; ++x) acc += std::conj(basis.weights[x]) * y_abc(x * n + shift + h);
    return acc / 3.0;
}

cd project_sequence(std::span<const HarmonicVector, 3> y_abc, const SequenceBasis& basis,
                    int shift) {
    cd acc{0.0, 0.0};
    for (int x = 0; x < 3; ++x) acc += std::conj(basis.weights[x]) * y_abc[x].at(shift);
    return acc / 3.0;
}

CVector sequence_vector(int h, const SequenceBasis& basis, int shift) {
    const int n = 2 * h + 1;
    if (shift < -h || shift > h) throw DimensionError("sequence_vector: shift out of range");
    CVector v = CVector::Zero(3 * n);
    for (int x = 0; x < 3; ++x) v(x * n + shift + h) = basis.weights[x];
    return v;
}

}  // namespace htf
