#pragma once

// LTP images of the (amplitude-invariant) Park transform and the
// positive/negative sequence basis used to read sequence admittances out of
// a phase-domain harmonic admittance matrix.

#include <array>

#include "mmc_htf/harmonic.hpp"

namespace htf {

/// Park transform at angle multiple m: d-row (2/3)cos(m*theta_x),
/// q-row -(2/3)sin(m*theta_x), theta_x = theta - 2*pi*x/3.
struct ParkHtf {
    int angle_multiple = 1;
    int order = 0;
    CMatrix abc_to_dq;  // 2 x 3 blocks
    CMatrix dq_to_abc;  // 3 x 2 blocks, blockwise transpose without 2/3
};

/// Park matrices for theta(t) = w0*t + theta0.
ParkHtf build_park(int h, int angle_multiple, double theta0);

/// Park matrices for theta(t) = w0*t + offset(t), offset periodic in w0 and
/// given by its spectrum (used when the controller angle carries ripple).
ParkHtf build_park(int h, int angle_multiple, const HarmonicVector& angle_offset);

struct SequenceBasis {
    std::array<cd, 3> weights;
    static SequenceBasis positive();  // (1, a^2, a), a = e^{j2pi/3}
    static SequenceBasis negative();  // (1, a, a^2)
};

/// (1/3) sum_x conj(w_x) * y_x[shift] for a phase-stacked vector of three
/// harmonic vectors of order h.
cd project_sequence(const CVector& y_abc, int h, const SequenceBasis& basis, int shift);
cd project_sequence(std::span<const HarmonicVector, 3> y_abc, const SequenceBasis& basis,
                    int shift);

/// Phase-stacked vector with weight w_x at harmonic `shift` of every phase.
CVector sequence_vector(int h, const SequenceBasis& basis, int shift);

}  // namespace htf
