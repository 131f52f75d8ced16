#include "mmc_htf/operating_point.hpp"

#include <algorithm>
#include <string>

namespace htf {

namespace {

PhaseSpectra combine(const PhaseSpectra& a, const PhaseSpectra& b, double fb) {
    PhaseSpectra out;
    for (int x = 0; x < 3; ++x) out[x] = a[x] + fb * b[x];
    return out;
}

template <class F>
void for_each_spectrum(const OperatingPoint& op, F&& f) {
    for (const auto* set : {&op.m_u, &op.m_l, &op.u_cu, &op.u_cl, &op.i_c, &op.i_g, &op.u_g})
        for (const auto& v : *set) f(v);
    for (const auto* v : {&op.u_d, &op.u_q, &op.i_d, &op.i_q, &op.m1_d, &op.m1_q, &op.i_cd,
                          &op.i_cq, &op.m2_d, &op.m2_q, &op.theta_offset, &op.u_dc})
        f(*v);
}

}  // namespace

PhaseSpectra OperatingPoint::i_u() const { return combine(i_c, i_g, 0.5); }
PhaseSpectra OperatingPoint::i_l() const { return combine(i_c, i_g, -0.5); }

double OperatingPoint::max_conjugate_asymmetry() const {
    double worst = 0.0;
    for_each_spectrum(*this, [&](const HarmonicVector& v) {
        worst = std::max(worst, v.conjugate_asymmetry());
    });
    return worst;
}

void OperatingPoint::validate(int h) const {
    if (order < 2 * h)
        throw DimensionError("operating point stores order " + std::to_string(order) +
                             ", model needs " + std::to_string(2 * h));
    if (!(w0 > 0.0)) throw std::invalid_argument("operating point w0 must be positive");
    const double asym = max_conjugate_asymmetry();
    if (asym > 1e-8)
        throw std::invalid_argument("operating point spectrum is not real (asymmetry " +
                                    std::to_string(asym) + ")");
}

}  // namespace htf
