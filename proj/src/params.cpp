#include "mmc_htf/params.hpp"

#include <cmath>
#include <stdexcept>

namespace htf {

void CircuitParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument(std::string(name) + " must be positive");
    };
    positive(S_rating, "S_rating");
    positive(U_dc, "U_dc");
    positive(U_g_ll_rms, "U_g_ll_rms");
    positive(w0, "w0");
    positive(L_arm, "L_arm");
    positive(R_arm, "R_arm");
    positive(C_m, "C_m");
    if (N <= 0) throw std::invalid_argument("N must be positive");
    if (R_g < 0.0 || L_g < 0.0) throw std::invalid_argument("R_g, L_g must be nonnegative");
    if (L_2l) positive(*L_2l, "L_2l");
    if (R_2l && *R_2l < 0.0) throw std::invalid_argument("R_2l must be nonnegative");
}

PerUnitBases PerUnitBases::from(const CircuitParams& c) {
    PerUnitBases b;
    b.S = c.S_rating;
    b.U = std::sqrt(2.0 / 3.0) * c.U_g_ll_rms;
    b.I = 2.0 * b.S / (3.0 * b.U);
    b.Z = b.U / b.I;
    b.U_dc = c.U_dc;
    return b;
}

double ControlParams::K_i(const CircuitParams& c, bool mmc) const {
    if (inner.K_i) return *inner.K_i;
    const double l_eq = mmc ? c.L_arm / 2.0 : c.L_filter();
    return c.w0 * l_eq / PerUnitBases::from(c).Z;
}

double ControlParams::K_c(const CircuitParams& c) const {
    if (ccsc.K_c) return *ccsc.K_c;
    return 2.0 * c.w0 * c.L_arm / PerUnitBases::from(c).Z;
}

void ControlParams::validate() const {
    const double gains[] = {gfm.H,   gfm.D,   gfm.D_v,   gfm.T_v,      gfm.k_pv,    gfm.k_iv,
                            pll.k_p, pll.k_i, dc.k_pd,   dc.k_id,      pq.k_pp,     pq.k_ip,
                            inner.k_pi, inner.k_ii, ccsc.k_pic, ccsc.k_iic};
    for (double g : gains)
        if (!(g >= 0.0) || !std::isfinite(g)) throw std::invalid_argument("gains must be >= 0");
}

std::string_view to_string(Converter c) {
    switch (c) {
        case Converter::MMC: return "MMC";
        case Converter::VSC2L: return "VSC2L";
    }
    return "?";
}

std::string_view to_string(ControlMode m) {
    switch (m) {
        case ControlMode::OpenLoop: return "OpenLoop";
        case ControlMode::GFM: return "GFM";
        case ControlMode::GFL_PQ: return "GFL_PQ";
        case ControlMode::GFL_DC: return "GFL_DC";
        case ControlMode::ConstCurrent: return "ConstCurrent";
        case ControlMode::ConstVf: return "ConstVf";
    }
    return "?";
}

Converter converter_from_string(std::string_view s) {
    if (s == "MMC") return Converter::MMC;
    if (s == "VSC2L") return Converter::VSC2L;
    throw std::invalid_argument("unknown converter '" + std::string(s) + "'");
}

ControlMode control_from_string(std::string_view s) {
    for (auto m : {ControlMode::OpenLoop, ControlMode::GFM, ControlMode::GFL_PQ,
                   ControlMode::GFL_DC, ControlMode::ConstCurrent, ControlMode::ConstVf})
        if (to_string(m) == s) return m;
    throw std::invalid_argument("unknown control mode '" + std::string(s) + "'");
}

void ModelSpec::validate() const {
    if (h < 2) throw std::invalid_argument("harmonic order h must be >= 2");
    if (control == ControlMode::GFL_DC && converter != Converter::MMC)
        throw std::invalid_argument("GFL_DC is only defined for the MMC");
    circuit.validate();
    control_params.validate();
}

}  // namespace htf
