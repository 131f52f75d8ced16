#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace htf {

/// Grid-connected converter circuit, SI units.
struct CircuitParams {
    double S_rating = 220e6;   // VA
    double U_dc = 135e3;       // V
    double U_g_ll_rms = 66e3;  // V
    double w0 = 100.0 * 3.14159265358979323846;
    int N = 50;
    double L_arm = 16.37e-3;
    double R_arm = 0.03;
    double C_m = 10.48e-3;
    double R_g = 0.0;
    double L_g = 0.0;
    /// 2L-VSC filter; defaults to the AC-side equivalent of the paralleled arms.
    std::optional<double> L_2l;
    std::optional<double> R_2l;

    double C_eq() const { return C_m / N; }
    double L_filter() const { return L_2l.value_or(L_arm / 2.0); }
    double R_filter() const { return R_2l.value_or(R_arm / 2.0); }

    /// Throws std::invalid_argument on non-physical values.
    void validate() const;
};

/// Per-unit bases derived from the circuit rating.
struct PerUnitBases {
    double S = 0.0;     // VA
    double U = 0.0;     // V, peak phase
    double I = 0.0;     // A, peak
    double Z = 0.0;     // ohm
    double U_dc = 0.0;  // V

    static PerUnitBases from(const CircuitParams& c);
};

/// Controller gains in per unit.
struct ControlParams {
    struct GridForming {
        double H = 1.0;
        double D = 100.0;
        double D_v = 0.1;
        double T_v = 0.01;
        double k_pv = 0.2;
        double k_iv = 26.0;
    } gfm;
    struct Pll {
        double k_p = 1800.0;
        double k_i = 3200.0;
    } pll;
    struct DcVoltage {
        double k_pd = 4.0;
        double k_id = 75.0;
    } dc;
    struct Power {
        double k_pp = 0.2;
        double k_ip = 15.0;
    } pq;
    struct Inner {
        double k_pi = 2.0;
        double k_ii = 100.0;
        std::optional<double> K_i;  // cross-decoupling, p.u.
    } inner;
    struct Ccsc {
        double k_pic = 1.0;
        double k_iic = 5.0;
        std::optional<double> K_c;
    } ccsc;

    /// Decoupling gain default w0*L_eq/Z_base.
    double K_i(const CircuitParams& c, bool mmc) const;
    double K_c(const CircuitParams& c) const;

    void validate() const;
};

enum class Converter { MMC, VSC2L };
enum class ControlMode { OpenLoop, GFM, GFL_PQ, GFL_DC, ConstCurrent, ConstVf };

std::string_view to_string(Converter c);
std::string_view to_string(ControlMode m);
Converter converter_from_string(std::string_view s);
ControlMode control_from_string(std::string_view s);

/// Steady-state targets of the closed-loop (or open-loop) operating point.
struct Setpoints {
    double P_ref_pu = 0.4;
    double Q_ref_pu = 0.0;
    double U_set_pu = 1.0;
    /// Open-loop fundamental modulation in the grid frame.
    double m_d = 0.8;
    double m_q = 0.04;
    /// GFL-DC: DC-source current; derived from P_ref when empty.
    std::optional<double> I_dc;
};

struct ModelSpec {
    Converter converter = Converter::MMC;
    ControlMode control = ControlMode::OpenLoop;
    int h = 3;
    CircuitParams circuit;
    ControlParams control_params;
    Setpoints setpoints;

    /// Checks the converter/control pairing (GFL_DC needs the MMC) and parameter sanity.
    void validate() const;
};

}  // namespace htf
