#pragma once

// Periodic steady state around which the converter is linearized. Every
// member is a spectrum of a real periodic signal; phase quantities are
// stored per phase a, b, c.

#include <array>

#include "mmc_htf/harmonic.hpp"
#include "mmc_htf/params.hpp"

namespace htf {

using PhaseSpectra = std::array<HarmonicVector, 3>;

struct OperatingPoint {
    Converter converter = Converter::MMC;
    ControlMode control = ControlMode::OpenLoop;
    int order = 0;     // stored harmonic order, at least 2h of the model
    double w0 = 0.0;

    // Arm modulation, arm capacitor voltages, circulating and grid currents,
    // terminal (PCC) voltage.
    PhaseSpectra m_u, m_l, u_cu, u_cl, i_c, i_g, u_g;

    // Fundamental-frame quantities in the controller frame.
    HarmonicVector u_d, u_q, i_d, i_q, m1_d, m1_q;
    // Double-frequency frame (circulating current control).
    HarmonicVector i_cd, i_cq, m2_d, m2_q;
    // Controller angle minus w0*t.
    HarmonicVector theta_offset;

    HarmonicVector u_dc;
    double U_dc = 0.0;  // average DC bus voltage
    double I_dc = 0.0;  // DC source current (positive into the converter)

    /// Arm currents i_c +/- i_g/2.
    PhaseSpectra i_u() const;
    PhaseSpectra i_l() const;

    /// Largest relative conjugate asymmetry over all stored spectra.
    double max_conjugate_asymmetry() const;

    /// Throws DimensionError if the stored order cannot support harmonic
    /// order h, std::invalid_argument if a spectrum is not real (tol 1e-8).
    void validate(int h) const;
};

}  // namespace htf
