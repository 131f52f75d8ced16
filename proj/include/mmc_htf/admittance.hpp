#pragma once

// Closed-loop admittance Y = (Z - C F)^-1 (C B + D), reported at the grid
// port in the load convention (current into the converter per volt), and
// its positive/negative sequence elements.

#include <vector>

#include "mmc_htf/control.hpp"
#include "mmc_htf/operating_point.hpp"
#include "mmc_htf/params.hpp"
#include "mmc_htf/plant.hpp"

namespace htf {

struct AssembleOptions {
    PlantOptions plant;
    /// Include the series grid impedance R_g + s L_g between the source and
    /// the converter terminal (the admittance is then seen from the source).
    bool include_grid_impedance = true;
};

struct GeneralModel {
    PlantMatrices plant;
    ControlMatrices control;
};

/// Plant and control matrices of `spec` at the evaluation frequency `s`.
GeneralModel build_general_model(const ModelSpec& spec, const OperatingPoint& op, cd s,
                                 const AssembleOptions& options = {});

/// Grid-current rows x source-voltage columns of the general model, load
/// convention. `z_grid` (3n x 3n, may be empty) is the series grid impedance.
CMatrix general_admittance(const GeneralModel& model, const CMatrix& z_grid, cd s);

struct AdmittanceResult {
    cd s;            // requested frequency (sequence 1)
    cd s_centre;     // frequency the harmonic window is centred on, s - j*w0
    CMatrix Y_full;  // 3n x 3n at s_centre
    cd y11, y12, y21, y22;
    double condition_estimate = 0.0;
    bool flagged = false;         // singular or non-finite
    bool offset_applied = false;  // moved off a multiple of f0 by a sweep
};

/// Sequence 1 is the positive sequence at s, sequence 2 the negative
/// sequence at s - 2j*w0. Singular points come back flagged with NaN
/// elements instead of throwing.
AdmittanceResult assemble(const ModelSpec& spec, const OperatingPoint& op, cd s,
                          const AssembleOptions& options = {});

/// Evaluates j*2*pi*f for each f in Hz; frequencies on a multiple of f0 are
/// moved up by 0.01 Hz. Output order follows the input.
std::vector<AdmittanceResult> sweep(const ModelSpec& spec, const OperatingPoint& op,
                                    const std::vector<double>& freq_hz, int workers = 1,
                                    const AssembleOptions& options = {});

/// max(|y11(s) - conj(y22(s'))|, |y12(s) - conj(y21(s'))|) / max|y| with the
/// mirror point s' = conj(s) + 2j*w0. NaN if either point is flagged.
double symmetry_residual(const ModelSpec& spec, const OperatingPoint& op, cd s,
                         const AssembleOptions& options = {});

double magnitude_db(cd y);
double phase_deg(cd y);

}  // namespace htf
