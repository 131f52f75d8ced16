#pragma once

// Plant matrices {Z, C, D} of Z*di = C*dm + D*du for the MMC (with constant or
// regulated DC voltage) and the two-level VSC.
//
// MMC unknowns: di = [di_c (3 phases); di_g (3 phases)], dm = [dm_u; dm_l]
// (3 phases each), du = terminal voltage (3 phases). 2L-VSC unknowns: di_g,
// dm = dm_1, du. i_g is the converter output current.

#include "mmc_htf/harmonic.hpp"
#include "mmc_htf/operating_point.hpp"
#include "mmc_htf/params.hpp"

namespace htf {

/// Linearization of the inductor and capacitor power terms in the DC power
/// balance. Exact is the linearization of d/dt(L i^2/2) + R i^2 and
/// d/dt(C u^2/2); Symmetrized uses the averaged operator products
/// (Z*X + X*Z)/2.
enum class PowerBalanceForm { Exact, Symmetrized };

struct PlantOptions {
    PowerBalanceForm power_balance = PowerBalanceForm::Exact;
    /// Drop the arm-capacitor dynamics (Z_Ceq = 0) and hold both arm
    /// capacitor voltages at the average U_dc.
    bool stiff_capacitors = false;
};

/// Sub-blocks the plant is assembled from (MMC builders only).
struct PlantParts {
    CMatrix Z_Larm;  // 6n x 6n
    CMatrix Z_Ceq;   // 6n x 6n
    CMatrix U_C;     // 6n x 6n, dm -> arm voltage terms
    CMatrix M_v;     // 6n x 6n, du_C -> arm voltage terms
    CMatrix M_i;     // 6n x 6n, di -> capacitor current
    CMatrix I_s;     // 6n x 6n, dm -> capacitor current
    CMatrix E_t;     // 6n x 3n
    CMatrix E_v;     // 6n x n, du_dc broadcast to circulating rows
    CMatrix K_vi;    // n x 6n
    CMatrix K_uc;    // n x 6n
    CMatrix K_ug;    // n x 3n
    bool dc_dynamics = false;
};

struct PlantMatrices {
    int order = 0;
    BlockMatrix Z;
    BlockMatrix C;
    BlockMatrix D;
    /// Row/column offset (in phase blocks) of the grid current inside di.
    int grid_block = 0;
    PlantParts parts;
};

PlantMatrices build_mmc_const_dc(const CircuitParams& params, const OperatingPoint& op, cd s,
                                 int h, const PlantOptions& options = {});

/// Requires op.I_dc != 0 (std::invalid_argument otherwise).
PlantMatrices build_mmc_dc_dynamics(const CircuitParams& params, const OperatingPoint& op,
                                    cd s, int h, const PlantOptions& options = {});

PlantMatrices build_2lvsc(const CircuitParams& params, const OperatingPoint& op, cd s, int h);

}  // namespace htf
