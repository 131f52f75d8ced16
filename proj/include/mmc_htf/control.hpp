#pragma once

// Control matrices {F, B} of dm = F*di + B*du for every supported control
// structure. Each builder linearizes the same controller equations the
// time-domain simulator integrates, around the operating point's periodic
// trajectory (angle ripple included).

#include "mmc_htf/frames.hpp"
#include "mmc_htf/harmonic.hpp"
#include "mmc_htf/operating_point.hpp"
#include "mmc_htf/params.hpp"
#include "mmc_htf/plant.hpp"

namespace htf {

/// Phase-domain control chains (all 3n x 3n unless noted):
///   dm_1 = T_gi di_g + T_gu du + T_gv du_dc
///   dm_2 = T_cic di_c + T_cig di_g + T_cu du + T_cv du_dc
/// T_gv, T_cv are 3n x n and zero outside DC-voltage control.
struct ControlChains {
    CMatrix T_gi, T_gu, T_gv;
    CMatrix T_cic, T_cig, T_cu, T_cv;
};

struct ControlMatrices {
    int order = 0;
    BlockMatrix F;
    BlockMatrix B;
    ControlChains chains;
};

/// PLL angle response to the terminal q-axis voltage (volts):
/// dtheta = T_pll * dU_q with T_pll = (I + H*U_d/U_b)^-1 * H / U_b,
/// H = diag((k_p + k_i/s)/s) at s + j*k*w0.
HtfBlock build_pll(const CircuitParams& circuit, const ControlParams& control,
                   const OperatingPoint& op, cd s, int h);

/// dP and dQ sensitivities used by the power loops: [dP; dQ] = U_PQ0 di_dq +
/// I_PQ0 du_dq with U_PQ0 = 1.5[U_d, U_q; U_q, -U_d] and
/// I_PQ0 = 1.5[I_d, I_q; -I_q, I_d] (Toeplitz blocks).
struct PowerSensitivity {
    CMatrix U_PQ0;
    CMatrix I_PQ0;
};
PowerSensitivity power_sensitivity(const OperatingPoint& op, int h);

/// Grid-forming: swing equation, Q-V droop, voltage and current PI, CCSC.
/// `outer_loops = false` gives constant V/f control.
ControlMatrices build_gfm(const CircuitParams& circuit, const ControlParams& control,
                          const OperatingPoint& op, cd s, int h, bool outer_loops = true);

/// Grid-following PQ control with PLL; `power_loop = false` gives constant
/// current control.
ControlMatrices build_gfl_pq(const CircuitParams& circuit, const ControlParams& control,
                             const OperatingPoint& op, cd s, int h, bool power_loop = true);

/// Grid-following DC-voltage control. `plant` must come from
/// build_mmc_dc_dynamics at the same s; its K matrices close the DC-voltage
/// path through the arm capacitor model.
ControlMatrices build_gfl_dc(const CircuitParams& circuit, const ControlParams& control,
                             const OperatingPoint& op, const PlantMatrices& plant, cd s, int h);

/// 2L-VSC (fundamental loop only, F is 3n x 3n): GFM, ConstVf, GFL_PQ or
/// ConstCurrent.
ControlMatrices build_2lvsc_control(const CircuitParams& circuit, const ControlParams& control,
                                    const OperatingPoint& op, cd s, int h, ControlMode mode);

/// Modulation frozen at the operating point.
ControlMatrices build_open_loop(Converter converter, int h);

/// MMC arm split dm_u = (-dm_1 - dm_2)/2, dm_l = (dm_1 - dm_2)/2 applied to
/// the chains (F is 6n x 6n, B is 6n x 3n).
ControlMatrices assemble_mmc_control(const ControlChains& chains, int h);

}  // namespace htf
