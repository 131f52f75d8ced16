#include <cmath>
#include <complex>
#include <sstream>

#include "mmc_htf/emt_sim.hpp"

namespace htf {

namespace {

constexpr double kTwoThirdsPi = 2.0 * kPi / 3.0;

struct Phasors {
    cd u_pcc, i, e;    // peak phasors in the grid frame
    double theta = 0;  // controller angle at t = 0
    double q = 0;      // reactive power, W
};

bool mmc(const ModelSpec& s) { return s.converter == Converter::MMC; }

cd series_impedance(const ModelSpec& spec) {
    const auto& c = spec.circuit;
    const double l = mmc(spec) ? c.L_arm / 2.0 : c.L_filter();
    const double r = mmc(spec) ? c.R_arm / 2.0 : c.R_filter();
    return {r, c.w0 * l};
}

// Terminal voltage for given complex power (S = 1.5 U conj(I)) behind R_g.
cd terminal_for_power(cd us, double rg, cd s_out) {
    cd up = us;
    for (int it = 0; it < 200; ++it) {
        const cd i = std::conj(s_out / (1.5 * up));
        const cd next = us + rg * i;
        if (std::abs(next - up) < 1e-12 * std::abs(us)) return next;
        up = next;
    }
    return up;
}

Phasors steady_phasors(const ModelSpec& spec, const PerUnitBases& b, double i_dc) {
    const auto& c = spec.circuit;
    const auto& sp = spec.setpoints;
    const cd us(b.U, 0.0);
    const cd zeq = series_impedance(spec);
    Phasors ph;
    switch (spec.control) {
        case ControlMode::OpenLoop: {
            ph.e = cd(sp.m_d, sp.m_q) * c.U_dc / 2.0;
            ph.i = (ph.e - us) / (zeq + c.R_g);
            ph.u_pcc = us + c.R_g * ph.i;
            ph.theta = 0.0;
            break;
        }
        case ControlMode::GFM:
        case ControlMode::ConstVf: {
            const double p = sp.P_ref_pu * b.S;
            const double dv = spec.control == ControlMode::GFM ? spec.control_params.gfm.D_v : 0.0;
            // Q such that |U_pcc| meets the droop characteristic.
            auto mismatch = [&](double q) {
                const cd up = terminal_for_power(us, c.R_g, cd(p, q));
                return std::abs(up) / b.U - (sp.U_set_pu - dv * (q / b.S - sp.Q_ref_pu));
            };
            double lo = -2.0 * b.S, hi = 2.0 * b.S;
            double flo = mismatch(lo);
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = mismatch(mid);
                if ((fm < 0) == (flo < 0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            ph.q = 0.5 * (lo + hi);
            ph.u_pcc = terminal_for_power(us, c.R_g, cd(p, ph.q));
            ph.i = std::conj(cd(p, ph.q) / (1.5 * ph.u_pcc));
            ph.theta = std::arg(ph.u_pcc);
            break;
        }
        case ControlMode::GFL_PQ:
        case ControlMode::ConstCurrent:
        case ControlMode::GFL_DC: {
            double p = sp.P_ref_pu * b.S;
            if (spec.control == ControlMode::GFL_DC) p = i_dc * c.U_dc;
            ph.q = sp.Q_ref_pu * b.S;
            ph.u_pcc = terminal_for_power(us, c.R_g, cd(p, ph.q));
            ph.i = std::conj(cd(p, ph.q) / (1.5 * ph.u_pcc));
            ph.theta = std::arg(ph.u_pcc);
            break;
        }
    }
    ph.e = ph.u_pcc + zeq * ph.i;
    return ph;
}

}  // namespace

AverageModel::AverageModel(const ModelSpec& spec, const SimOptions& options)
    : spec_(spec), options_(options), base_(PerUnitBases::from(spec.circuit)) {
    spec_.validate();
    if (spec_.circuit.L_g != 0.0)
        throw std::invalid_argument("the time-domain model does not support L_g > 0");
    if (!(options_.dt > 0.0) || options_.dt > 50e-6)
        throw std::invalid_argument("time step must be in (0, 50 us]");
    const double ratio = period() / options_.dt;
    steps_per_period_ = static_cast<int>(std::lround(ratio));
    if (std::abs(ratio - steps_per_period_) > 1e-6)
        throw std::invalid_argument("time step must divide the fundamental period");

    const auto& c = spec_.circuit;
    const auto& k = spec_.control_params;
    const ControlMode mode = spec_.control;
    k_i_ = k.K_i(c, mmc(spec_));
    k_c_ = k.K_c(c);
    i_dc_ = spec_.setpoints.I_dc.value_or(spec_.setpoints.P_ref_pu * base_.S / c.U_dc);

    int n = 0;
    auto take = [&](int count, double sc) {
        const int at = n;
        n += count;
        scale_.insert(scale_.end(), count, sc);
        return at;
    };
    if (mmc(spec_)) {
        i_c_ = take(3, base_.I);
        i_g_ = take(3, base_.I);
        u_cu_ = take(3, c.U_dc);
        u_cl_ = take(3, c.U_dc);
        if (mode == ControlMode::GFL_DC) u_dc_ = take(1, c.U_dc);
    } else {
        i_g_ = take(3, base_.I);
    }
    switch (mode) {
        case ControlMode::OpenLoop: break;
        case ControlMode::GFM:
            angle_ = take(1, kPi);
            angle_aux_ = take(1, 1.0);
            droop_ = take(1, 1.0);
            vpi_ = take(2, 1.0);
            break;
        case ControlMode::ConstVf: vpi_ = take(2, 1.0); break;
        case ControlMode::GFL_PQ:
            angle_ = take(1, kPi);
            angle_aux_ = take(1, 1.0);
            ppi_ = take(2, 1.0);
            break;
        case ControlMode::ConstCurrent:
            angle_ = take(1, kPi);
            angle_aux_ = take(1, 1.0);
            break;
        case ControlMode::GFL_DC:
            angle_ = take(1, kPi);
            angle_aux_ = take(1, 1.0);
            dcpi_ = take(1, 1.0);
            break;
    }
    if (mode != ControlMode::OpenLoop) {
        ipi_ = take(2, 1.0);
        if (mmc(spec_)) cpi_ = take(2, 1.0);
    }
    size_ = n;

    const Phasors ph = steady_phasors(spec_, base_, i_dc_);
    const cd idq = ph.i * std::polar(1.0, -ph.theta);
    delta_fixed_ = ph.theta;
    i_dref0_ = idq.real();
    i_qref0_ = idq.imag();
}

std::vector<double> AverageModel::initial_state() const {
    const auto& c = spec_.circuit;
    const auto& k = spec_.control_params;
    const double src = options_.source_scale;
    std::vector<double> x(size_, 0.0);
    const Phasors ph = steady_phasors(spec_, base_, i_dc_);
    const cd rot = std::polar(1.0, -ph.theta);
    const cd idq = ph.i * rot;
    const cd edq = ph.e * rot;
    for (int p = 0; p < 3; ++p) {
        const cd w = std::polar(1.0, -kTwoThirdsPi * p);
        x[i_g_ + p] = src * (ph.i * w).real();
        if (mmc(spec_)) {
            const double p_out = 1.5 * (ph.u_pcc * std::conj(ph.i)).real();
            x[i_c_ + p] = src * p_out / (3.0 * c.U_dc);
            x[u_cu_ + p] = src * c.U_dc;
            x[u_cl_ + p] = src * c.U_dc;
        }
    }
    if (u_dc_ >= 0) x[u_dc_] = src * c.U_dc;
    if (src == 0.0) return x;
    auto safe = [](double num, double den) { return den != 0.0 ? num / den : 0.0; };
    if (angle_ >= 0) x[angle_] = ph.theta;
    if (droop_ >= 0) x[droop_] = ph.q / base_.S - spec_.setpoints.Q_ref_pu;
    if (vpi_ >= 0) {
        x[vpi_] = safe(idq.real(), base_.I * k.gfm.k_iv);
        x[vpi_ + 1] = safe(idq.imag(), base_.I * k.gfm.k_iv);
    }
    if (ppi_ >= 0) {
        x[ppi_] = safe(idq.real(), base_.I * k.pq.k_ip);
        x[ppi_ + 1] = safe(-idq.imag(), base_.I * k.pq.k_ip);
    }
    if (dcpi_ >= 0) x[dcpi_] = safe(idq.real(), base_.I * k.dc.k_id);
    if (ipi_ >= 0) {
        x[ipi_] = safe(edq.real(), base_.U * k.inner.k_ii);
        x[ipi_ + 1] = safe(edq.imag(), base_.U * k.inner.k_ii);
    }
    return x;
}

void AverageModel::evaluate(double t, const double* x, double* dx, Signals* sig) const {
    const auto& c = spec_.circuit;
    const auto& k = spec_.control_params;
    const auto& sp = spec_.setpoints;
    const ControlMode mode = spec_.control;
    const double ub = base_.U, ib = base_.I, sb = base_.S;
    const double src = options_.source_scale;
    const double w0 = c.w0;

    Signals s;
    for (int p = 0; p < 3; ++p) {
        s.u_s[p] = src * ub * std::cos(w0 * t - kTwoThirdsPi * p);
        s.i_g[p] = x[i_g_ + p];
    }
    if (injection_) {
        const double sign = injection_->sequence == Sequence::Positive ? -1.0 : 1.0;
        const double wt = 2.0 * kPi * injection_->freq_hz * t;
        for (int p = 0; p < 3; ++p)
            s.u_s[p] += injection_->amplitude * std::cos(wt + sign * kTwoThirdsPi * p);
    }
    for (int p = 0; p < 3; ++p) s.u_pcc[p] = s.u_s[p] + c.R_g * s.i_g[p];

    // Controller angle.
    double offset = 0.0;
    if (mode == ControlMode::ConstVf) offset = delta_fixed_;
    else if (angle_ >= 0) offset = x[angle_];
    const double theta = w0 * t + offset;
    s.theta_offset = offset;
    double cs[3], sn[3], cs2[3], sn2[3];
    for (int p = 0; p < 3; ++p) {
        const double a = theta - kTwoThirdsPi * p;
        cs[p] = std::cos(a);
        sn[p] = std::sin(a);
        cs2[p] = cs[p] * cs[p] - sn[p] * sn[p];
        sn2[p] = 2.0 * sn[p] * cs[p];
    }
    auto park = [](const double* cv, const double* sv, const std::array<double, 3>& v, double& d,
                   double& q) {
        d = (2.0 / 3.0) * (cv[0] * v[0] + cv[1] * v[1] + cv[2] * v[2]);
        q = -(2.0 / 3.0) * (sv[0] * v[0] + sv[1] * v[1] + sv[2] * v[2]);
    };
    park(cs, sn, s.u_pcc, s.u_d, s.u_q);
    park(cs, sn, s.i_g, s.i_d, s.i_q);
    s.P = 1.5 * (s.u_d * s.i_d + s.u_q * s.i_q);
    s.Q = 1.5 * (s.u_q * s.i_d - s.u_d * s.i_q);

    // Outer loops: current references.
    double i_dref = i_dref0_, i_qref = i_qref0_;
    if (vpi_ >= 0) {
        double u_ref = sp.U_set_pu * ub;
        if (droop_ >= 0) u_ref -= ub * k.gfm.D_v * x[droop_];
        const double ed = (u_ref - s.u_d) / ub, eq = -s.u_q / ub;
        i_dref = ib * (k.gfm.k_pv * ed + k.gfm.k_iv * x[vpi_]);
        i_qref = ib * (k.gfm.k_pv * eq + k.gfm.k_iv * x[vpi_ + 1]);
        if (dx) {
            dx[vpi_] = ed;
            dx[vpi_ + 1] = eq;
        }
    }
    if (angle_ >= 0 && mode == ControlMode::GFM && dx) {
        const double w = x[angle_aux_];
        dx[angle_] = w;
        dx[angle_aux_] = ((sp.P_ref_pu * sb - s.P) / sb - k.gfm.D * w) / k.gfm.H;
        dx[droop_] = ((s.Q / sb - sp.Q_ref_pu) - x[droop_]) / k.gfm.T_v;
    } else if (angle_ >= 0 && dx) {
        dx[angle_] = k.pll.k_p * s.u_q / ub + x[angle_aux_];
        dx[angle_aux_] = k.pll.k_i * s.u_q / ub;
    }
    if (ppi_ >= 0) {
        const double ep = sp.P_ref_pu - s.P / sb, eq = sp.Q_ref_pu - s.Q / sb;
        i_dref = ib * (k.pq.k_pp * ep + k.pq.k_ip * x[ppi_]);
        i_qref = -ib * (k.pq.k_pp * eq + k.pq.k_ip * x[ppi_ + 1]);
        if (dx) {
            dx[ppi_] = ep;
            dx[ppi_ + 1] = eq;
        }
    }
    s.u_dc = u_dc_ >= 0 ? x[u_dc_] : src * c.U_dc;
    if (dcpi_ >= 0) {
        const double e = (s.u_dc - c.U_dc) / base_.U_dc;
        i_dref = ib * (k.dc.k_pd * e + k.dc.k_id * x[dcpi_]);
        if (dx) dx[dcpi_] = e;
    }

    // Inner current loop and modulation.
    if (mode == ControlMode::OpenLoop) {
        s.m1_d = sp.m_d;
        s.m1_q = sp.m_q;
    } else {
        const double ed = (i_dref - s.i_d) / ib, eq = (i_qref - s.i_q) / ib;
        const double vd = ub * (k.inner.k_pi * ed + k.inner.k_ii * x[ipi_] - k_i_ * eq);
        const double vq = ub * (k.inner.k_pi * eq + k.inner.k_ii * x[ipi_ + 1] + k_i_ * ed);
        s.m1_d = 2.0 * vd / c.U_dc;
        s.m1_q = 2.0 * vq / c.U_dc;
        if (dx) {
            dx[ipi_] = ed;
            dx[ipi_ + 1] = eq;
        }
    }
    double m1[3];
    for (int p = 0; p < 3; ++p) m1[p] = cs[p] * s.m1_d - sn[p] * s.m1_q;

    if (!mmc(spec_)) {
        const double l = c.L_filter(), r = c.R_filter();
        for (int p = 0; p < 3; ++p) {
            s.m_u[p] = -0.5 * m1[p];
            s.m_l[p] = 0.5 * m1[p];
            if (dx) dx[i_g_ + p] = (m1[p] * s.u_dc / 2.0 - r * s.i_g[p] - s.u_pcc[p]) / l;
        }
        if (sig) *sig = s;
        return;
    }

    for (int p = 0; p < 3; ++p) {
        s.i_c[p] = x[i_c_ + p];
        s.u_cu[p] = x[u_cu_ + p];
        s.u_cl[p] = x[u_cl_ + p];
    }
    park(cs2, sn2, s.i_c, s.i_cd, s.i_cq);
    if (cpi_ >= 0) {
        const double ed = -s.i_cd / ib, eq = -s.i_cq / ib;
        if (!options_.disable_ccsc) {
            const double vd = ub * (k.ccsc.k_pic * ed + k.ccsc.k_iic * x[cpi_] + k_c_ * eq);
            const double vq = ub * (k.ccsc.k_pic * eq + k.ccsc.k_iic * x[cpi_ + 1] - k_c_ * ed);
            s.m2_d = 2.0 * vd / c.U_dc;
            s.m2_q = 2.0 * vq / c.U_dc;
        }
        if (dx) {
            dx[cpi_] = options_.disable_ccsc ? 0.0 : ed;
            dx[cpi_ + 1] = options_.disable_ccsc ? 0.0 : eq;
        }
    }
    const double l = c.L_arm, r = c.R_arm, ceq = c.C_eq();
    double sum_ic = 0.0;
    for (int p = 0; p < 3; ++p) {
        const double m2 = cs2[p] * s.m2_d - sn2[p] * s.m2_q;
        s.m_u[p] = 0.5 * (1.0 - m1[p] - m2);
        s.m_l[p] = 0.5 * (1.0 + m1[p] - m2);
        const double vu = s.m_u[p] * s.u_cu[p];
        const double vl = s.m_l[p] * s.u_cl[p];
        const double iu = s.i_c[p] + 0.5 * s.i_g[p];
        const double il = s.i_c[p] - 0.5 * s.i_g[p];
        sum_ic += s.i_c[p];
        if (dx) {
            dx[i_c_ + p] = (0.5 * s.u_dc - 0.5 * (vu + vl) - r * s.i_c[p]) / l;
            dx[i_g_ + p] = (vl - vu - r * s.i_g[p] - 2.0 * s.u_pcc[p]) / l;
            dx[u_cu_ + p] = s.m_u[p] * iu / ceq;
            dx[u_cl_ + p] = s.m_l[p] * il / ceq;
        }
    }
    if (u_dc_ >= 0 && dx) {
        const double r_dc = options_.R_dc_pu * c.U_dc * c.U_dc / base_.S;
        dx[u_dc_] = (src * i_dc_ - s.u_dc / r_dc - sum_ic) / options_.C_dc;
    }
    if (sig) *sig = s;
}

void AverageModel::rhs(double t, const double* x, double* dx) const { evaluate(t, x, dx, nullptr); }

Signals AverageModel::measure(double t, const double* x) const {
    Signals s;
    evaluate(t, x, nullptr, &s);
    return s;
}

void AverageModel::step(double t, std::vector<double>& x) const {
    const int n = size_;
    const double h = options_.dt;
    thread_local std::vector<double> k1, k2, k3, k4, tmp;
    k1.resize(n);
    k2.resize(n);
    k3.resize(n);
    k4.resize(n);
    tmp.resize(n);
    rhs(t, x.data(), k1.data());
    for (int i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    rhs(t + 0.5 * h, tmp.data(), k2.data());
    for (int i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    rhs(t + 0.5 * h, tmp.data(), k3.data());
    for (int i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
    rhs(t + h, tmp.data(), k4.data());
    for (int i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

void AverageModel::advance(double t0, int steps, std::vector<double>& x) const {
    for (int n = 0; n < steps; ++n) {
        const double t = t0 + n * options_.dt;
        step(t, x);
        for (int i = 0; i < size_; ++i) {
            if (!(std::abs(x[i]) <= 100.0 * scale_[i])) {
                std::ostringstream msg;
                msg << "state " << state_names()[i] << " diverged at t = " << t + options_.dt << " s";
                throw DivergenceError(msg.str(), t + options_.dt);
            }
        }
    }
}

std::vector<std::string> AverageModel::state_names() const {
    std::vector<std::string> names(size_);
    const char* ph = "abc";
    auto name3 = [&](int at, const char* base) {
        if (at < 0) return;
        for (int p = 0; p < 3; ++p) names[at + p] = std::string(base) + "_" + ph[p];
    };
    auto name = [&](int at, const char* v) {
        if (at >= 0) names[at] = v;
    };
    name3(i_c_, "i_c");
    name3(i_g_, "i_g");
    name3(u_cu_, "u_Cu");
    name3(u_cl_, "u_Cl");
    name(u_dc_, "u_dc");
    name(angle_, "angle");
    name(angle_aux_, spec_.control == ControlMode::GFM ? "speed" : "pll_integrator");
    name(droop_, "q_filter");
    name(vpi_, "vpi_d");
    if (vpi_ >= 0) names[vpi_ + 1] = "vpi_q";
    name(ppi_, "ppi_p");
    if (ppi_ >= 0) names[ppi_ + 1] = "ppi_q";
    name(dcpi_, "dcpi");
    name(ipi_, "ipi_d");
    if (ipi_ >= 0) names[ipi_ + 1] = "ipi_q";
    name(cpi_, "cpi_d");
    if (cpi_ >= 0) names[cpi_ + 1] = "cpi_q";
    return names;
}

double AverageModel::stored_energy(const double* x) const {
    const auto& c = spec_.circuit;
    double e = 0.0;
    for (int p = 0; p < 3; ++p) {
        const double ig = x[i_g_ + p];
        if (mmc(spec_)) {
            const double iu = x[i_c_ + p] + 0.5 * ig, il = x[i_c_ + p] - 0.5 * ig;
            e += 0.5 * c.L_arm * (iu * iu + il * il);
            e += 0.5 * c.C_eq() * (x[u_cu_ + p] * x[u_cu_ + p] + x[u_cl_ + p] * x[u_cl_ + p]);
        } else {
            e += 0.5 * c.L_filter() * ig * ig;
        }
    }
    if (u_dc_ >= 0) e += 0.5 * options_.C_dc * x[u_dc_] * x[u_dc_];
    return e;
}

}  // namespace htf
