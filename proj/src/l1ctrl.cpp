#include "l1margin/l1ctrl.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace l1margin {

namespace {

// Boundary gate without the containment check; stage values inside an RK4 step
// may sit a hair outside the box and are pulled back by the post-step clip.
double gate(double e, double rate, double lo, double hi) {
    if (e >= hi && rate > 0.0) return 0.0;
    if (e <= lo && rate < 0.0) return 0.0;
    return rate;
}

}  // namespace

// =============================================================================
// Configuration types
// =============================================================================

void UncertaintySets::validate() const {
    if (theta_lo.size() == 0 || theta_lo.size() != theta_hi.size()) {
        throw std::invalid_argument("UncertaintySets: theta box is empty or mismatched");
    }
    for (Eigen::Index i = 0; i < theta_lo.size(); ++i) {
        if (!(theta_lo(i) <= theta_hi(i))) {
            throw std::invalid_argument("UncertaintySets: theta box has lo > hi at component " +
                                        std::to_string(i));
        }
    }
    if (!(delta0 >= 0.0) || !(delta0 < delta)) {
        throw std::invalid_argument("UncertaintySets: need 0 <= delta0 < delta");
    }
    if (!(0.0 < omega_lo && omega_lo < omega0_lo && omega0_lo < omega0_hi && omega0_hi < omega_hi)) {
        throw std::invalid_argument(
            "UncertaintySets: need 0 < omega_lo < omega0_lo < omega0_hi < omega_hi");
    }
    if (!(d_sigma >= 0.0)) {
        throw std::invalid_argument("UncertaintySets: d_sigma must be nonnegative");
    }
}

double UncertaintySets::theta_l1_bound() const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < theta_lo.size(); ++i) {
        total += std::max(std::abs(theta_lo(i)), std::abs(theta_hi(i)));
    }
    return total;
}

double UncertaintySets::theta_sq_bound() const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < theta_lo.size(); ++i) {
        const double m = std::max(std::abs(theta_lo(i)), std::abs(theta_hi(i)));
        total += 4.0 * m * m;
    }
    return total;
}

// =============================================================================
// Construction and validation
// =============================================================================

double k_g(const Eigen::MatrixXd& A_m, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
    if (A_m.rows() != A_m.cols() || b.size() != A_m.rows() || c.size() != A_m.rows()) {
        throw std::invalid_argument("k_g: dimension mismatch");
    }
    const Eigen::VectorXd z = A_m.fullPivLu().solve(b);
    const double denom = c.dot(z);
    if (std::abs(denom) < 1e-12 * std::max(1.0, c.norm() * z.norm())) {
        throw std::invalid_argument("k_g: c'A_m^{-1}b vanishes, the DC prefilter is undefined");
    }
    return -1.0 / denom;
}

ControllerRuntime prepare_controller(const ControllerConfig& cfg, const UncertaintySets& sets) {
    const Eigen::Index n = cfg.A_m.rows();
    if (n < 1 || cfg.A_m.cols() != n || cfg.b.size() != n || cfg.c.size() != n) {
        throw std::invalid_argument("prepare_controller: plant dimensions are inconsistent");
    }
    if (!is_hurwitz(cfg.A_m)) {
        throw std::invalid_argument("prepare_controller: A_m must be Hurwitz");
    }
    if (!(cfg.k > 0.0)) {
        throw std::invalid_argument("prepare_controller: k must be positive");
    }
    if (!(cfg.gamma_c > 0.0)) {
        throw std::invalid_argument("prepare_controller: gamma_c must be positive");
    }
    sets.validate();
    if (sets.theta_lo.size() != n) {
        throw std::invalid_argument("prepare_controller: theta box size must match the plant order");
    }

    ControllerRuntime rt;
    rt.cfg = cfg;
    rt.sets = sets;
    if (rt.cfg.Q.size() == 0) rt.cfg.Q = Eigen::MatrixXd::Identity(n, n);
    rt.P = lyapunov_solve(cfg.A_m, rt.cfg.Q);
    rt.pb = rt.P * cfg.b;
    rt.kg = k_g(cfg.A_m, cfg.b, cfg.c);

    if (poly_degree(cfg.D.num) >= poly_degree(cfg.D.den)) {
        throw std::invalid_argument(
            "prepare_controller: D(s) must be strictly proper, a biproper D closes an "
            "algebraic loop through u");
    }
    rt.d_real = to_state_space(cfg.D);
    return rt;
}

ControllerState initial_state(const ControllerRuntime& rt, const Eigen::VectorXd& x0) {
    if (x0.size() != rt.n()) {
        throw std::invalid_argument("initial_state: x0 size must match the plant order");
    }
    ControllerState st;
    st.xhat = x0;
    st.theta_hat.resize(rt.n());
    for (Eigen::Index i = 0; i < rt.n(); ++i) {
        st.theta_hat(i) = std::clamp(0.0, rt.sets.theta_lo(i), rt.sets.theta_hi(i));
    }
    st.sigma_hat = std::clamp(0.0, -rt.sets.delta, rt.sets.delta);
    st.omega_hat = std::clamp(1.0, rt.sets.omega_lo, rt.sets.omega_hi);
    st.chi = Eigen::VectorXd::Zero(rt.nd());
    return st;
}

// =============================================================================
// Filter algebra
// =============================================================================

RationalTF c_filter(const RationalTF& D, double k, double omega) {
    if (!(k > 0.0) || !(omega > 0.0)) {
        throw std::invalid_argument("c_filter: k and omega must be positive");
    }
    const std::vector<double> p = poly_trim(D.num);
    const std::vector<double> q = poly_trim(D.den);
    if (poly_degree(p) >= poly_degree(q)) {
        throw std::invalid_argument("c_filter: D(s) must be strictly proper");
    }
    double qmax = 0.0;
    for (double v : q) qmax = std::max(qmax, std::abs(v));
    if (std::abs(q[0]) > 1e-9 * qmax) {
        throw std::invalid_argument("c_filter: D(s) must contain an integrator so that C(0) = 1");
    }
    RationalTF C;
    C.num = poly_scale(p, omega * k);
    C.den = poly_add(q, C.num);
    const Eigen::VectorXcd roots = poly_roots(C.den);
    for (Eigen::Index i = 0; i < roots.size(); ++i) {
        if (roots(i).real() >= -1e-12) {
            throw std::invalid_argument("c_filter: C(s) is unstable for this (k, omega)");
        }
    }
    return C;
}

StateSpace c_over_omega_ss(const RationalTF& D, double k, double omega) {
    const RationalTF C = c_filter(D, k, omega);  // runs the validity checks
    return to_state_space(RationalTF{poly_scale(C.num, 1.0 / omega), C.den});
}

// =============================================================================
// Adaptive laws
// =============================================================================

double proj(double estimate, double raw_rate, double lo, double hi) {
    if (!(lo <= hi)) {
        throw std::invalid_argument("proj: lo must not exceed hi");
    }
    const double slack = 1e-12 * std::max(1.0, hi - lo);
    if (estimate < lo - slack || estimate > hi + slack) {
        throw std::invalid_argument("proj: estimate lies strictly outside its bounds");
    }
    return gate(estimate, raw_rate, lo, hi);
}

Eigen::VectorXd proj(const Eigen::VectorXd& estimate, const Eigen::VectorXd& raw_rate,
                     const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    if (estimate.size() != raw_rate.size() || estimate.size() != lo.size() ||
        estimate.size() != hi.size()) {
        throw std::invalid_argument("proj: dimension mismatch");
    }
    Eigen::VectorXd out(estimate.size());
    for (Eigen::Index i = 0; i < estimate.size(); ++i) {
        out(i) = proj(estimate(i), raw_rate(i), lo(i), hi(i));
    }
    return out;
}

AdaptiveRates adaptive_rates(const Eigen::VectorXd& x_meas, const Eigen::VectorXd& xtilde, double u,
                             const ControllerState& st, const ControllerRuntime& rt) {
    if (x_meas.size() != rt.n() || xtilde.size() != rt.n()) {
        throw std::invalid_argument("adaptive_rates: dimension mismatch");
    }
    const double p = rt.pb.dot(xtilde);
    const double gamma = rt.cfg.gamma_c;
    AdaptiveRates rates;
    rates.theta.resize(rt.n());
    for (Eigen::Index i = 0; i < rt.n(); ++i) {
        rates.theta(i) = gate(st.theta_hat(i), -gamma * x_meas(i) * p, rt.sets.theta_lo(i),
                              rt.sets.theta_hi(i));
    }
    rates.sigma = gate(st.sigma_hat, -gamma * p, -rt.sets.delta, rt.sets.delta);
    rates.omega = gate(st.omega_hat, -gamma * u * p, rt.sets.omega_lo, rt.sets.omega_hi);
    return rates;
}

// =============================================================================
// Stepping
// =============================================================================

double controller_deriv(const Eigen::Ref<const Eigen::VectorXd>& y,
                        const Eigen::Ref<const Eigen::VectorXd>& x_meas, double r,
                        const ControllerRuntime& rt, Eigen::Ref<Eigen::VectorXd> dy) {
    const Eigen::Index n = rt.n();
    const Eigen::Index nd = rt.nd();
    double u = 0.0;
    if (nd > 0) u = -rt.cfg.k * rt.d_real.c.dot(y.segment(2 * n + 2, nd));

    double p = 0.0;
    double thx = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        p += rt.pb(i) * (y(i) - x_meas(i));
        thx += y(n + i) * x_meas(i);
    }
    const double sh = y(2 * n);
    const double wh = y(2 * n + 1);
    const double gamma = rt.cfg.gamma_c;

    dy.head(n).noalias() = rt.cfg.A_m * y.head(n);
    dy.head(n) += rt.cfg.b * (wh * u + thx + sh);
    for (Eigen::Index i = 0; i < n; ++i) {
        dy(n + i) = gate(y(n + i), -gamma * x_meas(i) * p, rt.sets.theta_lo(i), rt.sets.theta_hi(i));
    }
    dy(2 * n) = gate(sh, -gamma * p, -rt.sets.delta, rt.sets.delta);
    dy(2 * n + 1) = gate(wh, -gamma * u * p, rt.sets.omega_lo, rt.sets.omega_hi);
    const double ru = wh * u + thx + sh - rt.kg * r;
    if (nd > 0) {
        dy.segment(2 * n + 2, nd).noalias() = rt.d_real.A * y.segment(2 * n + 2, nd);
        dy.segment(2 * n + 2, nd) += rt.d_real.b * ru;
    }
    return u;
}

Eigen::VectorXd pack_state(const ControllerState& st) {
    const Eigen::Index n = st.xhat.size();
    Eigen::VectorXd y(2 * n + 2 + st.chi.size());
    y.head(n) = st.xhat;
    y.segment(n, n) = st.theta_hat;
    y(2 * n) = st.sigma_hat;
    y(2 * n + 1) = st.omega_hat;
    y.tail(st.chi.size()) = st.chi;
    return y;
}

ControllerState unpack_state(const ControllerRuntime& rt, const Eigen::Ref<const Eigen::VectorXd>& y) {
    const Eigen::Index n = rt.n();
    ControllerState st;
    st.xhat = y.head(n);
    st.theta_hat = y.segment(n, n);
    st.sigma_hat = y(2 * n);
    st.omega_hat = y(2 * n + 1);
    st.chi = y.tail(rt.nd());
    return st;
}

void check_step_guard(const ControllerRuntime& rt, const Eigen::Ref<const Eigen::VectorXd>& dy,
                      double h) {
    const Eigen::Index n = rt.n();
    const double budget = rt.guard_fraction / h;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double width = rt.sets.theta_hi(i) - rt.sets.theta_lo(i);
        if (std::abs(dy(n + i)) > budget * width) {
            throw StepGuardError("step guard: theta_hat[" + std::to_string(i) + "] rate " +
                                 std::to_string(std::abs(dy(n + i))) + " exceeds " +
                                 std::to_string(budget * width) +
                                 " (reduce h or gamma_c, or widen the box)");
        }
    }
    if (std::abs(dy(2 * n)) > budget * 2.0 * rt.sets.delta) {
        throw StepGuardError("step guard: sigma_hat rate " + std::to_string(std::abs(dy(2 * n))) +
                             " exceeds " + std::to_string(budget * 2.0 * rt.sets.delta) +
                             " (reduce h or gamma_c, or widen delta)");
    }
    if (std::abs(dy(2 * n + 1)) > budget * (rt.sets.omega_hi - rt.sets.omega_lo)) {
        throw StepGuardError("step guard: omega_hat rate " + std::to_string(std::abs(dy(2 * n + 1))) +
                             " exceeds " + std::to_string(budget * (rt.sets.omega_hi - rt.sets.omega_lo)) +
                             " (reduce h or gamma_c, or widen the omega interval)");
    }
}

void clamp_estimates(const ControllerRuntime& rt, Eigen::Ref<Eigen::VectorXd> y) {
    const Eigen::Index n = rt.n();
    for (Eigen::Index i = 0; i < n; ++i) {
        y(n + i) = std::clamp(y(n + i), rt.sets.theta_lo(i), rt.sets.theta_hi(i));
    }
    y(2 * n) = std::clamp(y(2 * n), -rt.sets.delta, rt.sets.delta);
    y(2 * n + 1) = std::clamp(y(2 * n + 1), rt.sets.omega_lo, rt.sets.omega_hi);
}

double controller_step(ControllerState& st, const Eigen::VectorXd& x_meas, double r, double h,
                       const ControllerRuntime& rt) {
    if (!(h > 0.0)) {
        throw std::invalid_argument("controller_step: h must be positive");
    }
    if (x_meas.size() != rt.n()) {
        throw std::invalid_argument("controller_step: measurement size must match the plant order");
    }
    const Eigen::Index m = rt.state_dim();
    Eigen::VectorXd y = pack_state(st);
    Eigen::VectorXd k1(m), k2(m), k3(m), k4(m), tmp(m);

    const double u0 = controller_deriv(y, x_meas, r, rt, k1);
    check_step_guard(rt, k1, h);
    tmp = y + 0.5 * h * k1;
    controller_deriv(tmp, x_meas, r, rt, k2);
    tmp = y + 0.5 * h * k2;
    controller_deriv(tmp, x_meas, r, rt, k3);
    tmp = y + h * k3;
    controller_deriv(tmp, x_meas, r, rt, k4);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    clamp_estimates(rt, y);
    st = unpack_state(rt, y);
    return u0;
}

AdaptiveEstimates estimates_view(const ControllerState& st) {
    AdaptiveEstimates v;
    v.theta_hat = st.theta_hat;
    v.sigma_hat = st.sigma_hat;
    v.omega_hat = st.omega_hat;
    return v;
}

AdaptiveEstimates estimates_view(const ControllerState& st, const Eigen::VectorXd& theta,
                                 double omega, double sigma_plus_eta) {
    AdaptiveEstimates v = estimates_view(st);
    v.has_truth = true;
    v.theta_tilde = st.theta_hat - theta;
    v.sigma_tilde = st.sigma_hat - sigma_plus_eta;
    v.omega_tilde = st.omega_hat - omega;
    return v;
}

}  // namespace l1margin
