#include "l1margin/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace l1margin {

// =============================================================================
// Signals
// =============================================================================

double SignalSpec::eval(double t) const {
    switch (kind) {
        case Kind::zero: return 0.0;
        case Kind::constant: return amplitude;
        case Kind::sinusoid: return amplitude * std::sin(omega * t + phase);
        case Kind::step: return t >= t_on ? amplitude : 0.0;
    }
    return 0.0;
}

double SignalSpec::deriv(double t) const {
    if (kind == Kind::sinusoid) return amplitude * omega * std::cos(omega * t + phase);
    return 0.0;
}

double SignalSpec::sup_abs() const {
    return kind == Kind::zero ? 0.0 : std::abs(amplitude);
}

double SignalSpec::sup_abs_deriv() const {
    return kind == Kind::sinusoid ? std::abs(amplitude * omega) : 0.0;
}

// =============================================================================
// Scenario validation
// =============================================================================

void Scenario::validate() const {
    sets.validate();
    if (theta.size() != sets.theta_lo.size()) {
        throw std::invalid_argument("Scenario: theta size must match the declared box");
    }
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        if (!(theta(i) >= sets.theta_lo(i) && theta(i) <= sets.theta_hi(i))) {
            throw std::invalid_argument("Scenario: theta lies outside the declared box at component " +
                                        std::to_string(i));
        }
    }
    if (!(omega >= sets.omega0_lo && omega <= sets.omega0_hi)) {
        throw std::invalid_argument("Scenario: omega lies outside the declared interval");
    }
    if (!(gain > 0.0)) {
        throw std::invalid_argument("Scenario: gain must be positive");
    }
    if (sigma.kind == SignalSpec::Kind::step) {
        throw std::invalid_argument("Scenario: sigma must have a bounded derivative, steps are not allowed");
    }
    const double tol = 1e-9;
    if (sigma.sup_abs() > sets.delta0 * (1.0 + tol) + tol) {
        throw std::invalid_argument("Scenario: sigma amplitude exceeds delta0");
    }
    if (sigma.sup_abs_deriv() > sets.d_sigma * (1.0 + tol) + tol) {
        throw std::invalid_argument("Scenario: sigma rate exceeds d_sigma");
    }
    if (x0.size() != cfg.A_m.rows()) {
        throw std::invalid_argument("Scenario: x0 size must match the plant order");
    }
    if (!(h > 0.0)) {
        throw std::invalid_argument("Scenario: h must be positive");
    }
    if (std::llround(t_end / h) < 1) {
        throw std::invalid_argument("Scenario: t_end must cover at least one step");
    }
    if (!(tau >= 0.0)) {
        throw std::invalid_argument("Scenario: tau must be nonnegative");
    }
    if (!(blowup_threshold > 0.0)) {
        throw std::invalid_argument("Scenario: blowup_threshold must be positive");
    }
    if (!(stable_envelope >= 1.0)) {
        throw std::invalid_argument("Scenario: stable_envelope must be at least 1");
    }
    if (record_stride < 1) {
        throw std::invalid_argument("Scenario: record_stride must be at least 1");
    }
}

// =============================================================================
// Delay line
// =============================================================================

DelayLine::DelayLine(Eigen::Index dim, Eigen::Index depth) : dim_(dim), depth_(depth) {
    if (dim < 1 || depth < 0) {
        throw std::invalid_argument("DelayLine: dimension must be positive and depth nonnegative");
    }
    ring_.assign(static_cast<std::size_t>(dim_) * static_cast<std::size_t>(depth_ + 1), 0.0);
}

void DelayLine::push(const double* node_value) {
    const Eigen::Index slot = count_ % (depth_ + 1);
    std::copy(node_value, node_value + dim_, ring_.begin() + slot * dim_);
    ++count_;
}

void DelayLine::sample(Eigen::Index idx, double frac, double* out) const {
    if (static_cast<double>(idx) + frac < 0.0) {
        std::fill(out, out + dim_, 0.0);
        return;
    }
    const Eigen::Index newest = count_ - 1;
    auto slot = [&](Eigen::Index node) -> const double* {
        if (node < 0 || node > newest || node < newest - depth_) {
            throw std::logic_error("DelayLine: node outside the retained window");
        }
        return ring_.data() + (node % (depth_ + 1)) * dim_;
    };
    if (frac <= 0.0) {
        const double* a = slot(idx);
        std::copy(a, a + dim_, out);
    } else if (frac >= 1.0) {
        const double* b = slot(idx + 1);
        std::copy(b, b + dim_, out);
    } else {
        const double* a = slot(idx);
        const double* b = slot(idx + 1);
        for (Eigen::Index c = 0; c < dim_; ++c) out[c] = (1.0 - frac) * a[c] + frac * b[c];
    }
}

// =============================================================================
// Adaptive closed loop
// =============================================================================

namespace {

struct AdaptiveResult {
    double peak = 0.0;
    double diverged_at = -1.0;
    bool guard_tripped = false;
    double guard_time = -1.0;
    std::string guard_message;
};

// Joint RK4 integration of plant + controller with the measurement delay.
// Fills `out` when non-null; never throws on divergence or guard trips, so the
// probe layer can classify those outcomes itself.
AdaptiveResult run_adaptive(const Scenario& sc, SimTrace* out) {
    sc.validate();
    const ControllerRuntime rt = prepare_controller(sc.cfg, sc.sets);
    const Eigen::Index n = rt.n();
    const Eigen::Index m = rt.state_dim();
    const Eigen::Index dim = n + m;
    const long long steps = std::llround(sc.t_end / sc.h);
    const Eigen::Index depth = static_cast<Eigen::Index>(std::llround(sc.tau / sc.h));
    const double tau_eff = static_cast<double>(depth) * sc.h;
    const double weff = sc.omega_eff();
    const long long stride = sc.record_stride;

    Eigen::VectorXd y(dim), k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim), xmeas(n);
    y.head(n) = sc.x0;
    y.tail(m) = pack_state(initial_state(rt, sc.x0));

    DelayLine xline(n, depth);
    DelayLine zline(1, depth);
    auto u_of = [&](const Eigen::VectorXd& yv) {
        return rt.nd() > 0 ? -rt.cfg.k * rt.d_real.c.dot(yv.segment(n + 2 * n + 2, rt.nd())) : 0.0;
    };
    if (depth > 0) {
        xline.push(y.data());
        const double z0 = weff * u_of(y) + sc.sigma.eval(0.0);
        zline.push(&z0);
    }

    auto deriv = [&](const Eigen::VectorXd& yin, double frac, long long i, double t,
                     Eigen::VectorXd& dy) -> double {
        if (depth == 0) {
            xmeas = yin.head(n);
        } else {
            xline.sample(i - depth, frac, xmeas.data());
        }
        const double u = controller_deriv(yin.tail(m), xmeas, sc.r.eval(t), rt, dy.tail(m));
        dy.head(n).noalias() = rt.cfg.A_m * yin.head(n);
        dy.head(n) += rt.cfg.b * (weff * u + sc.theta.dot(yin.head(n)) + sc.sigma.eval(t));
        return u;
    };

    if (out) {
        out->h = sc.h;
        out->stride = sc.record_stride;
        out->tau_eff = tau_eff;
        const std::size_t cap = static_cast<std::size_t>(steps / stride) + 2;
        out->t.reserve(cap);
        out->x.assign(n, {});
        out->xhat.assign(n, {});
        out->xtilde.assign(n, {});
        out->theta_hat.assign(n, {});
        for (Eigen::Index c = 0; c < n; ++c) {
            out->x[c].reserve(cap);
            out->xhat[c].reserve(cap);
            out->xtilde[c].reserve(cap);
            out->theta_hat[c].reserve(cap);
        }
        out->u.reserve(cap);
        out->sigma_hat.reserve(cap);
        out->omega_hat.reserve(cap);
        out->r.reserve(cap);
        out->sigma.reserve(cap);
        out->rtilde.reserve(cap);
        out->eta.reserve(cap);
    }

    // Record node i; deriv() has just been evaluated there, so xmeas holds the
    // delayed measurement at the node.
    auto record = [&](long long i, double u_node) {
        const double t = static_cast<double>(i) * sc.h;
        const double sg = sc.sigma.eval(t);
        double zd = weff * u_node + sg;
        if (depth > 0) zline.sample(i - depth, 0.0, &zd);
        const double eta = zd - (weff * u_node + sg);
        double rtld = (y(n + 2 * n + 1) - weff) * u_node + (y(n + 2 * n) - sg - eta);
        for (Eigen::Index c = 0; c < n; ++c) rtld += (y(n + n + c) - sc.theta(c)) * xmeas(c);
        out->t.push_back(t);
        for (Eigen::Index c = 0; c < n; ++c) {
            out->x[c].push_back(y(c));
            out->xhat[c].push_back(y(n + c));
            out->xtilde[c].push_back(y(n + c) - xmeas(c));
            out->theta_hat[c].push_back(y(n + n + c));
        }
        out->u.push_back(u_node);
        out->sigma_hat.push_back(y(n + 2 * n));
        out->omega_hat.push_back(y(n + 2 * n + 1));
        out->r.push_back(sc.r.eval(t));
        out->sigma.push_back(sg);
        out->rtilde.push_back(rtld);
        out->eta.push_back(eta);
    };

    AdaptiveResult res;
    for (long long i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) * sc.h;
        const double xinf = y.head(n).lpNorm<Eigen::Infinity>();
        if (!(xinf <= sc.blowup_threshold)) {  // catches NaN as well
            res.diverged_at = t;
            break;
        }
        res.peak = std::max(res.peak, xinf);
        const double u_node = deriv(y, 0.0, i, t, k1);
        if (out && i % stride == 0) record(i, u_node);
        if (i == steps) break;
        try {
            check_step_guard(rt, k1.tail(m), sc.h);
        } catch (const StepGuardError& e) {
            res.guard_tripped = true;
            res.guard_time = t;
            res.guard_message = e.what();
            break;
        }
        tmp = y + (0.5 * sc.h) * k1;
        deriv(tmp, 0.5, i, t + 0.5 * sc.h, k2);
        tmp = y + (0.5 * sc.h) * k2;
        deriv(tmp, 0.5, i, t + 0.5 * sc.h, k3);
        tmp = y + sc.h * k3;
        deriv(tmp, 1.0, i, t + sc.h, k4);
        y += (sc.h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        clamp_estimates(rt, y.tail(m));
        if (depth > 0) {
            xline.push(y.data());
            const double zn = weff * u_of(y) + sc.sigma.eval(t + sc.h);
            zline.push(&zn);
        }
    }
    if (out) {
        out->peak_x_inf = res.peak;
        out->diverged_at = res.diverged_at;
    }
    return res;
}

}  // namespace

SimTrace simulate_closed_loop(const Scenario& sc) {
    SimTrace tr;
    const AdaptiveResult res = run_adaptive(sc, &tr);
    if (res.guard_tripped) throw StepGuardError(res.guard_message);
    return tr;
}

// =============================================================================
// Linear companions
// =============================================================================

LtiTrace simulate_reference(const Scenario& sc) {
    sc.validate();
    const ControllerRuntime rt = prepare_controller(sc.cfg, sc.sets);
    const double weff = sc.omega_eff();
    const StateSpace cw = c_over_omega_ss(sc.cfg.D, sc.cfg.k, weff);
    const Eigen::Index n = rt.n();
    const Eigen::Index nc = cw.order();
    const Eigen::Index dim = n + nc;
    const long long steps = std::llround(sc.t_end / sc.h);
    const long long stride = sc.record_stride;

    Eigen::VectorXd y = Eigen::VectorXd::Zero(dim), k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    y.head(n) = sc.x0;

    auto deriv = [&](const Eigen::VectorXd& yin, double t, Eigen::VectorXd& dy) -> double {
        const double u = cw.c.dot(yin.tail(nc));
        const double sg = sc.sigma.eval(t);
        const double rbar = rt.kg * sc.r.eval(t) - sc.theta.dot(yin.head(n)) - sg;
        dy.head(n).noalias() = rt.cfg.A_m * yin.head(n);
        dy.head(n) += rt.cfg.b * (weff * u + sc.theta.dot(yin.head(n)) + sg);
        dy.tail(nc).noalias() = cw.A * yin.tail(nc);
        dy.tail(nc) += cw.b * rbar;
        return u;
    };

    LtiTrace out;
    out.h = sc.h;
    out.stride = sc.record_stride;
    const std::size_t cap = static_cast<std::size_t>(steps / stride) + 2;
    out.t.reserve(cap);
    out.x.assign(n, {});
    for (Eigen::Index c = 0; c < n; ++c) out.x[c].reserve(cap);
    out.u.reserve(cap);

    for (long long i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) * sc.h;
        const double xinf = y.head(n).lpNorm<Eigen::Infinity>();
        if (!(xinf <= sc.blowup_threshold)) {
            out.diverged_at = t;
            break;
        }
        out.peak_x_inf = std::max(out.peak_x_inf, xinf);
        const double u_node = deriv(y, t, k1);
        if (i % stride == 0) {
            out.t.push_back(t);
            for (Eigen::Index c = 0; c < n; ++c) out.x[c].push_back(y(c));
            out.u.push_back(u_node);
        }
        if (i == steps) break;
        tmp = y + (0.5 * sc.h) * k1;
        deriv(tmp, t + 0.5 * sc.h, k2);
        tmp = y + (0.5 * sc.h) * k2;
        deriv(tmp, t + 0.5 * sc.h, k3);
        tmp = y + sc.h * k3;
        deriv(tmp, t + sc.h, k4);
        y += (sc.h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return out;
}

LtiTrace simulate_lti_delayed(const Scenario& sc, const std::vector<double>& rtilde) {
    sc.validate();
    const ControllerRuntime rt = prepare_controller(sc.cfg, sc.sets);
    const double weff = sc.omega_eff();
    const StateSpace cw = c_over_omega_ss(sc.cfg.D, sc.cfg.k, weff);
    const Eigen::Index n = rt.n();
    const Eigen::Index nc = cw.order();
    const Eigen::Index dim = n + 2 * nc;
    const long long steps = std::llround(sc.t_end / sc.h);
    const Eigen::Index depth = static_cast<Eigen::Index>(std::llround(sc.tau / sc.h));
    const long long stride = sc.record_stride;
    if (!rtilde.empty() && static_cast<long long>(rtilde.size()) < steps + 1) {
        throw std::invalid_argument("simulate_lti_delayed: rtilde must provide one sample per grid node");
    }

    const Eigen::MatrixXd Abar = rt.cfg.A_m + rt.cfg.b * sc.theta.transpose();
    Eigen::VectorXd y = Eigen::VectorXd::Zero(dim), k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    DelayLine zline(1, depth);
    auto u_of = [&](const Eigen::VectorXd& yv) {
        return cw.c.dot(yv.segment(n, nc)) - cw.c.dot(yv.tail(nc));
    };
    if (depth > 0) {
        const double z0 = weff * u_of(y) + sc.sigma.eval(0.0);
        zline.push(&z0);
    }
    auto rtilde_at = [&](long long i, double frac) -> double {
        if (rtilde.empty()) return 0.0;
        if (frac <= 0.0) return rtilde[static_cast<std::size_t>(i)];
        if (frac >= 1.0) return rtilde[static_cast<std::size_t>(i + 1)];
        return (1.0 - frac) * rtilde[static_cast<std::size_t>(i)] +
               frac * rtilde[static_cast<std::size_t>(i + 1)];
    };

    auto deriv = [&](const Eigen::VectorXd& yin, double frac, long long i, double t,
                     Eigen::VectorXd& dy) -> double {
        const double u = u_of(yin);
        const double sg = sc.sigma.eval(t);
        const double zl = weff * u + sg;
        double zd = zl;
        if (depth > 0) zline.sample(i - depth, frac, &zd);
        const double eta = zd - zl;
        const double win = rt.kg * sc.r.eval(t) - sc.theta.dot(yin.head(n)) - sg - eta;
        dy.head(n).noalias() = Abar * yin.head(n);
        dy.head(n) += rt.cfg.b * zd;
        dy.segment(n, nc).noalias() = cw.A * yin.segment(n, nc);
        dy.segment(n, nc) += cw.b * win;
        dy.tail(nc).noalias() = cw.A * yin.tail(nc);
        dy.tail(nc) += cw.b * rtilde_at(i, frac);
        return u;
    };

    LtiTrace out;
    out.h = sc.h;
    out.stride = sc.record_stride;
    const std::size_t cap = static_cast<std::size_t>(steps / stride) + 2;
    out.t.reserve(cap);
    out.x.assign(n, {});
    for (Eigen::Index c = 0; c < n; ++c) out.x[c].reserve(cap);
    out.u.reserve(cap);

    for (long long i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) * sc.h;
        const double xinf = y.head(n).lpNorm<Eigen::Infinity>();
        if (!(xinf <= sc.blowup_threshold)) {
            out.diverged_at = t;
            break;
        }
        out.peak_x_inf = std::max(out.peak_x_inf, xinf);
        const double u_node = deriv(y, 0.0, i, t, k1);
        if (i % stride == 0) {
            out.t.push_back(t);
            for (Eigen::Index c = 0; c < n; ++c) out.x[c].push_back(y(c));
            out.u.push_back(u_node);
        }
        if (i == steps) break;
        tmp = y + (0.5 * sc.h) * k1;
        deriv(tmp, 0.5, i, t + 0.5 * sc.h, k2);
        tmp = y + (0.5 * sc.h) * k2;
        deriv(tmp, 0.5, i, t + 0.5 * sc.h, k3);
        tmp = y + sc.h * k3;
        deriv(tmp, 1.0, i, t + sc.h, k4);
        y += (sc.h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (depth > 0) {
            const double zn = weff * u_of(y) + sc.sigma.eval(t + sc.h);
            zline.push(&zn);
        }
    }
    return out;
}

// =============================================================================
// Equivalence check
// =============================================================================

EquivalenceReport verify_equivalence(const SimTrace& tr, const Scenario& sc) {
    Scenario s = sc;
    s.record_stride = 1;
    const long long steps = std::llround(s.t_end / s.h);
    if (tr.stride != 1 || tr.h != s.h ||
        static_cast<long long>(tr.t.size()) != steps + 1 ||
        tr.rtilde.size() != tr.t.size()) {
        throw std::invalid_argument(
            "verify_equivalence: trace grid does not match the scenario (record the adaptive run "
            "with stride 1 over the full horizon)");
    }
    if (tr.diverged()) {
        throw std::runtime_error("verify_equivalence: the adaptive loop diverged before the horizon");
    }
    const LtiTrace lt = simulate_lti_delayed(s, tr.rtilde);
    if (lt.diverged()) {
        throw std::runtime_error("verify_equivalence: the delayed linear realization diverged");
    }
    const long long depth = std::llround(s.tau / s.h);
    const std::size_t count = tr.t.size();
    const Eigen::Index n = static_cast<Eigen::Index>(tr.x.size());

    EquivalenceReport rep;
    rep.tau_eff = tr.tau_eff;
    for (std::size_t i = 0; i < count; ++i) {
        for (Eigen::Index c = 0; c < n; ++c) {
            const double xd =
                static_cast<long long>(i) >= depth ? tr.x[c][i - static_cast<std::size_t>(depth)] : 0.0;
            rep.x_residual = std::max(rep.x_residual, std::abs(lt.x[c][i] - xd));
            rep.x_scale = std::max(rep.x_scale, std::abs(xd));
        }
        rep.u_residual = std::max(rep.u_residual, std::abs(lt.u[i] - tr.u[i]));
        rep.u_scale = std::max(rep.u_scale, std::abs(tr.u[i]));
    }
    rep.x_residual_rel = rep.x_scale > 0.0 ? rep.x_residual / rep.x_scale : rep.x_residual;
    rep.u_residual_rel = rep.u_scale > 0.0 ? rep.u_residual / rep.u_scale : rep.u_residual;
    return rep;
}

EquivalenceReport verify_equivalence(const Scenario& sc) {
    Scenario s = sc;
    s.record_stride = 1;
    return verify_equivalence(simulate_closed_loop(s), s);
}

// =============================================================================
// Stability probing
// =============================================================================

namespace {

StabilityVerdict classify_with_baseline(const Scenario& sc, double tau, double baseline_peak) {
    Scenario p = sc;
    p.tau = tau;
    const AdaptiveResult r = run_adaptive(p, nullptr);
    StabilityVerdict v;
    v.baseline_peak = baseline_peak;
    v.peak_x_inf = r.peak;
    const double floor = std::max(baseline_peak, 1e-9);
    if (r.diverged_at >= 0.0) {
        v.classification = StabilityVerdict::Kind::diverged;
        v.divergence_time = r.diverged_at;
    } else if (r.guard_tripped) {
        // At high adaptation gain a runaway trajectory saturates the estimate
        // rate budget long before the blow-up threshold. A trip near the
        // no-delay scale means the step budget is unresolved: inconclusive.
        // A trip well outside it is either an escape in progress or a
        // projection-bounded large-amplitude cycle; one refinement at h/4
        // (the rate budget scales as 1/h) separates the two: an escape trips
        // the enlarged budget or blows up, a bounded cycle runs to the horizon.
        if (r.peak <= 3.0 * floor) {
            v.classification = StabilityVerdict::Kind::inconclusive;
            v.divergence_time = r.guard_time;
        } else {
            Scenario fine = p;
            fine.h = p.h / 4.0;
            const AdaptiveResult f = run_adaptive(fine, nullptr);
            v.peak_x_inf = f.peak;
            if (f.diverged_at >= 0.0) {
                v.classification = StabilityVerdict::Kind::diverged;
                v.divergence_time = f.diverged_at;
            } else if (f.guard_tripped) {
                v.classification = StabilityVerdict::Kind::diverged;
                v.divergence_time = f.guard_time;
            } else if (f.peak <= sc.stable_envelope * floor) {
                v.classification = StabilityVerdict::Kind::stable;
            } else {
                v.classification = StabilityVerdict::Kind::inconclusive;
            }
        }
    } else if (r.peak <= sc.stable_envelope * floor) {
        v.classification = StabilityVerdict::Kind::stable;
    } else {
        v.classification = StabilityVerdict::Kind::inconclusive;
    }
    return v;
}

double baseline_peak_of(const Scenario& sc) {
    Scenario base = sc;
    base.tau = 0.0;
    const AdaptiveResult b = run_adaptive(base, nullptr);
    if (b.guard_tripped) throw StepGuardError(b.guard_message);
    if (b.diverged_at >= 0.0) {
        throw std::runtime_error(
            "stability probe: the no-delay loop itself diverges, so no stability envelope exists");
    }
    return b.peak;
}

}  // namespace

StabilityVerdict stability_probe(const Scenario& sc, double tau) {
    return classify_with_baseline(sc, tau, baseline_peak_of(sc));
}

DelayMarginBracket empirical_delay_margin(const Scenario& sc, double tau_hi, int max_probes) {
    if (!(tau_hi > 0.0)) {
        throw std::invalid_argument("empirical_delay_margin: tau_hi must be positive");
    }
    const double baseline = baseline_peak_of(sc);
    auto snap = [&](double tau) { return static_cast<double>(std::llround(tau / sc.h)) * sc.h; };

    DelayMarginBracket br;
    double hi = snap(tau_hi);
    if (!(hi > 0.0)) {
        throw std::invalid_argument("empirical_delay_margin: tau_hi is below the grid resolution");
    }
    const StabilityVerdict top = classify_with_baseline(sc, hi, baseline);
    ++br.probes;
    if (top.classification != StabilityVerdict::Kind::diverged) {
        throw std::invalid_argument(
            top.classification == StabilityVerdict::Kind::stable
                ? "empirical_delay_margin: the loop is still stable at tau_hi; raise the upper probe"
                : "empirical_delay_margin: the tau_hi probe is inconclusive, not diverged; raise the "
                  "upper probe or the horizon");
    }
    double lo = 0.0;
    while (br.probes < max_probes && hi - lo > 2.0 * sc.h * (1.0 + 1e-12)) {
        const double mid = snap(0.5 * (lo + hi));
        if (!(mid > lo) || !(mid < hi)) break;
        const StabilityVerdict v = classify_with_baseline(sc, mid, baseline);
        ++br.probes;
        if (v.classification == StabilityVerdict::Kind::stable) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    br.lower = lo;
    br.upper = hi;
    return br;
}

}  // namespace l1margin
