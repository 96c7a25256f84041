#include "l1margin/margins.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <future>
#include <limits>
#include <stdexcept>

namespace l1margin {

namespace {

std::vector<double> poly_sub(const std::vector<double>& a, const std::vector<double>& b) {
    return poly_add(a, poly_scale(b, -1.0));
}

// theta' Hbar(s) as a scalar rational function.
RationalTF theta_hbar(const Eigen::MatrixXd& A_m, const Eigen::VectorXd& b,
                      const Eigen::VectorXd& theta) {
    StateSpace ss;
    ss.A = hbar_realization(A_m, b, theta);
    ss.b = b;
    ss.c = theta;
    return to_transfer_function(ss);
}

// H(s)(1 - C(s)) row by row; the induced norm is the worst row gain.
double g_norm(const Eigen::MatrixXd& A_m, const Eigen::VectorXd& b, const RationalTF& C) {
    const std::vector<double> omc_num = poly_sub(C.den, C.num);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < A_m.rows(); ++i) {
        StateSpace row;
        row.A = A_m;
        row.b = b;
        row.c = Eigen::VectorXd::Unit(A_m.rows(), i);
        const RationalTF h_i = to_transfer_function(row);
        RationalTF g_i;
        g_i.num = poly_mul(h_i.num, omc_num);
        g_i.den = poly_mul(h_i.den, C.den);
        worst = std::max(worst, l1_gain(g_i));
    }
    return worst;
}

double box_l(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    double l = 0.0;
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        l += std::max(std::abs(lo(i)), std::abs(hi(i)));
    }
    return l;
}

// C(s)/(c_o' H(s)) kept unreduced; biproper by construction when c_o' b != 0.
RationalTF filter_over_coh(const RationalTF& C, const Eigen::MatrixXd& A_m,
                           const Eigen::VectorXd& b, const Eigen::VectorXd& c_o) {
    StateSpace ss;
    ss.A = A_m;
    ss.b = b;
    ss.c = c_o;
    const RationalTF coh = to_transfer_function(ss);
    RationalTF out;
    out.num = poly_mul(C.num, coh.den);
    out.den = poly_mul(C.den, coh.num);
    return out;
}

// Acceptance test behind find_co: relative degree one and strictly
// minimum-phase zeros.
bool co_acceptable(const Eigen::MatrixXd& A_m, const Eigen::VectorXd& b,
                   const Eigen::VectorXd& cand) {
    if (std::abs(cand.dot(b)) <= 1e-12 * (1.0 + cand.norm() * b.norm())) return false;
    StateSpace ss;
    ss.A = A_m;
    ss.b = b;
    ss.c = cand;
    const RationalTF tf = to_transfer_function(ss);
    const std::vector<double> num = poly_trim(tf.num);
    if (poly_degree(num) != static_cast<int>(A_m.rows()) - 1) return false;
    if (poly_degree(num) == 0) return true;
    const Eigen::VectorXcd zeros = poly_roots(num);
    for (Eigen::Index i = 0; i < zeros.size(); ++i) {
        if (zeros(i).real() >= -1e-9) return false;
    }
    return true;
}

std::vector<double> omega_samples(double lo, double hi, int interior) {
    if (!(lo > 0.0) || !(hi >= lo)) {
        throw std::invalid_argument("omega interval must satisfy 0 < lo <= hi");
    }
    std::vector<double> w{lo};
    if (hi > lo) {
        const double llo = std::log(lo), lhi = std::log(hi);
        for (int j = 1; j <= interior; ++j) {
            w.push_back(std::exp(llo + (lhi - llo) * j / (interior + 1)));
        }
        w.push_back(hi);
    }
    return w;
}

}  // namespace

// =============================================================================
// Filter and open-loop construction
// =============================================================================

RationalTF control_filter(double omega, double k, const RationalTF& D) {
    if (!(omega > 0.0) || !(k > 0.0)) {
        throw std::invalid_argument("control_filter: omega and k must be positive");
    }
    RationalTF C;
    C.num = poly_trim(poly_scale(D.num, omega * k));
    C.den = poly_trim(poly_add(D.den, C.num));
    if (poly_degree(C.num) >= poly_degree(C.den)) {
        throw std::invalid_argument("control_filter: C(s) is not strictly proper");
    }
    const Eigen::VectorXcd poles = poly_roots(C.den);
    for (Eigen::Index i = 0; i < poles.size(); ++i) {
        if (poles(i).real() >= -1e-12) {
            throw std::invalid_argument("control_filter: C(s) is not stable");
        }
    }
    const std::complex<double> dc = poly_eval(C.num, 0.0) / poly_eval(C.den, 0.0);
    if (std::abs(dc - 1.0) > 1e-9) {
        throw std::invalid_argument("control_filter: C(0) must equal 1");
    }
    return C;
}

RationalTF open_loop_Ho(const Eigen::MatrixXd& A_m, const Eigen::VectorXd& b,
                        const Eigen::VectorXd& theta, double omega, double k,
                        const RationalTF& D) {
    const RationalTF th = theta_hbar(A_m, b, theta);
    RationalTF ho;
    ho.num = poly_scale(poly_mul(D.num, poly_add(th.den, th.num)), omega * k);
    ho.den = poly_mul(D.den, th.den);
    ho.num = poly_trim(ho.num);
    ho.den = poly_trim(ho.den);
    const double num_scale = *std::max_element(ho.num.begin(), ho.num.end(),
                                               [](double a, double c) {
                                                   return std::abs(a) < std::abs(c);
                                               });
    const double den_scale = *std::max_element(ho.den.begin(), ho.den.end(),
                                               [](double a, double c) {
                                                   return std::abs(a) < std::abs(c);
                                               });
    if (std::abs(poly_eval(ho.num, 0.0)) <= 1e-9 * std::abs(num_scale) &&
        std::abs(poly_eval(ho.den, 0.0)) <= 1e-9 * std::abs(den_scale)) {
        throw std::runtime_error(
            "open_loop_Ho: numerator and denominator share a root at s = 0; the loop gain is "
            "indeterminate there");
    }
    return ho;
}

RationalTF open_loop_Ho_direct(const Eigen::MatrixXd& A_m, const Eigen::VectorXd& b,
                               const Eigen::VectorXd& theta, double omega, double k,
                               const RationalTF& D) {
    const RationalTF C = control_filter(omega, k, D);
    const RationalTF th = theta_hbar(A_m, b, theta);
    // C/(1-C) = C.num*C.den / (C.den*(C.den - C.num)), deliberately unreduced.
    RationalTF ho;
    ho.num = poly_mul(poly_mul(C.num, C.den), poly_add(th.den, th.num));
    ho.den = poly_mul(poly_mul(C.den, poly_sub(C.den, C.num)), th.den);
    return ho;
}

// =============================================================================
// Margin computations
// =============================================================================

namespace {

struct Crossing {
    double omega = 0.0;
    double pm = 0.0;  // principal phase margin, in (-pi, pi]
};

// Every unity-gain crossing of |Ho(iw)| on the grid, with the phase margin taken
// from the principal phase at the crossing: pm = pi + arg Ho(iwc), folded into
// (-pi, pi]. The fold matters — an open loop whose phase winds past +180 deg has
// the same distance-to-instability as its principal representative, and a
// grid-unwrapped branch would inflate pm by full turns.
std::vector<Crossing> gain_crossings(const RationalTF& Ho, const FrequencyGrid& grid) {
    const std::size_t n = grid.omegas.size();
    if (n < 2) throw std::invalid_argument("phase_margin: grid needs at least two points");
    std::vector<double> logmag(n);
    for (std::size_t i = 0; i < n; ++i) {
        logmag[i] = std::log(std::abs(freq_response(Ho, grid.omegas[i])));
    }

    std::vector<Crossing> out;
    auto record = [&](double wc) {
        const double two_pi = 2.0 * M_PI;
        double pm = M_PI + std::arg(freq_response(Ho, wc));  // in [0, 2*pi]
        pm -= two_pi * std::floor(pm / two_pi);
        if (pm > M_PI) pm -= two_pi;
        out.push_back({wc, pm});
    };
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (logmag[i] == 0.0) {
            record(grid.omegas[i]);
            continue;
        }
        if (logmag[i] * logmag[i + 1] > 0.0) continue;
        double a = grid.omegas[i], bw = grid.omegas[i + 1];
        double fa = logmag[i];
        while ((bw - a) > 1e-8 * (0.5 * (a + bw))) {
            const double mid = std::sqrt(a * bw);
            const double fm = std::log(std::abs(freq_response(Ho, mid)));
            if (fm == 0.0) {
                a = bw = mid;
                break;
            }
            if (fa * fm < 0.0) {
                bw = mid;
            } else {
                a = mid;
                fa = fm;
            }
        }
        record(0.5 * (a + bw));
    }
    if (logmag[n - 1] == 0.0) record(grid.omegas[n - 1]);
    if (out.empty()) {
        throw std::runtime_error("phase_margin: |Ho| never crosses 1 on [" +
                                 std::to_string(grid.omegas.front()) + ", " +
                                 std::to_string(grid.omegas.back()) +
                                 "] rad/s; extend the frequency grid");
    }
    return out;
}

}  // namespace

CrossoverResult phase_margin(const RationalTF& Ho, const FrequencyGrid& grid) {
    const std::vector<Crossing> xs = gain_crossings(Ho, grid);
    CrossoverResult best{xs[0].pm, xs[0].omega};
    for (const Crossing& x : xs) {
        if (x.pm < best.phase_margin) best = {x.pm, x.omega};
    }
    return best;
}

namespace {

// Default grid, widened a decade at a time until a unity-gain crossing appears.
FrequencyGrid widened_grid(const RationalTF& Ho) {
    double lo = 1e-3, hi = 1e4;
    for (int attempt = 0;; ++attempt) {
        FrequencyGrid g = log_grid(lo, hi, 2000);
        try {
            gain_crossings(Ho, g);
            return g;
        } catch (const std::runtime_error&) {
            if (attempt == 3) throw;
            lo /= 10.0;
            hi *= 10.0;
        }
    }
}

}  // namespace

CrossoverResult phase_margin_auto(const RationalTF& Ho) {
    return phase_margin(Ho, widened_grid(Ho));
}

double time_delay_margin(const RationalTF& Ho, const FrequencyGrid& grid) {
    // Delay tau rotates the phase at a unity-gain crossing by -w*tau; the first
    // crossing to reach -180 deg sets the margin. A crossing already at or past
    // -180 deg means no delay is tolerated.
    double margin = std::numeric_limits<double>::infinity();
    for (const Crossing& x : gain_crossings(Ho, grid)) {
        if (x.pm <= 0.0) return 0.0;
        margin = std::min(margin, x.pm / x.omega);
    }
    return margin;
}

WorstCaseReport worst_case_delay_margin(const Eigen::MatrixXd& A_m, const Eigen::VectorXd& b,
                                        const Eigen::VectorXd& theta_lo,
                                        const Eigen::VectorXd& theta_hi, double omega_lo,
                                        double omega_hi, double k, const RationalTF& D,
                                        int theta_density) {
    const Eigen::Index n = A_m.rows();
    if (theta_lo.size() != n || theta_hi.size() != n) {
        throw std::invalid_argument("worst_case_delay_margin: theta box dimension mismatch");
    }
    if ((theta_hi - theta_lo).minCoeff() < 0.0) {
        throw std::invalid_argument("worst_case_delay_margin: theta box is empty");
    }
    if (theta_density < 2) {
        throw std::invalid_argument("worst_case_delay_margin: need at least two points per axis");
    }
    auto axis_value = [&](Eigen::Index ax, int idx) {
        if (idx == theta_density - 1) return theta_hi(ax);
        return theta_lo(ax) + (theta_hi(ax) - theta_lo(ax)) * idx / (theta_density - 1);
    };
    const std::vector<double> omegas = omega_samples(omega_lo, omega_hi, 5);

    // One task per leading-axis index keeps assembly order deterministic.
    auto run_slice = [&](int i0) {
        std::vector<SweepEntry> slice;
        std::vector<int> idx(static_cast<std::size_t>(n), 0);
        idx[0] = i0;
        for (;;) {
            Eigen::VectorXd theta(n);
            for (Eigen::Index ax = 0; ax < n; ++ax) theta(ax) = axis_value(ax, idx[ax]);
            for (double w : omegas) {
                SweepEntry e;
                e.theta = theta;
                e.omega = w;
                try {
                    const RationalTF ho = open_loop_Ho(A_m, b, theta, w, k, D);
                    const FrequencyGrid g = widened_grid(ho);
                    const CrossoverResult cr = phase_margin(ho, g);
                    e.phase_margin = cr.phase_margin;
                    e.crossover = cr.crossover;
                    e.delay_margin = time_delay_margin(ho, g);
                    e.ok = true;
                } catch (const std::exception& ex) {
                    e.note = ex.what();
                }
                slice.push_back(std::move(e));
            }
            // Odometer over the trailing axes; the leading axis stays fixed.
            Eigen::Index ax = n - 1;
            for (; ax >= 1; --ax) {
                if (++idx[ax] < theta_density) break;
                idx[ax] = 0;
            }
            if (ax == 0) break;
        }
        return slice;
    };

    std::vector<std::future<std::vector<SweepEntry>>> futures;
    futures.reserve(theta_density);
    for (int i0 = 0; i0 < theta_density; ++i0) {
        futures.push_back(std::async(std::launch::async, run_slice, i0));
    }
    WorstCaseReport rep;
    bool found = false;
    for (auto& f : futures) {
        for (SweepEntry& e : f.get()) {
            if (e.ok) {
                if (!found || e.delay_margin < rep.min_delay_margin) {
                    rep.min_delay_margin = e.delay_margin;
                    rep.argmin = e;
                    found = true;
                }
            } else {
                ++rep.skipped;
            }
            rep.table.push_back(std::move(e));
        }
    }
    if (!found) {
        throw std::runtime_error(
            "worst_case_delay_margin: no sweep vertex produced a usable crossover");
    }
    return rep;
}

std::pair<double, double> gain_margin_interval(double omega0_lo, double omega0_hi, double omega_lo,
                                               double omega_hi) {
    if (!(0.0 < omega_lo && omega_lo < omega0_lo && omega0_lo < omega0_hi &&
          omega0_hi < omega_hi)) {
        throw std::invalid_argument(
            "gain_margin_interval: need 0 < omega_l < omega_l0 < omega_u0 < omega_u");
    }
    return {omega_lo / omega0_lo, omega_hi / omega0_hi};
}

// =============================================================================
// Stability requirement and bound evaluators
// =============================================================================

std::pair<double, bool> check_l1_condition(const Eigen::MatrixXd& A_m, const Eigen::VectorXd& b,
                                           const Eigen::VectorXd& theta_lo,
                                           const Eigen::VectorXd& theta_hi, double omega_lo,
                                           double omega_hi, double k, const RationalTF& D) {
    if (theta_lo.size() != A_m.rows() || theta_hi.size() != A_m.rows()) {
        throw std::invalid_argument("check_l1_condition: theta box dimension mismatch");
    }
    if (!is_hurwitz(A_m)) {
        throw std::invalid_argument("check_l1_condition: A_m must be Hurwitz");
    }
    const double l = box_l(theta_lo, theta_hi);
    double value = 0.0;
    for (double w : omega_samples(omega_lo, omega_hi, 3)) {
        const RationalTF C = control_filter(w, k, D);
        if (l == 0.0) continue;
        value = std::max(value, g_norm(A_m, b, C) * l);
    }
    return {value, value < 1.0};
}

double theta_m_lemma5(const Eigen::VectorXd& theta_lo, const Eigen::VectorXd& theta_hi,
                      double delta, double omega_lo, double omega_hi, double d_sigma,
                      const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q) {
    if (theta_lo.size() != theta_hi.size()) {
        throw std::invalid_argument("theta_m_lemma5: theta box dimension mismatch");
    }
    if (delta < 0.0 || d_sigma < 0.0 || omega_hi < omega_lo) {
        throw std::invalid_argument("theta_m_lemma5: bounds must be ordered and nonnegative");
    }
    double sum_sq = 0.0;
    for (Eigen::Index i = 0; i < theta_lo.size(); ++i) {
        sum_sq += std::max(theta_lo(i) * theta_lo(i), theta_hi(i) * theta_hi(i));
    }
    const SpectralSummary s = spectral_summary(P, Q);
    const double width = omega_hi - omega_lo;
    return 4.0 * sum_sq + 4.0 * delta * delta + 4.0 * width * width +
           2.0 * (s.lambda_max_p / s.lambda_min_q) * d_sigma * delta;
}

Eigen::VectorXd find_co(const Eigen::MatrixXd& A_m, const Eigen::VectorXd& b,
                        const Eigen::VectorXd& c) {
    const Eigen::Index n = A_m.rows();
    std::vector<Eigen::VectorXd> candidates;
    candidates.push_back(c);
    for (Eigen::Index j = 0; j < n; ++j) candidates.push_back(Eigen::VectorXd::Unit(n, j));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            candidates.push_back(Eigen::VectorXd::Unit(n, i) + Eigen::VectorXd::Unit(n, j));
        }
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        candidates.push_back(c + Eigen::VectorXd::Unit(n, j));
    }
    for (const Eigen::VectorXd& cand : candidates) {
        if (co_acceptable(A_m, b, cand)) return cand;
    }
    throw std::runtime_error(
        "find_co: no candidate direction gives a minimum-phase relative-degree-one scalar plant");
}

BoundReport transient_bounds(const ControllerConfig& cfg, const UncertaintySets& sets,
                             const Eigen::VectorXd& theta, double omega, double gamma_c,
                             const std::optional<Eigen::VectorXd>& c_o) {
    if (!(gamma_c > 0.0)) throw std::invalid_argument("transient_bounds: gamma_c must be positive");
    if (!(omega > 0.0)) throw std::invalid_argument("transient_bounds: omega must be positive");
    const Eigen::Index n = cfg.A_m.rows();
    if (theta.size() != n) throw std::invalid_argument("transient_bounds: theta dimension mismatch");

    const Eigen::MatrixXd Q =
        cfg.Q.size() > 0 ? cfg.Q : Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd P = lyapunov_solve(cfg.A_m, Q);
    const SpectralSummary s = spectral_summary(P, Q);

    BoundReport rep;
    rep.theta_m = theta_m_lemma5(sets.theta_lo, sets.theta_hi, sets.delta, sets.omega_lo,
                                 sets.omega_hi, sets.d_sigma, P, Q);
    rep.xtilde_bound = std::sqrt(rep.theta_m / (s.lambda_min_p * gamma_c));

    const RationalTF C = control_filter(omega, cfg.k, cfg.D);
    const double c_gain = l1_gain(C);
    const double g_gain = g_norm(cfg.A_m, cfg.b, C);
    const double l = box_l(sets.theta_lo, sets.theta_hi);
    const double slack = 1.0 - g_gain * l;
    if (slack <= 0.0) {
        throw std::runtime_error("transient_bounds: L1-gain stability requirement fails (value " +
                                 std::to_string(g_gain * l) + ")");
    }
    const double root = std::sqrt(rep.theta_m / (s.lambda_max_p * gamma_c));
    rep.gamma1 = c_gain / slack * root;

    Eigen::VectorXd co;
    if (c_o.has_value()) {
        if (!co_acceptable(cfg.A_m, cfg.b, *c_o)) {
            rep.note =
                "gamma2 omitted: supplied c_o does not give a minimum-phase relative-degree-one "
                "scalar plant";
            return rep;
        }
        co = *c_o;
    } else {
        try {
            co = find_co(cfg.A_m, cfg.b, cfg.c);
        } catch (const std::runtime_error& ex) {
            rep.note = std::string("gamma2 omitted: ") + ex.what();
            return rep;
        }
    }
    const double term1 = (c_gain / omega) * theta.cwiseAbs().sum() * rep.gamma1;
    const double inv_gain = l1_gain(filter_over_coh(C, cfg.A_m, cfg.b, co));
    const double term2 = (inv_gain / omega) * co.cwiseAbs().sum() * root;
    rep.gamma2 = term1 + term2;
    rep.c_o = co;
    return rep;
}

EpsilonCReport epsilon_c_eval(double epsilon_b, double tau, double delta_n, double delta_d,
                              const UncertaintySets& sets, const Eigen::MatrixXd& P,
                              const Eigen::MatrixXd& Q, const Eigen::VectorXd& c_o,
                              const StateSpace& H, const RationalTF& C) {
    if (!(epsilon_b > 0.0)) throw std::invalid_argument("epsilon_c_eval: epsilon_b must be positive");
    if (tau < 0.0) throw std::invalid_argument("epsilon_c_eval: tau must be nonnegative");
    if (delta_n < 0.0 || delta_d < 0.0) {
        throw std::invalid_argument("epsilon_c_eval: disturbance ceilings must be nonnegative");
    }
    EpsilonCReport rep;
    // Same worst-case energy shape as Lemma 5, with the delayed-run derivative
    // ceiling delta_d in place of the disturbance rate bound.
    rep.theta_m_tau = theta_m_lemma5(sets.theta_lo, sets.theta_hi, sets.delta, sets.omega_lo,
                                     sets.omega_hi, delta_d, P, Q);
    const SpectralSummary s = spectral_summary(P, Q);
    double norm = 0.0;
    if (rep.theta_m_tau > 0.0) {
        RationalTF over;
        StateSpace coh_ss;
        coh_ss.A = H.A;
        coh_ss.b = H.b;
        coh_ss.c = c_o;
        const RationalTF coh = to_transfer_function(coh_ss);
        over.num = poly_mul(C.num, coh.den);
        over.den = poly_mul(C.den, coh.num);
        norm = l1_gain(over) * c_o.cwiseAbs().sum();
    }
    rep.epsilon_c = norm * std::sqrt(rep.theta_m_tau / s.lambda_max_p) / epsilon_b;
    rep.gamma_c_min = std::sqrt(rep.epsilon_c);
    rep.delta_admissible = sets.delta > delta_n;
    return rep;
}

// =============================================================================
// Grids
// =============================================================================

FrequencyGrid default_margin_grid() { return log_grid(1e-3, 1e4, 2000); }

}  // namespace l1margin
