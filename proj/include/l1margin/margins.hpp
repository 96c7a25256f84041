#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "l1margin/l1ctrl.hpp"
#include "l1margin/linsys.hpp"

namespace l1margin {

// =============================================================================
// Report types
// =============================================================================

/// Gain-crossover search result: phase margin (rad) at the crossover (rad/s).
struct CrossoverResult {
    double phase_margin = 0.0;
    double crossover = 0.0;
};

/// One vertex of the worst-case sweep. When the margin search fails, ok is
/// false and note carries the diagnostic; failed vertices never enter the min.
struct SweepEntry {
    Eigen::VectorXd theta;
    double omega = 0.0;
    double phase_margin = 0.0;
    double crossover = 0.0;
    double delay_margin = 0.0;
    bool ok = false;
    std::string note;
};

/// Worst-case sweep over the uncertainty box: the most conservative delay
/// margin, the vertex attaining it, and the full table (sorted by vertex key).
struct WorstCaseReport {
    double min_delay_margin = 0.0;
    SweepEntry argmin;
    std::vector<SweepEntry> table;
    int skipped = 0;
};

/// Transient-performance bounds. gamma2 requires an output direction c_o whose
/// scalar plant c_o'H(s) is minimum-phase with relative degree one; when none
/// is supplied or found, gamma2 is absent and note says why.
struct BoundReport {
    double theta_m = 0.0;
    double xtilde_bound = 0.0;
    double gamma1 = 0.0;
    std::optional<double> gamma2;
    std::optional<Eigen::VectorXd> c_o;
    std::string note;
};

/// Adaptation-gain sizing formulas for delayed operation. delta_admissible
/// reports whether the projection bound delta strictly dominates the supplied
/// disturbance ceiling delta_n, as the set-choice rule requires.
struct EpsilonCReport {
    double theta_m_tau = 0.0;
    double epsilon_c = 0.0;
    double gamma_c_min = 0.0;
    bool delta_admissible = false;
};

// =============================================================================
// Filter and open-loop construction
// =============================================================================

/// The control low-pass filter C(s) = omega*k*D / (1 + omega*k*D).
/// Throws when the result is unstable, not strictly proper, or C(0) != 1.
[[nodiscard]] RationalTF control_filter(double omega, double k, const RationalTF& D);

/// Open-loop transfer function omega*k*D(s) * (1 + theta' Hbar(s)).
[[nodiscard]] RationalTF open_loop_Ho(const Eigen::MatrixXd& A_m, const Eigen::VectorXd& b,
                                      const Eigen::VectorXd& theta, double omega, double k,
                                      const RationalTF& D);

/// Same loop assembled the long way round as C/(1-C) * (1 + theta' Hbar);
/// kept unreduced so the two construction paths can be cross-checked.
[[nodiscard]] RationalTF open_loop_Ho_direct(const Eigen::MatrixXd& A_m, const Eigen::VectorXd& b,
                                             const Eigen::VectorXd& theta, double omega, double k,
                                             const RationalTF& D);

// =============================================================================
// Margin computations
// =============================================================================

/// Phase margin at the gain crossover: |Ho| - 1 sign changes on the grid are
/// bisected to 1e-8 relative in omega and pm = pi + arg Ho(i omega_c), folded
/// into (-pi, pi]. With several crossings the smallest margin wins. Throws
/// when |Ho| never crosses 1 on the grid span.
[[nodiscard]] CrossoverResult phase_margin(const RationalTF& Ho, const FrequencyGrid& grid);

/// phase_margin on the default grid, widened by up to three decades each way
/// when the crossover lies outside the initial span.
[[nodiscard]] CrossoverResult phase_margin_auto(const RationalTF& Ho);

/// Time-delay margin: the smallest pm / omega_c over the unity-gain crossings,
/// or zero when a crossing already sits at or past -180 degrees.
[[nodiscard]] double time_delay_margin(const RationalTF& Ho, const FrequencyGrid& grid);

/// Most conservative delay margin over the uncertainty box: a per-axis grid on
/// the theta box (vertices always included) crossed with the omega interval's
/// endpoints plus five interior log-spaced points.
[[nodiscard]] WorstCaseReport worst_case_delay_margin(const Eigen::MatrixXd& A_m,
                                                      const Eigen::VectorXd& b,
                                                      const Eigen::VectorXd& theta_lo,
                                                      const Eigen::VectorXd& theta_hi,
                                                      double omega_lo, double omega_hi, double k,
                                                      const RationalTF& D, int theta_density = 21);

/// Static-gain interval [omega_l/omega_l0, omega_u/omega_u0] guaranteed by the
/// projection-set enlargement. Requires 0 < omega_l < omega_l0 < omega_u0 < omega_u.
[[nodiscard]] std::pair<double, double> gain_margin_interval(double omega0_lo, double omega0_hi,
                                                             double omega_lo, double omega_hi);

// =============================================================================
// Stability requirement and bound evaluators
// =============================================================================

/// L1-gain stability requirement ||G||_L1 * L < 1 with G = H(s)(1 - C(s)) and
/// L the largest column-sum of |theta| over the box. C depends on the unknown
/// omega, so the interval endpoints plus three interior log-spaced samples are
/// swept and the worst value returned.
[[nodiscard]] std::pair<double, bool> check_l1_condition(
    const Eigen::MatrixXd& A_m, const Eigen::VectorXd& b, const Eigen::VectorXd& theta_lo,
    const Eigen::VectorXd& theta_hi, double omega_lo, double omega_hi, double k,
    const RationalTF& D);

/// Worst-case adaptation energy over the projection sets:
/// max_theta sum 4 theta_i^2 + 4 delta^2 + 4 (omega_hi-omega_lo)^2
///   + 2 (lambda_max(P)/lambda_min(Q)) d_sigma delta.
[[nodiscard]] double theta_m_lemma5(const Eigen::VectorXd& theta_lo,
                                    const Eigen::VectorXd& theta_hi, double delta, double omega_lo,
                                    double omega_hi, double d_sigma, const Eigen::MatrixXd& P,
                                    const Eigen::MatrixXd& Q);

/// Output directions whose scalar plant c_o'H is minimum-phase with relative
/// degree one: tries c, the basis vectors, their pairwise sums, and c + e_j;
/// returns the first acceptable candidate. Throws when none qualifies.
[[nodiscard]] Eigen::VectorXd find_co(const Eigen::MatrixXd& A_m, const Eigen::VectorXd& b,
                                      const Eigen::VectorXd& c);

/// Transient bounds for the realized plant (theta, omega): the prediction-error
/// ceiling sqrt(theta_m / (lambda_min(P) Gamma_c)), the state deviation bound
/// gamma1, and when possible the control deviation bound gamma2.
/// Throws when the L1-gain condition fails at the realized omega.
[[nodiscard]] BoundReport transient_bounds(const ControllerConfig& cfg, const UncertaintySets& sets,
                                           const Eigen::VectorXd& theta, double omega,
                                           double gamma_c,
                                           const std::optional<Eigen::VectorXd>& c_o = {});

/// Adaptation-gain sizing for delayed operation: evaluates the delayed-run
/// adaptation energy theta_m(eps_b, tau) and the gain floor
/// epsilon_c = ||C (1/(c_o'H)) c_o'||_L1 sqrt(theta_m / (lambda_max(P) eps_b^2)),
/// with the disturbance ceilings delta_n, delta_d measured by the caller.
[[nodiscard]] EpsilonCReport epsilon_c_eval(double epsilon_b, double tau, double delta_n,
                                            double delta_d, const UncertaintySets& sets,
                                            const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q,
                                            const Eigen::VectorXd& c_o, const StateSpace& H,
                                            const RationalTF& C);

// =============================================================================
// Grids
// =============================================================================

/// Default analysis grid: 2000 log-spaced points over [1e-3, 1e4] rad/s.
[[nodiscard]] FrequencyGrid default_margin_grid();

}  // namespace l1margin
