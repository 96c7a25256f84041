#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "l1margin/l1ctrl.hpp"
#include "l1margin/linsys.hpp"

namespace l1margin {

// =============================================================================
// Scenario description
// =============================================================================

/// Named signal catalog entry. Sinusoids are amplitude * sin(omega t + phase);
/// steps switch from 0 to amplitude at t_on.
struct SignalSpec {
    enum class Kind { zero, constant, sinusoid, step };
    Kind kind = Kind::zero;
    double amplitude = 0.0;
    double omega = 0.0;
    double phase = 0.0;
    double t_on = 0.0;

    [[nodiscard]] double eval(double t) const;
    [[nodiscard]] double deriv(double t) const;
    [[nodiscard]] double sup_abs() const;
    [[nodiscard]] double sup_abs_deriv() const;
};

/// One closed-loop experiment: controller configuration, declared uncertainty
/// sets, the realized true parameters, exogenous signals, and run controls.
struct Scenario {
    std::string name;
    ControllerConfig cfg;
    UncertaintySets sets;
    Eigen::VectorXd theta;   // realized plant uncertainty, inside the declared box
    double omega = 1.0;      // realized input gain, inside [omega0_lo, omega0_hi]
    SignalSpec sigma;
    SignalSpec r;
    Eigen::VectorXd x0;
    double tau = 0.0;        // output measurement delay, seconds
    double gain = 1.0;       // multiplicative loop-gain perturbation on omega
    double h = 1e-5;
    double t_end = 10.0;
    double blowup_threshold = 1e6;
    double stable_envelope = 50.0;  // stable when peak <= envelope * no-delay peak
    int record_stride = 1;

    /// Effective plant input gain seen by the loop.
    [[nodiscard]] double omega_eff() const { return gain * omega; }

    void validate() const;
};

// =============================================================================
// Delay line
// =============================================================================

/// Fixed-depth ring of node samples for a vector signal on the integration
/// grid. The delayed value is zero before one full delay has elapsed; stage
/// points between nodes are linearly interpolated.
class DelayLine {
  public:
    DelayLine(Eigen::Index dim, Eigen::Index depth);

    void push(const double* node_value);

    /// Value of the delayed signal at node index `idx = i - depth` plus
    /// fraction `frac` in [0, 1]. Requires the nodes up to idx + 1 pushed
    /// (which the integration order guarantees).
    void sample(Eigen::Index idx, double frac, double* out) const;

    [[nodiscard]] Eigen::Index depth() const { return depth_; }

  private:
    Eigen::Index dim_;
    Eigen::Index depth_;
    Eigen::Index count_ = 0;  // nodes pushed so far
    std::vector<double> ring_;
};

// =============================================================================
// Traces and verdicts
// =============================================================================

/// Recorded closed-loop run. Component columns are indexed [component][sample].
struct SimTrace {
    double h = 0.0;
    int stride = 1;
    double tau_eff = 0.0;
    std::vector<double> t;
    std::vector<std::vector<double>> x;
    std::vector<std::vector<double>> xhat;
    std::vector<std::vector<double>> xtilde;
    std::vector<std::vector<double>> theta_hat;
    std::vector<double> u;
    std::vector<double> sigma_hat;
    std::vector<double> omega_hat;
    std::vector<double> r;
    std::vector<double> sigma;
    std::vector<double> rtilde;
    std::vector<double> eta;
    double peak_x_inf = 0.0;
    double diverged_at = -1.0;  // < 0 when the run completed

    [[nodiscard]] bool diverged() const { return diverged_at >= 0.0; }
};

/// Recorded linear-system run (reference system or delayed LTI realization).
struct LtiTrace {
    double h = 0.0;
    int stride = 1;
    std::vector<double> t;
    std::vector<std::vector<double>> x;
    std::vector<double> u;
    double peak_x_inf = 0.0;
    double diverged_at = -1.0;

    [[nodiscard]] bool diverged() const { return diverged_at >= 0.0; }
};

struct StabilityVerdict {
    enum class Kind { stable, diverged, inconclusive };
    Kind classification = Kind::inconclusive;
    double peak_x_inf = 0.0;
    double divergence_time = -1.0;  // < 0 when the run completed
    double baseline_peak = 0.0;     // no-delay peak used as the envelope reference
};

struct EquivalenceReport {
    double tau_eff = 0.0;
    double x_residual = 0.0;
    double u_residual = 0.0;
    double x_scale = 0.0;
    double u_scale = 0.0;
    double x_residual_rel = 0.0;
    double u_residual_rel = 0.0;
};

struct DelayMarginBracket {
    double lower = 0.0;
    double upper = 0.0;
    int probes = 0;
};

// =============================================================================
// Simulation engines
// =============================================================================

/// Simulate the adaptive closed loop: plant driven by the realized (theta,
/// omega, sigma), controller fed the tau-delayed plant state, both advanced
/// jointly by RK4 on the scenario grid. Records every record_stride-th node,
/// including the realized-error drive rtilde and the delay mismatch eta.
/// Step-guard violations from the controller propagate.
[[nodiscard]] SimTrace simulate_closed_loop(const Scenario& sc);

/// Simulate the ideal (non-adaptive) reference system: the same plant with the
/// control signal produced by C(s)/omega acting on the true-parameter feedback.
[[nodiscard]] LtiTrace simulate_reference(const Scenario& sc);

/// Simulate the delayed LTI realization driven by a recorded rtilde sequence
/// (one sample per grid node; empty means identically zero). Zero initial
/// conditions; the internal loop is closed through strictly proper blocks or
/// the delay, which prepare_controller has already verified.
[[nodiscard]] LtiTrace simulate_lti_delayed(const Scenario& sc, const std::vector<double>& rtilde);

/// Feed the rtilde recorded in an adaptive run into the delayed LTI
/// realization and compare: x_l against the delayed plant state and u_l
/// against u. The trace must cover the scenario grid at stride 1. Residuals
/// are reported both absolute and relative to the respective peak magnitudes.
[[nodiscard]] EquivalenceReport verify_equivalence(const SimTrace& adaptive, const Scenario& sc);

/// Convenience overload that runs the adaptive loop itself first.
[[nodiscard]] EquivalenceReport verify_equivalence(const Scenario& sc);

/// Classify the loop at delay tau against the scenario's own no-delay peak.
[[nodiscard]] StabilityVerdict stability_probe(const Scenario& sc, double tau);

/// Bisect between a stable tau = 0 and a diverging tau_hi down to grid
/// resolution. Inconclusive probes count as unstable, which keeps the lower
/// edge of the bracket certified by an actually stable run.
[[nodiscard]] DelayMarginBracket empirical_delay_margin(const Scenario& sc, double tau_hi,
                                                        int max_probes = 40);

}  // namespace l1margin
