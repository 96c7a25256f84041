// Command-line front end: scenario loading, subcommand dispatch, CSV/report
// emission. Exit codes: 0 success (simulate: loop stayed bounded), 2 simulate
// observed divergence, 1 any error or failed verification.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "l1margin/margins.hpp"
#include "l1margin/report.hpp"
#include "l1margin/scenario.hpp"
#include "l1margin/simulate.hpp"

namespace fs = std::filesystem;
using namespace l1margin;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// Common per-subcommand inputs.
struct Common {
    std::string scenario_path;
    std::string profile;
    std::string out_dir = ".";
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("scenario", c.scenario_path, "Scenario file")->required();
    cmd->add_option("--profile", c.profile,
                    "Profile to apply (default: $L1MARGIN_PROFILE, then 'desk')");
    cmd->add_option("--out", c.out_dir, "Output directory (created if missing)");
}

std::ofstream open_output(const fs::path& dir, const std::string& name,
                          std::vector<std::string>& outputs) {
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file " + p.string());
    outputs.push_back(name);
    return out;
}

void emit_manifest(const fs::path& dir, const std::string& command, const LoadedScenario& loaded,
                   double tau_eff, std::vector<std::string>& outputs) {
    RunManifest m;
    m.command = command;
    m.profile = loaded.profile;
    m.tau_eff = tau_eff;
    m.outputs = outputs;
    m.resolved = loaded.scenario;
    std::ofstream out = open_output(dir, "manifest.run", outputs);
    write_manifest(out, m);
}

// Margin computations shared by cmd_margins and cmd_verify.
MarginSummary summarize_margins(const Scenario& sc) {
    MarginSummary s;
    const RationalTF ho =
        open_loop_Ho(sc.cfg.A_m, sc.cfg.b, sc.theta, sc.omega, sc.cfg.k, sc.cfg.D);
    const FrequencyGrid grid = default_margin_grid();
    s.crossover = phase_margin(ho, grid);
    s.delay_margin = time_delay_margin(ho, grid);
    std::tie(s.l1_value, s.l1_holds) =
        check_l1_condition(sc.cfg.A_m, sc.cfg.b, sc.sets.theta_lo, sc.sets.theta_hi, sc.omega,
                           sc.omega, sc.cfg.k, sc.cfg.D);
    std::tie(s.l1_box_value, s.l1_box_holds) =
        check_l1_condition(sc.cfg.A_m, sc.cfg.b, sc.sets.theta_lo, sc.sets.theta_hi,
                           sc.sets.omega0_lo, sc.sets.omega0_hi, sc.cfg.k, sc.cfg.D);
    std::tie(s.gain_lo, s.gain_hi) = gain_margin_interval(sc.sets.omega0_lo, sc.sets.omega0_hi,
                                                          sc.sets.omega_lo, sc.sets.omega_hi);
    s.bounds = transient_bounds(sc.cfg, sc.sets, sc.theta, sc.omega, sc.cfg.gamma_c);
    return s;
}

// =============================================================================
// simulate
// =============================================================================

int cmd_simulate(const Common& c, const std::optional<double>& tau,
                 const std::optional<double>& gain) {
    LoadedScenario loaded = load_scenario_file(c.scenario_path, c.profile);
    Scenario& sc = loaded.scenario;
    if (tau) sc.tau = *tau;
    if (gain) sc.gain = *gain;
    sc.validate();

    std::string classification = "completed";
    std::string detail;
    double tau_eff = sc.tau;
    std::vector<std::string> outputs;
    const fs::path dir = c.out_dir;
    try {
        const SimTrace trace = simulate_closed_loop(sc);
        tau_eff = trace.tau_eff;
        {
            std::ofstream out = open_output(dir, "trace.csv", outputs);
            write_trace_csv(out, trace);
        }
        if (trace.diverged()) {
            classification = "diverged";
            detail = "state norm crossed " + fmt(sc.blowup_threshold) + " at t = " +
                     fmt(trace.diverged_at);
        } else {
            detail = "peak |x|_inf = " + fmt(trace.peak_x_inf);
        }
        std::ofstream out = open_output(dir, "verdict.txt", outputs);
        out << "classification: " << classification << '\n';
        out << "peak_x_inf: " << fmt(trace.peak_x_inf) << '\n';
        out << "diverged_at_s: " << fmt(trace.diverged_at) << '\n';
        out << "tau_eff_s: " << fmt(trace.tau_eff) << '\n';
    } catch (const StepGuardError& e) {
        // The estimate-rate budget is a divergence symptom under a fixed step:
        // report it as such rather than failing the invocation.
        classification = "diverged";
        detail = e.what();
        std::ofstream out = open_output(dir, "verdict.txt", outputs);
        out << "classification: diverged\n";
        out << "note: " << e.what() << '\n';
    }
    emit_manifest(dir, "simulate", loaded, tau_eff, outputs);
    std::cout << sc.name << ": " << classification << " (" << detail << ")\n";
    return classification == "completed" ? 0 : 2;
}

// =============================================================================
// margins
// =============================================================================

int cmd_margins(const Common& c, bool sweep) {
    const LoadedScenario loaded = load_scenario_file(c.scenario_path, c.profile);
    const Scenario& sc = loaded.scenario;
    const MarginSummary s = summarize_margins(sc);

    std::optional<WorstCaseReport> wc;
    std::vector<std::string> outputs;
    const fs::path dir = c.out_dir;
    if (sweep) {
        wc = worst_case_delay_margin(sc.cfg.A_m, sc.cfg.b, sc.sets.theta_lo, sc.sets.theta_hi,
                                     sc.sets.omega0_lo, sc.sets.omega0_hi, sc.cfg.k, sc.cfg.D);
        std::ofstream out = open_output(dir, "sweep.csv", outputs);
        write_sweep_csv(out, *wc);
    }
    {
        std::ofstream out = open_output(dir, "margins.txt", outputs);
        write_margin_report(out, sc, s, wc ? &*wc : nullptr);
    }
    emit_manifest(dir, "margins", loaded, sc.tau, outputs);
    write_margin_report(std::cout, sc, s, wc ? &*wc : nullptr);
    return 0;
}

// =============================================================================
// bode
// =============================================================================

int cmd_bode(const Common& c, double wmin, double wmax, int points, bool zero_theta) {
    const LoadedScenario loaded = load_scenario_file(c.scenario_path, c.profile);
    const Scenario& sc = loaded.scenario;
    const Eigen::VectorXd theta =
        zero_theta ? Eigen::VectorXd::Zero(sc.theta.size()).eval() : sc.theta;
    const RationalTF ho = open_loop_Ho(sc.cfg.A_m, sc.cfg.b, theta, sc.omega, sc.cfg.k, sc.cfg.D);
    std::vector<std::string> outputs;
    const fs::path dir = c.out_dir;
    {
        std::ofstream out = open_output(dir, "bode.csv", outputs);
        write_bode_csv(out, ho, log_grid(wmin, wmax, points));
    }
    emit_manifest(dir, "bode", loaded, sc.tau, outputs);
    std::cout << sc.name << ": wrote bode.csv (" << points << " points, [" << fmt(wmin) << ", "
              << fmt(wmax) << "] rad/s)\n";
    return 0;
}

// =============================================================================
// verify
// =============================================================================

int cmd_verify(const Common& c, const std::optional<double>& tau, bool corrupt) {
    LoadedScenario loaded = load_scenario_file(c.scenario_path, c.profile);
    Scenario& sc = loaded.scenario;
    if (tau) sc.tau = *tau;
    sc.validate();

    bool all_pass = true;
    std::ostringstream report;
    auto check = [&](const std::string& name, bool ok, const std::string& detail) {
        all_pass = all_pass && ok;
        report << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << '\n';
    };

    // 1. The delayed LTI realization reproduces the adaptive loop when driven
    //    by the recorded estimation-error signal.
    SimTrace adaptive = simulate_closed_loop(sc);
    if (corrupt) {
        // Test hook: damage the recorded trace so the equivalence check must
        // detect the mismatch.
        for (double& v : adaptive.u) v *= 1.1;
    }
    const EquivalenceReport eq = verify_equivalence(adaptive, sc);
    const double eq_tol = sc.tau > 0.0 ? 1e-3 : 1e-4;
    check("loop equivalence",
          eq.x_residual_rel <= eq_tol && eq.u_residual_rel <= eq_tol,
          "x residual " + fmt(eq.x_residual_rel) + " rel, u residual " + fmt(eq.u_residual_rel) +
              " rel, tolerance " + fmt(eq_tol));

    // Bound checks run on the no-delay loop, which is what the certificates
    // cover; the delayed run above reuses the same scenario otherwise.
    Scenario base = sc;
    base.tau = 0.0;
    const SimTrace nodelay = sc.tau == 0.0 && !corrupt ? adaptive : simulate_closed_loop(base);
    const BoundReport bounds = transient_bounds(sc.cfg, sc.sets, sc.theta, sc.omega, sc.cfg.gamma_c);

    // 2. The prediction error stays under the adaptation-energy ceiling.
    double xt_peak = 0.0;
    for (const auto& col : nodelay.xtilde) {
        for (double v : col) xt_peak = std::max(xt_peak, std::abs(v));
    }
    check("prediction error ceiling", xt_peak <= bounds.xtilde_bound,
          "peak |xtilde| " + fmt(xt_peak) + " vs bound " + fmt(bounds.xtilde_bound));

    // 3. The distance to the reference loop stays under the state bound.
    const LtiTrace reference = simulate_reference(base);
    double dev = 0.0;
    for (std::size_t i = 0; i < nodelay.x.size(); ++i) {
        for (std::size_t k = 0; k < nodelay.t.size(); ++k) {
            dev = std::max(dev, std::abs(nodelay.x[i][k] - reference.x[i][k]));
        }
    }
    check("state deviation bound", dev <= bounds.gamma1,
          "max |x - x_ref| " + fmt(dev) + " vs gamma1 " + fmt(bounds.gamma1));

    std::vector<std::string> outputs;
    const fs::path dir = c.out_dir;
    {
        std::ofstream out = open_output(dir, "verify.txt", outputs);
        out << report.str();
        out << (all_pass ? "result: pass\n" : "result: fail\n");
    }
    emit_manifest(dir, "verify", loaded, adaptive.tau_eff, outputs);
    std::cout << report.str();
    std::cout << (all_pass ? "result: pass\n" : "result: fail\n");
    return all_pass ? 0 : 1;
}

// =============================================================================
// l1gain
// =============================================================================

std::vector<double> parse_coeffs(const std::string& text, const std::string& which) {
    std::istringstream in(text);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size()) {
            throw std::runtime_error("invalid coefficient '" + tok + "' in --" + which);
        }
        out.push_back(v);
    }
    if (out.empty()) throw std::runtime_error("--" + which + " needs at least one coefficient");
    return out;
}

int cmd_l1gain(const std::string& num, const std::string& den) {
    RationalTF tf;
    tf.num = parse_coeffs(num, "num");
    tf.den = parse_coeffs(den, "den");
    const double gain = l1_gain(tf);  // evaluate before touching stdout
    std::cout << "l1_gain: " << fmt(gain) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive closed-loop simulation and stability-margin analysis"};
    app.require_subcommand(1);

    Common sim_c, mar_c, bod_c, ver_c;
    std::optional<double> sim_tau, sim_gain, ver_tau;
    bool sweep = false, zero_theta = false, corrupt = false;
    double wmin = 1e-2, wmax = 1e4;
    int points = 400;
    std::string num, den;

    CLI::App* sim = app.add_subcommand("simulate", "Run the adaptive closed loop");
    add_common(sim, sim_c);
    sim->add_option("--tau", sim_tau, "Override the output delay, seconds");
    sim->add_option("--gain", sim_gain, "Override the loop-gain perturbation");

    CLI::App* mar = app.add_subcommand("margins", "Compute stability margins and bounds");
    add_common(mar, mar_c);
    mar->add_flag("--sweep", sweep, "Sweep the declared uncertainty box");

    CLI::App* bod = app.add_subcommand("bode", "Export the open-loop frequency response");
    add_common(bod, bod_c);
    bod->add_option("--wmin", wmin, "Lowest frequency, rad/s");
    bod->add_option("--wmax", wmax, "Highest frequency, rad/s");
    bod->add_option("--points", points, "Grid points");
    bod->add_flag("--zero-theta", zero_theta, "Drop the uncertain feedback path");

    CLI::App* ver = app.add_subcommand("verify", "Check the run against its certificates");
    add_common(ver, ver_c);
    ver->add_option("--tau", ver_tau, "Override the output delay, seconds");
    ver->add_flag("--corrupt-trace", corrupt, "Damage the trace first (self-test hook)")
        ->group("");

    CLI::App* l1g = app.add_subcommand("l1gain", "Peak amplification of a transfer function");
    l1g->add_option("--num", num, "Numerator coefficients, ascending powers of s")->required();
    l1g->add_option("--den", den, "Denominator coefficients, ascending powers of s")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Collapse the library's exit-code zoo onto the documented contract:
        // zero for --help, one for any usage error.
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_c, sim_tau, sim_gain);
        if (mar->parsed()) return cmd_margins(mar_c, sweep);
        if (bod->parsed()) return cmd_bode(bod_c, wmin, wmax, points, zero_theta);
        if (ver->parsed()) return cmd_verify(ver_c, ver_tau, corrupt);
        if (l1g->parsed()) return cmd_l1gain(num, den);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
