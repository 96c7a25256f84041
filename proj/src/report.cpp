#include "l1margin/report.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <ostream>

#include "l1margin/scenario.hpp"

namespace l1margin {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void put_row_value(std::ostream& out, double v, bool& first) {
    if (!first) out << ',';
    out << fmt(v);
    first = false;
}

}  // namespace

// =============================================================================
// CSV emission
// =============================================================================

void write_trace_csv(std::ostream& out, const SimTrace& trace) {
    const std::size_t n = trace.x.size();
    out << 't';
    for (std::size_t i = 1; i <= n; ++i) out << ",x_" << i;
    for (std::size_t i = 1; i <= n; ++i) out << ",xhat_" << i;
    out << ",u,r,sigma";
    for (std::size_t i = 1; i <= n; ++i) out << ",theta_hat_" << i;
    out << ",sigma_hat,omega_hat,rtilde,eta\n";
    for (std::size_t k = 0; k < trace.t.size(); ++k) {
        bool first = true;
        put_row_value(out, trace.t[k], first);
        for (std::size_t i = 0; i < n; ++i) put_row_value(out, trace.x[i][k], first);
        for (std::size_t i = 0; i < n; ++i) put_row_value(out, trace.xhat[i][k], first);
        put_row_value(out, trace.u[k], first);
        put_row_value(out, trace.r[k], first);
        put_row_value(out, trace.sigma[k], first);
        for (std::size_t i = 0; i < n; ++i) put_row_value(out, trace.theta_hat[i][k], first);
        put_row_value(out, trace.sigma_hat[k], first);
        put_row_value(out, trace.omega_hat[k], first);
        put_row_value(out, trace.rtilde[k], first);
        put_row_value(out, trace.eta[k], first);
        out << '\n';
    }
}

void write_bode_csv(std::ostream& out, const RationalTF& Ho, const FrequencyGrid& grid) {
    std::vector<double> phase(grid.omegas.size());
    for (std::size_t i = 0; i < grid.omegas.size(); ++i) {
        phase[i] = std::arg(freq_response(Ho, grid.omegas[i]));
    }
    unwrap_phase(phase);
    out << "omega,magnitude_db,phase_deg\n";
    for (std::size_t i = 0; i < grid.omegas.size(); ++i) {
        const double mag = std::abs(freq_response(Ho, grid.omegas[i]));
        out << fmt(grid.omegas[i]) << ',' << fmt(20.0 * std::log10(mag)) << ','
            << fmt(phase[i] * 180.0 / kPi) << '\n';
    }
}

void write_sweep_csv(std::ostream& out, const WorstCaseReport& rep) {
    Eigen::Index n = 0;
    for (const SweepEntry& e : rep.table) {
        if (e.ok) {
            n = e.theta.size();
            break;
        }
    }
    for (Eigen::Index i = 1; i <= n; ++i) out << "theta_" << i << ',';
    out << "omega,pm_rad,omega_c,delay_margin_s\n";
    for (const SweepEntry& e : rep.table) {
        if (!e.ok) continue;
        for (Eigen::Index i = 0; i < n; ++i) out << fmt(e.theta(i)) << ',';
        out << fmt(e.omega) << ',' << fmt(e.phase_margin) << ',' << fmt(e.crossover) << ','
            << fmt(e.delay_margin) << '\n';
    }
}

// =============================================================================
// Margin report
// =============================================================================

void write_margin_report(std::ostream& out, const Scenario& sc, const MarginSummary& s,
                         const WorstCaseReport* sweep) {
    out << "scenario: " << sc.name << '\n';
    out << "loop_gain: " << fmt(sc.omega * sc.cfg.k) << '\n';
    out << "crossover_rad_s: " << fmt(s.crossover.crossover) << '\n';
    out << "phase_margin_rad: " << fmt(s.crossover.phase_margin) << '\n';
    out << "phase_margin_deg: " << fmt(s.crossover.phase_margin * 180.0 / kPi) << '\n';
    out << "delay_margin_s: " << fmt(s.delay_margin) << '\n';
    out << "gain_margin_lo: " << fmt(s.gain_lo) << '\n';
    out << "gain_margin_hi: " << fmt(s.gain_hi) << '\n';
    out << "gain_condition_value: " << fmt(s.l1_value) << '\n';
    out << "gain_condition_holds: " << (s.l1_holds ? "yes" : "no") << '\n';
    out << "gain_condition_box_value: " << fmt(s.l1_box_value) << '\n';
    out << "gain_condition_box_holds: " << (s.l1_box_holds ? "yes" : "no") << '\n';
    out << "adaptation_energy: " << fmt(s.bounds.theta_m) << '\n';
    out << "prediction_error_bound: " << fmt(s.bounds.xtilde_bound) << '\n';
    out << "state_deviation_bound: " << fmt(s.bounds.gamma1) << '\n';
    if (s.bounds.gamma2) {
        out << "control_deviation_bound: " << fmt(*s.bounds.gamma2) << '\n';
    } else {
        out << "control_deviation_bound: unavailable (" << s.bounds.note << ")\n";
    }
    if (sweep) {
        out << "sweep_vertices: " << sweep->table.size() << '\n';
        out << "sweep_skipped: " << sweep->skipped << '\n';
        out << "sweep_min_delay_margin_s: " << fmt(sweep->min_delay_margin) << '\n';
        out << "sweep_argmin_theta:";
        for (Eigen::Index i = 0; i < sweep->argmin.theta.size(); ++i) {
            out << ' ' << fmt(sweep->argmin.theta(i));
        }
        out << '\n';
        out << "sweep_argmin_omega: " << fmt(sweep->argmin.omega) << '\n';
        for (const SweepEntry& e : sweep->table) {
            if (e.ok) continue;
            out << "sweep_note[theta =";
            for (Eigen::Index i = 0; i < e.theta.size(); ++i) out << ' ' << fmt(e.theta(i));
            out << ", omega = " << fmt(e.omega) << "]: " << e.note << '\n';
        }
    }
}

// =============================================================================
// Run manifest
// =============================================================================

void write_manifest(std::ostream& out, const RunManifest& m) {
    out << "# l1margin run manifest\n";
    out << "# version: " << kToolVersion << '\n';
    out << "# command: " << m.command << '\n';
    out << "# profile: " << m.profile << '\n';
    out << "# tau_eff_s: " << fmt(m.tau_eff) << '\n';
    out << "# h_s: " << fmt(m.resolved.h) << '\n';
    out << "# determinism: fixed-step integration, no random inputs; identical\n";
    out << "#   invocations reproduce every output byte for byte\n";
    for (const std::string& o : m.outputs) out << "# output: " << o << '\n';
    out << "# re-run: the body below is a complete scenario file; pass this\n";
    out << "#   manifest as the scenario argument to repeat the run\n";
    out << '\n';
    out << serialize_scenario(m.resolved);
}

}  // namespace l1margin
