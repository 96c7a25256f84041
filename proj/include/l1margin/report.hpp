#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "l1margin/margins.hpp"
#include "l1margin/simulate.hpp"

namespace l1margin {

inline constexpr const char* kToolVersion = "0.1.0";

// =============================================================================
// CSV emission
// =============================================================================
//
// All writers emit UTF-8 with LF line endings and 12-significant-digit floats,
// and are deterministic: identical inputs produce byte-identical output.

/// Closed-loop trace. Columns:
///   t,x_1..x_n,xhat_1..xhat_n,u,r,sigma,theta_hat_1..theta_hat_n,
///   sigma_hat,omega_hat,rtilde,eta
void write_trace_csv(std::ostream& out, const SimTrace& trace);

/// Open-loop frequency response. Columns: omega,magnitude_db,phase_deg with a
/// strictly increasing omega column and the phase unwrapped along the grid.
void write_bode_csv(std::ostream& out, const RationalTF& Ho, const FrequencyGrid& grid);

/// Uncertainty-box sweep table, successful vertices only. Columns:
///   theta_1..theta_n,omega,pm_rad,omega_c,delay_margin_s
void write_sweep_csv(std::ostream& out, const WorstCaseReport& rep);

// =============================================================================
// Margin report
// =============================================================================

/// Everything cmd_margins computes for one scenario. The gain condition is
/// reported twice: at the realized input gain (the loop the margins describe)
/// and at the worst corner of the declared omega interval.
struct MarginSummary {
    CrossoverResult crossover;
    double delay_margin = 0.0;
    double l1_value = 0.0;
    bool l1_holds = false;
    double l1_box_value = 0.0;
    bool l1_box_holds = false;
    double gain_lo = 0.0;
    double gain_hi = 0.0;
    BoundReport bounds;
};

/// Structured `key: value` text report; the sweep block is appended when a
/// sweep report is supplied.
void write_margin_report(std::ostream& out, const Scenario& sc, const MarginSummary& s,
                         const WorstCaseReport* sweep);

// =============================================================================
// Run manifest
// =============================================================================

/// Record of one run: the resolved scenario echo plus `#` metadata. The body
/// is itself a parseable scenario file, so re-running the tool on the manifest
/// reproduces the outputs byte for byte.
struct RunManifest {
    std::string command;
    std::string profile;
    double tau_eff = 0.0;
    std::vector<std::string> outputs;
    Scenario resolved;
};

void write_manifest(std::ostream& out, const RunManifest& m);

}  // namespace l1margin
