#pragma once

#include <string>
#include <vector>

#include "l1margin/simulate.hpp"

namespace l1margin {

// =============================================================================
// Scenario files
// =============================================================================
//
// Structured text, one `key = value` pair per line, grouped under `[section]`
// headers; `#` starts a comment. Sections:
//
//   [scenario]    name
//   [plant]       a_m ("r11 r12; r21 r22"), b, c, theta, omega
//   [controller]  k, d_num, d_den, q (optional, row syntax)
//   [sets]        theta_lo, theta_hi, delta0, delta, omega0_lo, omega0_hi,
//                 omega_lo, omega_hi, d_sigma_per_s
//   [signal.<id>] kind (zero|constant|sinusoid|step), amplitude, omega_rad_s,
//                 phase_rad, t_on_s
//   [run]         r, sigma (catalog ids; `zero` is built in), x0, tau_s, gain,
//                 t_end_s, blowup_threshold, stable_envelope, record_stride,
//                 gamma_c, h_s (direct settings that replace the profile)
//   [profile.<id>] gamma_c, h_s
//
// Physical keys carry their unit in the name. Unknown sections or keys are
// rejected with a line/key diagnostic. gamma_c and h_s come either inline
// from [run] (a resolved echo) or from the selected profile.

/// Parse failure with position: "<source>:<line>: <what> '<key path>'".
class ScenarioError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct LoadedScenario {
    Scenario scenario;
    std::string profile;  // profile section applied, or "inline" when [run] carried both
    std::vector<std::string> declared_profiles;
};

/// Profile request resolution: explicit CLI value, else the L1MARGIN_PROFILE
/// environment variable, else "desk".
[[nodiscard]] std::string resolve_profile_name(const std::string& cli_value);

/// Parse scenario text. `source` labels diagnostics; `profile` names the
/// profile section to apply ("" resolves via resolve_profile_name). A file
/// whose [run] section pins both gamma_c and h_s needs no profile section.
[[nodiscard]] LoadedScenario parse_scenario_text(const std::string& text,
                                                 const std::string& source,
                                                 const std::string& profile = "");

/// Read and parse a scenario file.
[[nodiscard]] LoadedScenario load_scenario_file(const std::string& path,
                                                const std::string& profile = "");

/// Canonical re-parsable echo of a resolved scenario: every field explicit,
/// gamma_c and h_s inline in [run], no profile sections, 12-significant-digit
/// floats, LF line endings. parse(serialize(sc)) reproduces sc exactly.
[[nodiscard]] std::string serialize_scenario(const Scenario& sc);

}  // namespace l1margin
