#include "l1margin/scenario.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace l1margin {

namespace {

// =============================================================================
// Raw document model
// =============================================================================

struct Entry {
    std::string value;
    int line = 0;
};

struct Section {
    int line = 0;
    std::map<std::string, Entry> entries;
};

using Document = std::map<std::string, Section>;

[[noreturn]] void fail(const std::string& source, int line, const std::string& message) {
    throw ScenarioError(source + ":" + std::to_string(line) + ": " + message);
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

bool valid_id(const std::string& s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char ch : s) {
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_')) return false;
    }
    return true;
}

Document tokenize(const std::string& text, const std::string& source) {
    Document doc;
    std::istringstream in(text);
    std::string raw;
    std::string current;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (const std::size_t hash = raw.find('#'); hash != std::string::npos) {
            raw.erase(hash);
        }
        const std::string s = trim(raw);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(source, line, "unterminated section header");
            current = trim(s.substr(1, s.size() - 2));
            if (current.empty()) fail(source, line, "empty section name");
            if (doc.count(current)) fail(source, line, "duplicate section '" + current + "'");
            doc[current].line = line;
            continue;
        }
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos) fail(source, line, "expected 'key = value'");
        if (current.empty()) fail(source, line, "key outside any section");
        const std::string key = trim(s.substr(0, eq));
        if (!valid_id(key)) fail(source, line, "invalid key name '" + key + "'");
        auto& section = doc[current];
        if (section.entries.count(key)) {
            fail(source, line, "duplicate key '" + current + "." + key + "'");
        }
        section.entries[key] = {trim(s.substr(eq + 1)), line};
    }
    return doc;
}

// =============================================================================
// Typed readers
// =============================================================================

class Reader {
  public:
    Reader(const Document& doc, std::string source) : doc_(doc), source_(std::move(source)) {}

    [[nodiscard]] const Section* section(const std::string& name) const {
        const auto it = doc_.find(name);
        return it == doc_.end() ? nullptr : &it->second;
    }

    [[nodiscard]] const Section& required_section(const std::string& name) const {
        const Section* s = section(name);
        if (!s) throw ScenarioError(source_ + ": missing section '[" + name + "]'");
        return *s;
    }

    void check_keys(const std::string& name, const Section& s,
                    std::initializer_list<const char*> allowed) const {
        for (const auto& [key, entry] : s.entries) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || key == a;
            if (!ok) fail(source_, entry.line, "unknown key '" + name + "." + key + "'");
        }
    }

    [[nodiscard]] const Entry* find(const Section& s, const std::string& key) const {
        const auto it = s.entries.find(key);
        return it == s.entries.end() ? nullptr : &it->second;
    }

    [[nodiscard]] const Entry& required(const std::string& name, const Section& s,
                                        const std::string& key) const {
        const Entry* e = find(s, key);
        if (!e) {
            fail(source_, s.line, "missing required key '" + name + "." + key + "'");
        }
        return *e;
    }

    [[nodiscard]] double number(const std::string& path, const Entry& e) const {
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(e.value.c_str(), &end);
        if (end == e.value.c_str() || *end != '\0' || errno == ERANGE) {
            fail(source_, e.line, "invalid number for '" + path + "'");
        }
        return v;
    }

    [[nodiscard]] int integer(const std::string& path, const Entry& e) const {
        errno = 0;
        char* end = nullptr;
        const long v = std::strtol(e.value.c_str(), &end, 10);
        if (end == e.value.c_str() || *end != '\0' || errno == ERANGE) {
            fail(source_, e.line, "invalid integer for '" + path + "'");
        }
        return static_cast<int>(v);
    }

    [[nodiscard]] Eigen::VectorXd vector(const std::string& path, const Entry& e) const {
        std::istringstream in(e.value);
        std::vector<double> vals;
        std::string tok;
        while (in >> tok) {
            errno = 0;
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0' || errno == ERANGE) {
                fail(source_, e.line, "invalid vector entry for '" + path + "'");
            }
            vals.push_back(v);
        }
        if (vals.empty()) fail(source_, e.line, "empty vector for '" + path + "'");
        Eigen::VectorXd out(static_cast<Eigen::Index>(vals.size()));
        for (std::size_t i = 0; i < vals.size(); ++i) out(static_cast<Eigen::Index>(i)) = vals[i];
        return out;
    }

    [[nodiscard]] Eigen::MatrixXd matrix(const std::string& path, const Entry& e) const {
        std::vector<Eigen::VectorXd> rows;
        std::string chunk;
        std::istringstream in(e.value);
        while (std::getline(in, chunk, ';')) {
            rows.push_back(vector(path, Entry{trim(chunk), e.line}));
        }
        if (rows.empty()) fail(source_, e.line, "empty matrix for '" + path + "'");
        const Eigen::Index cols = rows[0].size();
        Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), cols);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != cols) {
                fail(source_, e.line, "ragged matrix rows for '" + path + "'");
            }
            out.row(static_cast<Eigen::Index>(i)) = rows[i];
        }
        return out;
    }

    [[nodiscard]] std::vector<double> coeffs(const std::string& path, const Entry& e) const {
        const Eigen::VectorXd v = vector(path, e);
        return {v.data(), v.data() + v.size()};
    }

    [[nodiscard]] const std::string& source() const { return source_; }

  private:
    const Document& doc_;
    std::string source_;
};

SignalSpec::Kind signal_kind(const Reader& r, const std::string& path, const Entry& e) {
    if (e.value == "zero") return SignalSpec::Kind::zero;
    if (e.value == "constant") return SignalSpec::Kind::constant;
    if (e.value == "sinusoid") return SignalSpec::Kind::sinusoid;
    if (e.value == "step") return SignalSpec::Kind::step;
    fail(r.source(), e.line, "unknown signal kind '" + e.value + "' for '" + path +
                                 "' (zero|constant|sinusoid|step)");
}

const char* signal_kind_name(SignalSpec::Kind k) {
    switch (k) {
        case SignalSpec::Kind::zero: return "zero";
        case SignalSpec::Kind::constant: return "constant";
        case SignalSpec::Kind::sinusoid: return "sinusoid";
        case SignalSpec::Kind::step: return "step";
    }
    return "zero";
}

// =============================================================================
// Formatting
// =============================================================================

std::string fmt(double v) {
    // 12 significant digits unless the value would not survive a re-parse;
    // the echo must reproduce the exact double or manifests drift.
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    if (std::strtod(buf, nullptr) == v) return buf;
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt(const Eigen::VectorXd& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        out += fmt(v(i));
    }
    return out;
}

std::string fmt(const Eigen::MatrixXd& m) {
    std::string out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (i) out += "; ";
        out += fmt(Eigen::VectorXd(m.row(i)));
    }
    return out;
}

std::string fmt(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        out += fmt(v[i]);
    }
    return out;
}

void emit_signal(std::string& out, const char* id, const SignalSpec& s) {
    out += std::string("[signal.") + id + "]\n";
    out += std::string("kind = ") + signal_kind_name(s.kind) + "\n";
    out += "amplitude = " + fmt(s.amplitude) + "\n";
    out += "omega_rad_s = " + fmt(s.omega) + "\n";
    out += "phase_rad = " + fmt(s.phase) + "\n";
    out += "t_on_s = " + fmt(s.t_on) + "\n";
}

}  // namespace

// =============================================================================
// Public interface
// =============================================================================

std::string resolve_profile_name(const std::string& cli_value) {
    if (!cli_value.empty()) return cli_value;
    if (const char* env = std::getenv("L1MARGIN_PROFILE"); env && *env) return env;
    return "desk";
}

LoadedScenario parse_scenario_text(const std::string& text, const std::string& source,
                                   const std::string& profile) {
    const Document doc = tokenize(text, source);
    const Reader r(doc, source);

    // Validate the section inventory and collect catalogs.
    std::map<std::string, SignalSpec> signals;
    std::vector<std::string> profiles;
    for (const auto& [name, sec] : doc) {
        if (name == "scenario" || name == "plant" || name == "controller" || name == "sets" ||
            name == "run") {
            continue;
        }
        if (name.rfind("signal.", 0) == 0) {
            const std::string id = name.substr(7);
            if (!valid_id(id)) fail(source, sec.line, "invalid signal name '" + id + "'");
            r.check_keys(name, sec, {"kind", "amplitude", "omega_rad_s", "phase_rad", "t_on_s"});
            SignalSpec s;
            s.kind = signal_kind(r, name + ".kind", r.required(name, sec, "kind"));
            if (const Entry* e = r.find(sec, "amplitude")) s.amplitude = r.number(name + ".amplitude", *e);
            if (const Entry* e = r.find(sec, "omega_rad_s")) s.omega = r.number(name + ".omega_rad_s", *e);
            if (const Entry* e = r.find(sec, "phase_rad")) s.phase = r.number(name + ".phase_rad", *e);
            if (const Entry* e = r.find(sec, "t_on_s")) s.t_on = r.number(name + ".t_on_s", *e);
            signals[id] = s;
            continue;
        }
        if (name.rfind("profile.", 0) == 0) {
            const std::string id = name.substr(8);
            if (!valid_id(id)) fail(source, sec.line, "invalid profile name '" + id + "'");
            r.check_keys(name, sec, {"gamma_c", "h_s"});
            (void)r.required(name, sec, "gamma_c");
            (void)r.required(name, sec, "h_s");
            profiles.push_back(id);
            continue;
        }
        fail(source, sec.line, "unknown section '[" + name + "]'");
    }

    LoadedScenario loaded;
    Scenario& sc = loaded.scenario;
    loaded.declared_profiles = profiles;

    const Section& meta = r.required_section("scenario");
    r.check_keys("scenario", meta, {"name"});
    sc.name = r.required("scenario", meta, "name").value;
    if (sc.name.empty()) fail(source, meta.line, "empty value for 'scenario.name'");

    const Section& plant = r.required_section("plant");
    r.check_keys("plant", plant, {"a_m", "b", "c", "theta", "omega"});
    sc.cfg.A_m = r.matrix("plant.a_m", r.required("plant", plant, "a_m"));
    if (sc.cfg.A_m.rows() != sc.cfg.A_m.cols()) {
        fail(source, plant.line, "'plant.a_m' must be square");
    }
    sc.cfg.b = r.vector("plant.b", r.required("plant", plant, "b"));
    sc.cfg.c = r.vector("plant.c", r.required("plant", plant, "c"));
    sc.theta = r.vector("plant.theta", r.required("plant", plant, "theta"));
    sc.omega = r.number("plant.omega", r.required("plant", plant, "omega"));

    const Section& ctrl = r.required_section("controller");
    r.check_keys("controller", ctrl, {"k", "d_num", "d_den", "q"});
    sc.cfg.k = r.number("controller.k", r.required("controller", ctrl, "k"));
    if (const Entry* e = r.find(ctrl, "d_num")) sc.cfg.D.num = r.coeffs("controller.d_num", *e);
    if (const Entry* e = r.find(ctrl, "d_den")) sc.cfg.D.den = r.coeffs("controller.d_den", *e);
    if (const Entry* e = r.find(ctrl, "q")) sc.cfg.Q = r.matrix("controller.q", *e);

    const Section& sets = r.required_section("sets");
    r.check_keys("sets", sets,
                 {"theta_lo", "theta_hi", "delta0", "delta", "omega0_lo", "omega0_hi", "omega_lo",
                  "omega_hi", "d_sigma_per_s"});
    sc.sets.theta_lo = r.vector("sets.theta_lo", r.required("sets", sets, "theta_lo"));
    sc.sets.theta_hi = r.vector("sets.theta_hi", r.required("sets", sets, "theta_hi"));
    sc.sets.delta0 = r.number("sets.delta0", r.required("sets", sets, "delta0"));
    sc.sets.delta = r.number("sets.delta", r.required("sets", sets, "delta"));
    sc.sets.omega0_lo = r.number("sets.omega0_lo", r.required("sets", sets, "omega0_lo"));
    sc.sets.omega0_hi = r.number("sets.omega0_hi", r.required("sets", sets, "omega0_hi"));
    sc.sets.omega_lo = r.number("sets.omega_lo", r.required("sets", sets, "omega_lo"));
    sc.sets.omega_hi = r.number("sets.omega_hi", r.required("sets", sets, "omega_hi"));
    sc.sets.d_sigma = r.number("sets.d_sigma_per_s", r.required("sets", sets, "d_sigma_per_s"));

    const Section& run = r.required_section("run");
    r.check_keys("run", run,
                 {"r", "sigma", "x0", "tau_s", "gain", "t_end_s", "blowup_threshold",
                  "stable_envelope", "record_stride", "gamma_c", "h_s"});
    auto pick_signal = [&](const char* key) {
        const Entry* e = r.find(run, key);
        if (!e) return SignalSpec{};
        const auto it = signals.find(e->value);
        if (it != signals.end()) return it->second;
        if (e->value == "zero") return SignalSpec{};
        fail(source, e->line,
             std::string("unknown signal '") + e->value + "' for 'run." + key + "'");
    };
    sc.r = pick_signal("r");
    sc.sigma = pick_signal("sigma");
    if (const Entry* e = r.find(run, "x0")) {
        sc.x0 = r.vector("run.x0", *e);
    } else {
        sc.x0 = Eigen::VectorXd::Zero(sc.cfg.A_m.rows());
    }
    if (const Entry* e = r.find(run, "tau_s")) sc.tau = r.number("run.tau_s", *e);
    if (const Entry* e = r.find(run, "gain")) sc.gain = r.number("run.gain", *e);
    sc.t_end = r.number("run.t_end_s", r.required("run", run, "t_end_s"));
    if (const Entry* e = r.find(run, "blowup_threshold")) {
        sc.blowup_threshold = r.number("run.blowup_threshold", *e);
    }
    if (const Entry* e = r.find(run, "stable_envelope")) {
        sc.stable_envelope = r.number("run.stable_envelope", *e);
    }
    if (const Entry* e = r.find(run, "record_stride")) {
        sc.record_stride = r.integer("run.record_stride", *e);
    }

    // Adaptation gain and step: inline pin wins; otherwise the named profile.
    const Entry* inline_gamma = r.find(run, "gamma_c");
    const Entry* inline_h = r.find(run, "h_s");
    if (inline_gamma && inline_h) {
        sc.cfg.gamma_c = r.number("run.gamma_c", *inline_gamma);
        sc.h = r.number("run.h_s", *inline_h);
        loaded.profile = "inline";
    } else if (inline_gamma || inline_h) {
        const Entry* e = inline_gamma ? inline_gamma : inline_h;
        fail(source, e->line, "'run' must pin both gamma_c and h_s or neither");
    } else {
        const std::string chosen = resolve_profile_name(profile);
        const Section* ps = r.section("profile." + chosen);
        if (!ps) {
            std::string known;
            for (const std::string& p : profiles) {
                if (!known.empty()) known += ", ";
                known += p;
            }
            throw ScenarioError(source + ": profile '" + chosen + "' is not declared (have: " +
                                (known.empty() ? "none" : known) + ")");
        }
        sc.cfg.gamma_c = r.number("profile." + chosen + ".gamma_c",
                                  r.required("profile." + chosen, *ps, "gamma_c"));
        sc.h = r.number("profile." + chosen + ".h_s", r.required("profile." + chosen, *ps, "h_s"));
        loaded.profile = chosen;
    }

    try {
        sc.validate();
    } catch (const std::exception& e) {
        throw ScenarioError(source + ": " + e.what());
    }
    return loaded;
}

LoadedScenario load_scenario_file(const std::string& path, const std::string& profile) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str(), path, profile);
}

std::string serialize_scenario(const Scenario& sc) {
    std::string out;
    out += "[scenario]\n";
    out += "name = " + sc.name + "\n";
    out += "\n[plant]\n";
    out += "a_m = " + fmt(sc.cfg.A_m) + "\n";
    out += "b = " + fmt(sc.cfg.b) + "\n";
    out += "c = " + fmt(sc.cfg.c) + "\n";
    out += "theta = " + fmt(sc.theta) + "\n";
    out += "omega = " + fmt(sc.omega) + "\n";
    out += "\n[controller]\n";
    out += "k = " + fmt(sc.cfg.k) + "\n";
    out += "d_num = " + fmt(sc.cfg.D.num) + "\n";
    out += "d_den = " + fmt(sc.cfg.D.den) + "\n";
    if (sc.cfg.Q.size() != 0) out += "q = " + fmt(sc.cfg.Q) + "\n";
    out += "\n[sets]\n";
    out += "theta_lo = " + fmt(sc.sets.theta_lo) + "\n";
    out += "theta_hi = " + fmt(sc.sets.theta_hi) + "\n";
    out += "delta0 = " + fmt(sc.sets.delta0) + "\n";
    out += "delta = " + fmt(sc.sets.delta) + "\n";
    out += "omega0_lo = " + fmt(sc.sets.omega0_lo) + "\n";
    out += "omega0_hi = " + fmt(sc.sets.omega0_hi) + "\n";
    out += "omega_lo = " + fmt(sc.sets.omega_lo) + "\n";
    out += "omega_hi = " + fmt(sc.sets.omega_hi) + "\n";
    out += "d_sigma_per_s = " + fmt(sc.sets.d_sigma) + "\n";
    out += "\n";
    emit_signal(out, "reference", sc.r);
    out += "\n";
    emit_signal(out, "disturbance", sc.sigma);
    out += "\n[run]\n";
    out += "r = reference\n";
    out += "sigma = disturbance\n";
    out += "x0 = " + fmt(sc.x0) + "\n";
    out += "tau_s = " + fmt(sc.tau) + "\n";
    out += "gain = " + fmt(sc.gain) + "\n";
    out += "t_end_s = " + fmt(sc.t_end) + "\n";
    out += "blowup_threshold = " + fmt(sc.blowup_threshold) + "\n";
    out += "stable_envelope = " + fmt(sc.stable_envelope) + "\n";
    out += "record_stride = " + std::to_string(sc.record_stride) + "\n";
    out += "gamma_c = " + fmt(sc.cfg.gamma_c) + "\n";
    out += "h_s = " + fmt(sc.h) + "\n";
    return out;
}

}  // namespace l1margin
