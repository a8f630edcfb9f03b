#pragma once

// Run configuration and report serialization (JSON), plot-ready CSV output,
// and the simulate / equilibria / sweep / verify commands behind the CLI.

#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "hyperlv/dynamics.hpp"
#include "hyperlv/equilibrium.hpp"
#include "hyperlv/integrator.hpp"
#include "hyperlv/model.hpp"
#include "hyperlv/tensor.hpp"

namespace hyperlv {

using nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitConfigError = 1, kExitNonConverged = 2, kExitCheckFailed = 3 };

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ModelSpec {
    std::size_t n = 0;
    int t = 3;
    double k = 1.0;
    std::vector<double> w;
};

struct OutputSpec {
    std::string trajectory_path = "trajectory.csv";
    std::string report_path = "report.json";
    std::string table_path = "sweep.csv";
    std::size_t sample_stride = 10;
};

struct RunConfig {
    ModelSpec model;
    std::vector<double> initial_state;  // may be empty outside simulate
    IntegratorOptions integrator;
    SolverConfig solver;
    OutputSpec outputs;

    CompetitionModel build_model() const {
        return {model.t, model.k, Eigen::Map<const Vector>(model.w.data(), static_cast<Eigen::Index>(model.w.size()))};
    }
    Vector z0() const {
        return Eigen::Map<const Vector>(initial_state.data(), static_cast<Eigen::Index>(initial_state.size()));
    }
    IntegratorOptions integrator_options() const {
        auto o = integrator;
        o.sample_stride = outputs.sample_stride;
        return o;
    }
};

namespace detail {

template <class T>
T get_field(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) throw ConfigError("config: missing field '" + path + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: field '" + path + key + "' has the wrong type (" + j.at(key).type_name() + ")");
    }
}

template <class T>
void opt_field(const json& j, const std::string& path, const char* key, T& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = get_field<T>(j, path, key);
}

inline void require_object(const json& j, const std::string& what) {
    if (!j.is_object()) throw ConfigError("config: '" + what + "' must be an object");
}

}  // namespace detail

inline void validate(const RunConfig& c, bool need_initial_state) {
    const auto& m = c.model;
    if (m.n < 1) throw ConfigError("config: model.n must be >= 1");
    if (m.t < 2) throw ConfigError("config: model.t must be >= 2");
    if (!(m.k > 0.0)) throw ConfigError("config: model.k must be > 0");
    if (m.w.size() != m.n) {
        throw ConfigError("config: model.w has " + std::to_string(m.w.size()) + " entries, expected n = " +
                          std::to_string(m.n));
    }
    for (std::size_t i = 0; i < m.w.size(); ++i) {
        if (!(m.w[i] >= 0.0)) throw ConfigError("config: model.w[" + std::to_string(i) + "] must be >= 0");
    }
    if (need_initial_state || !c.initial_state.empty()) {
        if (c.initial_state.size() != m.n) {
            throw ConfigError("config: initial_state has " + std::to_string(c.initial_state.size()) +
                              " entries, expected n = " + std::to_string(m.n));
        }
        for (std::size_t i = 0; i < c.initial_state.size(); ++i) {
            if (!(c.initial_state[i] > 0.0)) {
                throw ConfigError("config: initial_state[" + std::to_string(i) + "] must be > 0");
            }
        }
    }
    try {
        c.integrator_options().validate();
        c.solver.validate(m.n);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

inline RunConfig config_from_json(const json& j) {
    detail::require_object(j, "root");
    RunConfig c;
    if (!j.contains("model")) throw ConfigError("config: missing field 'model'");
    const auto& m = j.at("model");
    detail::require_object(m, "model");
    c.model.n = detail::get_field<std::size_t>(m, "model.", "n");
    c.model.t = detail::get_field<int>(m, "model.", "t");
    c.model.k = detail::get_field<double>(m, "model.", "k");
    c.model.w = detail::get_field<std::vector<double>>(m, "model.", "w");
    detail::opt_field(j, "", "initial_state", c.initial_state);
    if (j.contains("integrator")) {
        const auto& in = j.at("integrator");
        detail::require_object(in, "integrator");
        std::string mode = to_string(c.integrator.mode);
        detail::opt_field(in, "integrator.", "mode", mode);
        try {
            c.integrator.mode = integrator_mode_from_string(mode);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: integrator.mode: ") + e.what());
        }
        detail::opt_field(in, "integrator.", "h", c.integrator.h);
        detail::opt_field(in, "integrator.", "T_max", c.integrator.t_max);
        detail::opt_field(in, "integrator.", "tol_conv", c.integrator.tol_conv);
        detail::opt_field(in, "integrator.", "z_floor", c.integrator.z_floor);
        detail::opt_field(in, "integrator.", "h_min", c.integrator.h_min);
        detail::opt_field(in, "integrator.", "rtol", c.integrator.rtol);
        detail::opt_field(in, "integrator.", "atol", c.integrator.atol);
        detail::opt_field(in, "integrator.", "auto_adaptive_gap", c.integrator.auto_adaptive_gap);
    }
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        detail::require_object(s, "solver");
        detail::opt_field(s, "solver.", "bisection_tol", c.solver.bisection_tol);
        detail::opt_field(s, "solver.", "max_d", c.solver.max_d);
        detail::opt_field(s, "solver.", "stability_margin", c.solver.stability_margin);
        detail::opt_field(s, "solver.", "max_subsets", c.solver.max_subsets);
    }
    if (j.contains("outputs")) {
        const auto& o = j.at("outputs");
        detail::require_object(o, "outputs");
        detail::opt_field(o, "outputs.", "trajectory_path", c.outputs.trajectory_path);
        detail::opt_field(o, "outputs.", "report_path", c.outputs.report_path);
        detail::opt_field(o, "outputs.", "table_path", c.outputs.table_path);
        detail::opt_field(o, "outputs.", "sample_stride", c.outputs.sample_stride);
    }
    return c;
}

inline json config_to_json(const RunConfig& c) {
    json j;
    j["model"] = {{"n", c.model.n}, {"t", c.model.t}, {"k", c.model.k}, {"w", c.model.w}};
    j["initial_state"] = c.initial_state;
    j["integrator"] = {{"mode", to_string(c.integrator.mode)},
                       {"h", c.integrator.h},
                       {"T_max", c.integrator.t_max},
                       {"tol_conv", c.integrator.tol_conv},
                       {"z_floor", c.integrator.z_floor},
                       {"h_min", c.integrator.h_min},
                       {"rtol", c.integrator.rtol},
                       {"atol", c.integrator.atol},
                       {"auto_adaptive_gap", c.integrator.auto_adaptive_gap}};
    j["solver"] = {{"bisection_tol", c.solver.bisection_tol},
                   {"max_d", c.solver.max_d},
                   {"stability_margin", c.solver.stability_margin},
                   {"max_subsets", c.solver.max_subsets}};
    j["outputs"] = {{"trajectory_path", c.outputs.trajectory_path},
                    {"report_path", c.outputs.report_path},
                    {"table_path", c.outputs.table_path},
                    {"sample_stride", c.outputs.sample_stride}};
    return j;
}

inline RunConfig parse_config_text(const std::string& text, bool need_initial_state) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    auto c = config_from_json(j);
    validate(c, need_initial_state);
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path, bool need_initial_state) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), need_initial_state);
}

/// FNV-1a 64-bit.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string config_hash(const RunConfig& c) {
    std::ostringstream os;
    os << std::hex << fnv1a(config_to_json(c).dump());
    return os.str();
}

// ---------------------------------------------------------------------------
// Report

struct TrajectorySummary {
    bool converged = false;
    double final_time = 0.0;
    double final_field_norm = 0.0;
    std::size_t steps = 0;
    std::size_t rejected_steps = 0;
    std::optional<double> max_step_error;
    std::string mode;
    std::size_t samples = 0;
};

struct Provenance {
    std::string config_hash;
    std::string tool_version = kToolVersion;
    double wall_time_s = 0.0;
    std::string timestamp;
};

struct RunReport {
    std::string command;
    std::optional<OutcomeReport> outcome;
    std::optional<TrajectorySummary> trajectory;
    std::vector<EquilibriumRecord> equilibria;
    bool equilibria_truncated = false;
    std::vector<ExistenceCertificates> certificates;
    std::string winner_count_commentary;
    json checks = json::object();
    Provenance provenance;
};

namespace detail {

inline json indices_to_json(const IndexSet& s) {
    json a = json::array();
    for (auto i : s) a.push_back(i + 1);
    return a;
}

inline IndexSet indices_from_json(const json& a) {
    IndexSet s;
    for (const auto& v : a) {
        const auto i = v.get<std::size_t>();
        if (i < 1) throw std::invalid_argument("report: neuron indices are 1-based");
        s.push_back(i - 1);
    }
    return s;
}

inline json vec_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector vec_from_json(const json& a) {
    const auto v = a.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

template <class T>
json opt_to_json(const std::optional<T>& o) {
    return o ? json(*o) : json(nullptr);
}

template <class T>
std::optional<T> opt_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<T>();
}

}  // namespace detail

inline json to_json(const EquilibriumRecord& r) {
    json ev = json::array();
    for (const auto& e : r.eigenvalues) ev.push_back({e.real(), e.imag()});
    return {{"winner_set", detail::indices_to_json(r.winner_set)},
            {"d", r.winner_set.size()},
            {"z_star", detail::vec_to_json(r.z_star)},
            {"tau", detail::opt_to_json(r.tau)},
            {"residual", r.residual},
            {"stability", to_string(r.stability)},
            {"spectrum_summary", r.spectrum_summary},
            {"eigenvalues", ev},
            {"continuum_sum", r.continuum ? json(r.continuum->sum) : json(nullptr)},
            {"closed_form_verdict", r.closed_form_verdict ? json(to_string(*r.closed_form_verdict)) : json(nullptr)},
            {"closed_form_agrees", r.closed_form_agrees},
            {"note", r.note}};
}

inline EquilibriumRecord equilibrium_from_json(const json& j) {
    EquilibriumRecord r;
    r.winner_set = detail::indices_from_json(j.at("winner_set"));
    r.z_star = detail::vec_from_json(j.at("z_star"));
    r.tau = detail::opt_from_json<double>(j.at("tau"));
    r.residual = j.at("residual").get<double>();
    r.stability = stability_from_string(j.at("stability").get<std::string>());
    r.spectrum_summary = j.at("spectrum_summary").get<double>();
    for (const auto& e : j.at("eigenvalues")) r.eigenvalues.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
    if (!j.at("continuum_sum").is_null()) r.continuum = Continuum{j.at("continuum_sum").get<double>()};
    if (!j.at("closed_form_verdict").is_null()) {
        r.closed_form_verdict = stability_from_string(j.at("closed_form_verdict").get<std::string>());
    }
    r.closed_form_agrees = j.at("closed_form_agrees").get<bool>();
    r.note = j.at("note").get<std::string>();
    return r;
}

inline json to_json(const OutcomeReport& o) {
    return {{"label", to_string(o.label)},
            {"winners", detail::indices_to_json(o.winners)},
            {"final_values", detail::vec_to_json(o.final_values)},
            {"matched_equilibrium", o.matched_equilibrium ? json(*o.matched_equilibrium) : json(nullptr)},
            {"low_confidence", o.low_confidence},
            {"tie", o.tie}};
}

inline OutcomeReport outcome_from_json(const json& j) {
    OutcomeReport o;
    o.label = label_from_string(j.at("label").get<std::string>());
    o.winners = detail::indices_from_json(j.at("winners"));
    o.final_values = detail::vec_from_json(j.at("final_values"));
    o.matched_equilibrium = detail::opt_from_json<std::size_t>(j.at("matched_equilibrium"));
    o.low_confidence = j.at("low_confidence").get<bool>();
    o.tie = j.at("tie").get<bool>();
    return o;
}

inline json to_json(const ExistenceCertificates& c) {
    json cor = {{"applicable", c.winner_bound.applicable},
                {"bound", detail::opt_to_json(c.winner_bound.bound)},
                {"ok", c.winner_bound.ok}};
    json tb = c.tau_bounds ? json{c.tau_bounds->first, c.tau_bounds->second} : json(nullptr);
    return {{"d", c.d}, {"diag_dominant", c.diag_dominant}, {"winner_bound", cor}, {"tau_bounds", tb}};
}

inline ExistenceCertificates certificates_from_json(const json& j) {
    ExistenceCertificates c;
    c.d = j.at("d").get<std::size_t>();
    c.diag_dominant = j.at("diag_dominant").get<bool>();
    const auto& cor = j.at("winner_bound");
    c.winner_bound.applicable = cor.at("applicable").get<bool>();
    c.winner_bound.bound = detail::opt_from_json<double>(cor.at("bound"));
    c.winner_bound.ok = cor.at("ok").get<bool>();
    if (!j.at("tau_bounds").is_null()) {
        c.tau_bounds = std::pair{j.at("tau_bounds").at(0).get<double>(), j.at("tau_bounds").at(1).get<double>()};
    }
    return c;
}

inline json to_json(const RunReport& r) {
    json j;
    j["command"] = r.command;
    j["outcome"] = r.outcome ? to_json(*r.outcome) : json(nullptr);
    if (r.trajectory) {
        const auto& t = *r.trajectory;
        j["trajectory"] = {{"converged", t.converged},         {"final_time", t.final_time},
                           {"final_field_norm", t.final_field_norm}, {"steps", t.steps},
                           {"rejected_steps", t.rejected_steps}, {"max_step_error", detail::opt_to_json(t.max_step_error)},
                           {"mode", t.mode},                     {"samples", t.samples}};
    } else {
        j["trajectory"] = nullptr;
    }
    j["equilibria"] = json::array();
    for (const auto& e : r.equilibria) j["equilibria"].push_back(to_json(e));
    j["equilibria_truncated"] = r.equilibria_truncated;
    j["certificates"] = json::array();
    for (const auto& c : r.certificates) j["certificates"].push_back(to_json(c));
    j["winner_count_commentary"] = r.winner_count_commentary;
    j["checks"] = r.checks;
    j["provenance"] = {{"config_hash", r.provenance.config_hash},
                       {"tool_version", r.provenance.tool_version},
                       {"wall_time_s", r.provenance.wall_time_s},
                       {"timestamp", r.provenance.timestamp}};
    return j;
}

inline RunReport report_from_json(const json& j) {
    RunReport r;
    r.command = j.at("command").get<std::string>();
    if (!j.at("outcome").is_null()) r.outcome = outcome_from_json(j.at("outcome"));
    if (!j.at("trajectory").is_null()) {
        const auto& t = j.at("trajectory");
        TrajectorySummary s;
        s.converged = t.at("converged").get<bool>();
        s.final_time = t.at("final_time").get<double>();
        s.final_field_norm = t.at("final_field_norm").get<double>();
        s.steps = t.at("steps").get<std::size_t>();
        s.rejected_steps = t.at("rejected_steps").get<std::size_t>();
        s.max_step_error = detail::opt_from_json<double>(t.at("max_step_error"));
        s.mode = t.at("mode").get<std::string>();
        s.samples = t.at("samples").get<std::size_t>();
        r.trajectory = s;
    }
    for (const auto& e : j.at("equilibria")) r.equilibria.push_back(equilibrium_from_json(e));
    r.equilibria_truncated = j.at("equilibria_truncated").get<bool>();
    for (const auto& c : j.at("certificates")) r.certificates.push_back(certificates_from_json(c));
    r.winner_count_commentary = j.at("winner_count_commentary").get<std::string>();
    r.checks = j.at("checks");
    const auto& p = j.at("provenance");
    r.provenance.config_hash = p.at("config_hash").get<std::string>();
    r.provenance.tool_version = p.at("tool_version").get<std::string>();
    r.provenance.wall_time_s = p.at("wall_time_s").get<double>();
    r.provenance.timestamp = p.at("timestamp").get<std::string>();
    return r;
}

// ---------------------------------------------------------------------------
// Output files

/// Writes through a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << contents;
        out.flush();
        if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw std::runtime_error("cannot move output into place at '" + path.string() + "'");
    }
}

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string trajectory_csv(const Trajectory& tr) {
    std::string out = "time";
    const auto n = tr.states.empty() ? 0 : tr.states.front().size();
    for (Eigen::Index i = 0; i < n; ++i) out += ",z_" + std::to_string(i + 1);
    out += '\n';
    for (std::size_t s = 0; s < tr.states.size(); ++s) {
        out += format_double(tr.times[s]);
        for (Eigen::Index i = 0; i < n; ++i) {
            out += ',';
            out += format_double(tr.states[s][i]);
        }
        out += '\n';
    }
    return out;
}

inline std::string winners_field(const IndexSet& w) {
    std::string s;
    for (std::size_t q = 0; q < w.size(); ++q) {
        if (q) s += ';';
        s += std::to_string(w[q] + 1);
    }
    return s;
}

inline std::string sweep_csv(const std::vector<SweepCell>& cells) {
    std::string out = "k,t,label,winners,max_final\n";
    for (const auto& c : cells) {
        out += format_double(c.k) + ',' + std::to_string(c.t) + ',' + to_string(c.outcome.label) + ',' +
               winners_field(c.outcome.winners) + ',' + format_double(c.max_final) + '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Commands

struct CommandOptions {
    std::string out_dir;  // empty: output paths as given in the config
    std::uint64_t seed = 1;
    bool quiet = false;
    std::ostream* log = &std::cout;
    std::ostream* err = &std::cerr;
};

namespace detail {

inline std::filesystem::path resolve_output(const CommandOptions& o, const std::string& path) {
    std::filesystem::path p(path);
    if (o.out_dir.empty() || p.is_absolute()) return p;
    return std::filesystem::path(o.out_dir) / p;
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string winner_count_commentary(const CompetitionModel& m) {
    if (is_unit_k(m.k())) {
        const auto at_max = (m.w().array() == m.w().maxCoeff()).count();
        return at_max > 1 ? "k = 1 with tied maximal inputs: no unique winner; tied winner sets form a continuum"
                          : "k = 1: exactly one winner, the neuron with the largest input";
    }
    if (m.k() > 1.0) return "k > 1: only single-winner equilibria can be stable (VWTA)";
    return "k < 1: multiple winners may coexist (WSA or WTA; coexistence possible)";
}

inline void fill_equilibria(RunReport& rep, const CompetitionModel& m, const SolverConfig& cfg) {
    const auto en = enumerate_equilibria(m, cfg);
    rep.equilibria = en.records;
    rep.equilibria_truncated = en.truncated;
    for (std::size_t d = 1; d <= m.n(); ++d) rep.certificates.push_back(existence_certificates(m, d));
    rep.winner_count_commentary = winner_count_commentary(m);
}

inline void finish_report(RunReport& rep, const RunConfig& cfg, std::chrono::steady_clock::time_point start) {
    rep.provenance.config_hash = config_hash(cfg);
    rep.provenance.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rep.provenance.timestamp = utc_timestamp();
}

template <class Fn>
int guarded(const CommandOptions& o, Fn fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        *o.err << "error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        *o.err << "error: " << e.what() << '\n';
        return kExitConfigError;
    }
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace detail

/// Integrates the configured model from its initial state; writes the
/// trajectory CSV and the JSON report.
inline int cmd_simulate(const std::string& config_path, const CommandOptions& o = {}) {
    return detail::guarded(o, [&] {
        const auto start = std::chrono::steady_clock::now();
        const auto cfg = load_config(config_path, true);
        const auto m = cfg.build_model();
        const auto traj = integrate(m, cfg.z0(), cfg.integrator_options());
        RunReport rep;
        rep.command = "simulate";
        detail::fill_equilibria(rep, m, cfg.solver);
        rep.outcome = classify_outcome(m, traj, rep.equilibria);
        rep.trajectory = TrajectorySummary{traj.converged,        traj.final_time,
                                           traj.final_field_norm, traj.stats.steps,
                                           traj.stats.rejected_steps, traj.stats.max_step_error,
                                           to_string(traj.mode),  traj.states.size()};
        detail::finish_report(rep, cfg, start);
        write_file_atomic(detail::resolve_output(o, cfg.outputs.trajectory_path), trajectory_csv(traj));
        write_file_atomic(detail::resolve_output(o, cfg.outputs.report_path), to_json(rep).dump(2) + '\n');
        if (!o.quiet) {
            *o.log << "outcome: " << to_string(rep.outcome->label) << " winners: ["
                   << winners_field(rep.outcome->winners) << "] t_final = " << traj.final_time << '\n';
        }
        return traj.converged ? kExitOk : kExitNonConverged;
    });
}

/// Enumerates equilibria with stability verdicts and existence certificates.
inline int cmd_equilibria(const std::string& config_path, const CommandOptions& o = {}) {
    return detail::guarded(o, [&] {
        const auto start = std::chrono::steady_clock::now();
        const auto cfg = load_config(config_path, false);
        const auto m = cfg.build_model();
        RunReport rep;
        rep.command = "equilibria";
        detail::fill_equilibria(rep, m, cfg.solver);
        detail::finish_report(rep, cfg, start);
        write_file_atomic(detail::resolve_output(o, cfg.outputs.report_path), to_json(rep).dump(2) + '\n');
        if (!o.quiet) {
            for (const auto& e : rep.equilibria) {
                *o.log << "D = {" << winners_field(e.winner_set) << "}  " << to_string(e.stability)
                       << "  max Re = " << e.spectrum_summary << '\n';
            }
        }
        return kExitOk;
    });
}

/// Outcome table over k_list x t_list.  An empty t_list uses the config's t;
/// the k list must be non-empty.
inline int cmd_sweep(const std::string& config_path, const std::string& k_list, const std::string& t_list,
                     const CommandOptions& o = {}) {
    return detail::guarded(o, [&] {
        const auto cfg = load_config(config_path, true);
        std::vector<double> ks;
        std::vector<int> ts;
        for (const auto& tok : detail::split_list(k_list)) {
            try {
                std::size_t used = 0;
                ks.push_back(std::stod(tok, &used));
                if (used != tok.size() || !(ks.back() > 0.0)) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ConfigError("sweep: bad k value '" + tok + "'");
            }
        }
        if (ks.empty()) throw ConfigError("sweep: --k-list must name at least one k");
        for (const auto& tok : detail::split_list(t_list)) {
            try {
                std::size_t used = 0;
                ts.push_back(std::stoi(tok, &used));
                if (used != tok.size() || ts.back() < 2) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ConfigError("sweep: bad t value '" + tok + "'");
            }
        }
        if (ts.empty()) ts.push_back(cfg.model.t);
        const auto cells = sweep(cfg.build_model(), ks, ts, cfg.z0(), cfg.integrator_options(), cfg.solver);
        write_file_atomic(detail::resolve_output(o, cfg.outputs.table_path), sweep_csv(cells));
        if (!o.quiet) {
            for (const auto& c : cells) {
                *o.log << "k = " << c.k << " t = " << c.t << ": " << to_string(c.outcome.label) << " ["
                       << winners_field(c.outcome.winners) << "]" << (c.error.empty() ? "" : " error: " + c.error)
                       << '\n';
            }
        }
        return kExitOk;
    });
}

// ---------------------------------------------------------------------------
// Verification suite

struct CheckResult {
    std::string name;
    bool skipped = false;
    bool passed = true;
    json detail = json::object();
};

namespace verify {

/// max |J - J_fd| / max |J| over `points` random states in [0.05, 2]^n,
/// central differences with step 1e-6 max(1, |z_j|).
inline CheckResult jacobian_fd(const CompetitionModel& m, std::mt19937_64& rng, int points = 100) {
    CheckResult r{"jacobian_fd"};
    std::uniform_real_distribution<double> u(0.05, 2.0);
    double worst = 0.0;
    const auto n = static_cast<Eigen::Index>(m.n());
    for (int q = 0; q < points; ++q) {
        Vector z(n);
        for (Eigen::Index i = 0; i < n; ++i) z[i] = u(rng);
        const Matrix j = jacobian(m, z);
        Matrix fd(n, n);
        for (Eigen::Index c = 0; c < n; ++c) {
            const double h = 1e-6 * std::max(1.0, std::abs(z[c]));
            Vector zp = z, zm = z;
            zp[c] += h;
            zm[c] -= h;
            fd.col(c) = (vector_field(m, zp) - vector_field(m, zm)) / (2.0 * h);
        }
        worst = std::max(worst, (j - fd).cwiseAbs().maxCoeff() / std::max(1e-300, j.cwiseAbs().maxCoeff()));
    }
    r.passed = worst < 1e-6;
    r.detail = {{"points", points}, {"max_rel_error", worst}, {"tolerance", 1e-6}};
    return r;
}

/// Two-value closed form vs dense contraction, and closed-form vs tensor-route vector field.
inline CheckResult contraction_equivalence(const CompetitionModel& m, std::mt19937_64& rng, int pairs = 100) {
    CheckResult r{"contraction_equivalence"};
    std::size_t n = m.n();
    while (n > 1 && detail::checked_pow(n, m.t()) > 100'000) --n;
    std::uniform_real_distribution<double> u(0.0, 2.0), coef(-2.0, 2.0);
    double worst_contract = 0.0, worst_field = 0.0;
    for (int q = 0; q < pairs; ++q) {
        const auto tv = SymmetricUniformTensor::two_value(m.t(), n, coef(rng), coef(rng));
        const auto dense = tv.expand();
        Vector z(static_cast<Eigen::Index>(n));
        for (auto& v : z) v = u(rng);
        const Vector a = contract(tv, z);
        const Vector b = contract(dense, z);
        worst_contract = std::max(worst_contract, (a - b).cwiseAbs().maxCoeff() / std::max(1.0, a.cwiseAbs().maxCoeff()));
        Vector zf(static_cast<Eigen::Index>(m.n()));
        for (auto& v : zf) v = u(rng);
        const Vector f1 = vector_field(m, zf);
        const Vector f2 = vector_field_tensor(m, zf);
        worst_field = std::max(worst_field, (f1 - f2).cwiseAbs().maxCoeff() / std::max(1.0, f1.cwiseAbs().maxCoeff()));
    }
    r.passed = worst_contract < 1e-10 && worst_field < 1e-12;
    r.detail = {{"pairs", pairs},
                {"dense_dim", n},
                {"max_contract_rel_error", worst_contract},
                {"max_field_rel_error", worst_field}};
    return r;
}

/// Solver properties on random instances at the model's p (k < 1 only):
/// bracket-restart uniqueness, tau bounds, existence vs grid scan,
/// sufficient condition.
inline CheckResult tau_properties(const CompetitionModel& m, const std::vector<EquilibriumRecord>& records,
                                  std::mt19937_64& rng, int instances = 100) {
    CheckResult r{"tau_properties"};
    if (!(m.k() < 1.0) || is_unit_k(m.k())) {
        r.skipped = true;
        r.detail = {{"reason", "fixed-point map only defined for k < 1"}};
        return r;
    }
    const int p = m.p();
    std::size_t bound_failures = 0, restart_failures = 0, grid_mismatch = 0, suff_failures = 0;
    for (const auto& rec : records) {
        if (!rec.tau || rec.winner_set.size() < 2) continue;
        std::vector<double> b;
        for (auto i : rec.winner_set) b.push_back(m.b()[static_cast<Eigen::Index>(i)]);
        const auto [lo, hi] = std::minmax_element(b.begin(), b.end());
        const double a = m.k(), s = 1.0 - m.k();
        const double dp = std::pow(static_cast<double>(b.size()), p);
        const double tol = 1e-10;
        if (*rec.tau < a * dp * *lo / (s + a * dp) - tol || *rec.tau > a * dp * *hi / (s + a * dp) + tol) ++bound_failures;
    }
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<int> dim(1, 8);
    for (int q = 0; q < instances; ++q) {
        const double k = 0.01 + 0.98 * u01(rng);
        const double a = k, s = 1.0 - k;
        std::vector<double> b(static_cast<std::size_t>(dim(rng)));
        for (auto& v : b) v = 1.0 + 4.0 * u01(rng);
        const auto sol = solve_tau(a, s, p, b, 1e-13);
        const double b_min = *std::min_element(b.begin(), b.end());
        const double b_max = *std::max_element(b.begin(), b.end());
        bool grid_exists = false;
        const int grid = 10'000;
        for (int g = 1; g <= grid && !grid_exists; ++g) {
            const double tau = b_min * g / grid;
            grid_exists = tau_map(a, s, p, b, tau) - tau <= 0.0;
        }
        if (grid_exists != sol.exists) ++grid_mismatch;
        const double nd = std::pow(static_cast<double>(b.size()), p);
        if (a * nd / s * (b_max - b_min) < b_min && !sol.exists) ++suff_failures;
        if (!sol.exists) continue;
        for (int rs = 0; rs < 16; ++rs) {
            double lo = b_min * u01(rng), hi = b_min * u01(rng);
            if (lo > hi) std::swap(lo, hi);
            if (!(tau_map(a, s, p, b, lo) - lo > 0.0)) lo = 0.0;
            if (tau_map(a, s, p, b, hi) - hi > 0.0) hi = b_min;
            if (std::abs(bisect_tau(a, s, p, b, lo, hi, 1e-13) - sol.tau) > 1e-10) ++restart_failures;
        }
        if (sol.tau < a * nd * b_min / (s + a * nd) - 1e-10 || sol.tau > a * nd * b_max / (s + a * nd) + 1e-10) {
            ++bound_failures;
        }
    }
    r.passed = bound_failures == 0 && restart_failures == 0 && grid_mismatch == 0 && suff_failures == 0;
    r.detail = {{"instances", instances},
                {"tau_bound_failures", bound_failures},
                {"restart_failures", restart_failures},
                {"grid_mismatches", grid_mismatch},
                {"sufficient_condition_failures", suff_failures}};
    return r;
}

inline CheckResult equilibrium_records(const std::vector<EquilibriumRecord>& records) {
    CheckResult r{"equilibrium_records"};
    std::size_t bad_residual = 0, disagreements = 0;
    double worst = 0.0;
    for (const auto& e : records) {
        worst = std::max(worst, e.residual);
        if (!(e.residual < 1e-8)) ++bad_residual;
        if (!e.closed_form_agrees) ++disagreements;
    }
    r.passed = bad_residual == 0 && disagreements == 0;
    r.detail = {{"records", records.size()},
                {"max_residual", worst},
                {"closed_form_disagreements", disagreements}};
    return r;
}

inline Vector default_start(const RunConfig& cfg) {
    if (!cfg.initial_state.empty()) return cfg.z0();
    return Vector::Constant(static_cast<Eigen::Index>(cfg.model.n), 0.1);
}

inline CheckResult ratio_law(const CompetitionModel& m, const RunConfig& cfg) {
    CheckResult r{"ratio_law"};
    if (!is_unit_k(m.k())) {
        r.skipped = true;
        r.detail = {{"reason", "ratio law holds only at k = 1"}};
        return r;
    }
    auto opts = cfg.integrator_options();
    opts.mode = IntegratorMode::Adaptive;
    opts.rtol = 1e-12;
    opts.atol = 1e-20;
    opts.sample_stride = 1;
    const auto traj = integrate(m, default_start(cfg), opts);
    const auto rl = check_ratio_law(m, traj);
    r.passed = rl.pairs_fitted > 0 && rl.max_error < 1e-5;
    r.detail = {{"pairs_fitted", rl.pairs_fitted},
                {"pairs_excluded", rl.excluded.size()},
                {"pairs_truncated", rl.truncated.size()},
                {"max_slope_error", rl.max_error},
                {"tolerance", 1e-5}};
    return r;
}

inline CheckResult lyapunov(const CompetitionModel& m, const RunConfig& cfg,
                            const std::vector<EquilibriumRecord>& records) {
    CheckResult r{"lyapunov"};
    const EquilibriumRecord* coexist = nullptr;
    for (const auto& e : records) {
        if (e.winner_set.size() == m.n() && !e.continuum) coexist = &e;
    }
    if (!coexist) {
        r.skipped = true;
        r.detail = {{"reason", "no isolated coexistence equilibrium"}};
        return r;
    }
    const auto traj = integrate(m, default_start(cfg), cfg.integrator_options());
    const auto ly = check_lyapunov_descent(m, traj, coexist->z_star);
    if (ly.refused) {
        r.skipped = true;
        r.detail = {{"reason", ly.reason}};
        return r;
    }
    r.passed = ly.violations == 0;
    r.detail = {{"samples", ly.samples},
                {"violations", ly.violations},
                {"max_violation", ly.max_violation},
                {"literal_form_violations", ly.literal_violations}};
    return r;
}

}  // namespace verify

inline std::vector<CheckResult> run_verification(const RunConfig& cfg, std::uint64_t seed) {
    const auto m = cfg.build_model();
    std::mt19937_64 rng(seed);
    const auto en = enumerate_equilibria(m, cfg.solver);
    std::vector<CheckResult> out;
    out.push_back(verify::jacobian_fd(m, rng));
    out.push_back(verify::contraction_equivalence(m, rng));
    out.push_back(verify::equilibrium_records(en.records));
    out.push_back(verify::tau_properties(m, en.records, rng));
    out.push_back(verify::ratio_law(m, cfg));
    out.push_back(verify::lyapunov(m, cfg, en.records));
    return out;
}

/// Runs the invariant suite at the config's (n, t, k); exit 3 names failures.
inline int cmd_verify(const std::string& config_path, const CommandOptions& o = {}) {
    return detail::guarded(o, [&] {
        const auto start = std::chrono::steady_clock::now();
        const auto cfg = load_config(config_path, false);
        const auto results = run_verification(cfg, o.seed);
        RunReport rep;
        rep.command = "verify";
        std::vector<std::string> failed;
        for (const auto& c : results) {
            rep.checks[c.name] = {{"status", c.skipped ? "skipped" : (c.passed ? "passed" : "failed")},
                                  {"detail", c.detail}};
            if (!c.skipped && !c.passed) failed.push_back(c.name);
        }
        rep.checks["seed"] = o.seed;
        detail::finish_report(rep, cfg, start);
        write_file_atomic(detail::resolve_output(o, cfg.outputs.report_path), to_json(rep).dump(2) + '\n');
        if (!o.quiet) {
            for (const auto& c : results) {
                *o.log << (c.skipped ? "SKIP " : (c.passed ? "PASS " : "FAIL ")) << c.name << ' ' << c.detail.dump()
                       << '\n';
            }
        }
        if (!failed.empty()) {
            *o.err << "failed checks:";
            for (const auto& f : failed) *o.err << ' ' << f;
            *o.err << '\n';
            return kExitCheckFailed;
        }
        return kExitOk;
    });
}

}  // namespace hyperlv
