#pragma once

// File formats. Instances and configs are JSON (version-tagged), bulk
// results are CSV. Writes go through a temp-file-then-rename so readers
// never observe partial files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabrl/experiments.hpp"
#include "tabrl/learners.hpp"
#include "tabrl/mdp.hpp"
#include "tabrl/sampling.hpp"
#include "tabrl/schedule.hpp"

namespace tabrl {

using json = nlohmann::json;

inline constexpr int kFileVersion = 1;

/// Schema problem, carrying the JSON-pointer path of the offending node.
struct SchemaError : std::runtime_error {
    std::string path;
    SchemaError(const std::string& path_, const std::string& what)
        : std::runtime_error("schema error at " + path_ + ": " + what), path(path_) {}
};

/// A structurally valid file whose contents break a domain invariant.
struct ValidationError : std::runtime_error {
    std::vector<Violation> violations;
    explicit ValidationError(std::vector<Violation> v)
        : std::runtime_error(v.empty() ? "validation failed"
                                       : "validation failed: " + v.front().constraint + " (" +
                                             v.front().message + ")"),
          violations(std::move(v)) {}
};

namespace detail {

inline const json& require(const json& j, const std::string& key, const std::string& prefix) {
    if (!j.contains(key)) throw SchemaError(prefix + "/" + key, "missing");
    return j.at(key);
}

inline double require_number(const json& j, const std::string& key, const std::string& prefix) {
    const json& v = require(j, key, prefix);
    if (!v.is_number()) throw SchemaError(prefix + "/" + key, "expected a number");
    return v.get<double>();
}

inline long long require_integer(const json& j, const std::string& key,
                                 const std::string& prefix) {
    const json& v = require(j, key, prefix);
    if (!v.is_number_integer()) throw SchemaError(prefix + "/" + key, "expected an integer");
    return v.get<long long>();
}

inline void check_version(const json& j, const std::string& prefix) {
    if (!j.contains("version")) return; // tolerated on read; always written
    if (!j.at("version").is_number_integer() || j.at("version").get<int>() != kFileVersion)
        throw SchemaError(prefix + "/version",
                          "unknown version " + j.at("version").dump() + "; this tool reads version " +
                              std::to_string(kFileVersion) + " files");
}

} // namespace detail

inline void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, target);
}

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw SchemaError("/", std::string("not valid JSON: ") + e.what());
    }
    return j;
}

// ---------------------------------------------------------------------------
// MDP instances

inline json mdp_to_json(const TabularMdp& m) {
    json rewards = json::array(), transitions = json::array();
    for (int s = 0; s < m.num_states; ++s) {
        json rrow = json::array(), trow = json::array();
        for (int a = 0; a < m.num_actions; ++a) {
            rrow.push_back(m.r(s, a));
            json dist = json::array();
            for (int s2 = 0; s2 < m.num_states; ++s2) dist.push_back(m.p(s, a, s2));
            trow.push_back(std::move(dist));
        }
        rewards.push_back(std::move(rrow));
        transitions.push_back(std::move(trow));
    }
    json out{{"version", kFileVersion},
             {"num_states", m.num_states},
             {"num_actions", m.num_actions},
             {"discount", m.discount},
             {"rewards", rewards},
             {"transitions", transitions}};
    if (m.has_mask()) {
        json mask = json::array();
        for (int s = 0; s < m.num_states; ++s) {
            json row = json::array();
            for (int a = 0; a < m.num_actions; ++a) row.push_back(m.allowed(s, a));
            mask.push_back(std::move(row));
        }
        out["action_mask"] = std::move(mask);
    }
    return out;
}

inline TabularMdp mdp_from_json(const json& j) {
    detail::check_version(j, "");
    TabularMdp m;
    m.num_states = static_cast<int>(detail::require_integer(j, "num_states", ""));
    m.num_actions = static_cast<int>(detail::require_integer(j, "num_actions", ""));
    m.discount = detail::require_number(j, "discount", "");
    if (m.num_states <= 0 || m.num_actions <= 0)
        throw SchemaError("/num_states", "dimensions must be positive");

    const json& rewards = detail::require(j, "rewards", "");
    const json& transitions = detail::require(j, "transitions", "");
    if (!rewards.is_array() || static_cast<int>(rewards.size()) != m.num_states)
        throw SchemaError("/rewards", "expected one row per state");
    if (!transitions.is_array() || static_cast<int>(transitions.size()) != m.num_states)
        throw SchemaError("/transitions", "expected one row per state");

    m.reward.resize(static_cast<size_t>(m.num_pairs()));
    m.transition.resize(static_cast<size_t>(m.num_pairs()) * m.num_states);
    for (int s = 0; s < m.num_states; ++s) {
        const json& rrow = rewards.at(s);
        const json& trow = transitions.at(s);
        const std::string rpath = "/rewards/" + std::to_string(s);
        const std::string tpath = "/transitions/" + std::to_string(s);
        if (!rrow.is_array() || static_cast<int>(rrow.size()) != m.num_actions)
            throw SchemaError(rpath, "expected one entry per action");
        if (!trow.is_array() || static_cast<int>(trow.size()) != m.num_actions)
            throw SchemaError(tpath, "expected one distribution per action");
        for (int a = 0; a < m.num_actions; ++a) {
            if (!rrow.at(a).is_number())
                throw SchemaError(rpath + "/" + std::to_string(a), "expected a number");
            m.reward[static_cast<size_t>(m.pair_index(s, a))] = rrow.at(a).get<double>();
            const json& dist = trow.at(a);
            if (!dist.is_array() || static_cast<int>(dist.size()) != m.num_states)
                throw SchemaError(tpath + "/" + std::to_string(a),
                                  "expected one probability per state");
            for (int s2 = 0; s2 < m.num_states; ++s2) {
                if (!dist.at(s2).is_number())
                    throw SchemaError(tpath + "/" + std::to_string(a) + "/" + std::to_string(s2),
                                      "expected a number");
                m.transition[static_cast<size_t>(m.pair_index(s, a)) * m.num_states + s2] =
                    dist.at(s2).get<double>();
            }
        }
    }
    if (j.contains("action_mask")) {
        const json& mask = j.at("action_mask");
        if (!mask.is_array() || static_cast<int>(mask.size()) != m.num_states)
            throw SchemaError("/action_mask", "expected one row per state");
        m.action_mask.resize(static_cast<size_t>(m.num_pairs()));
        for (int s = 0; s < m.num_states; ++s) {
            const json& row = mask.at(s);
            if (!row.is_array() || static_cast<int>(row.size()) != m.num_actions)
                throw SchemaError("/action_mask/" + std::to_string(s),
                                  "expected one entry per action");
            for (int a = 0; a < m.num_actions; ++a)
                m.action_mask[static_cast<size_t>(m.pair_index(s, a))] =
                    row.at(a).get<bool>() ? 1 : 0;
        }
    }
    return m;
}

/// Loads and validates; throws ValidationError when invariants fail.
inline TabularMdp load_mdp(const std::string& path) {
    TabularMdp m = mdp_from_json(load_json(path));
    auto violations = validate(m);
    if (!violations.empty()) throw ValidationError(std::move(violations));
    return m;
}

inline void save_mdp(const TabularMdp& m, const std::string& path) {
    atomic_write(path, mdp_to_json(m).dump(2) + "\n");
}

inline TabularMrp mrp_from_mdp(const TabularMdp& m) {
    if (m.num_actions != 1)
        throw std::invalid_argument("mrp_from_mdp: instance has more than one action");
    TabularMrp out;
    out.num_states = m.num_states;
    out.discount = m.discount;
    out.reward = m.reward;
    out.transition = m.transition;
    return out;
}

// ---------------------------------------------------------------------------
// Finite-horizon instances (distinguished by the "horizon" key)

inline json fmdp_to_json(const FiniteHorizonMdp& m) {
    auto tables_to_json = [&](const std::vector<std::vector<double>>& tables, bool kernel) {
        json out = json::array();
        for (const auto& t : tables) {
            json per_state = json::array();
            for (int s = 0; s < m.num_states; ++s) {
                json per_action = json::array();
                for (int a = 0; a < m.num_actions; ++a) {
                    const size_t idx = static_cast<size_t>(s) * m.num_actions + a;
                    if (kernel) {
                        json dist = json::array();
                        for (int s2 = 0; s2 < m.num_states; ++s2)
                            dist.push_back(t[idx * m.num_states + s2]);
                        per_action.push_back(std::move(dist));
                    } else {
                        per_action.push_back(t[idx]);
                    }
                }
                per_state.push_back(std::move(per_action));
            }
            out.push_back(std::move(per_state));
        }
        return out;
    };
    return json{{"version", kFileVersion},
                {"num_states", m.num_states},
                {"num_actions", m.num_actions},
                {"horizon", m.horizon},
                {"rewards", tables_to_json(m.reward_h, false)},
                {"transitions", tables_to_json(m.transition_h, true)}};
}

inline FiniteHorizonMdp fmdp_from_json(const json& j) {
    detail::check_version(j, "");
    FiniteHorizonMdp m;
    m.num_states = static_cast<int>(detail::require_integer(j, "num_states", ""));
    m.num_actions = static_cast<int>(detail::require_integer(j, "num_actions", ""));
    m.horizon = static_cast<int>(detail::require_integer(j, "horizon", ""));
    const json& rewards = detail::require(j, "rewards", "");
    const json& transitions = detail::require(j, "transitions", "");
    auto read_tables = [&](const json& arr, bool kernel, const std::string& prefix) {
        if (!arr.is_array() || arr.empty())
            throw SchemaError(prefix, "expected a non-empty array of per-step tables");
        std::vector<std::vector<double>> out;
        for (const auto& t : arr) {
            std::vector<double> flat;
            for (int s = 0; s < m.num_states; ++s)
                for (int a = 0; a < m.num_actions; ++a) {
                    const json& cell = t.at(s).at(a);
                    if (kernel)
                        for (int s2 = 0; s2 < m.num_states; ++s2)
                            flat.push_back(cell.at(s2).get<double>());
                    else
                        flat.push_back(cell.get<double>());
                }
            out.push_back(std::move(flat));
        }
        return out;
    };
    m.reward_h = read_tables(rewards, false, "/rewards");
    m.transition_h = read_tables(transitions, true, "/transitions");
    return m;
}

inline FiniteHorizonMdp load_fmdp(const std::string& path) {
    FiniteHorizonMdp m = fmdp_from_json(load_json(path));
    auto violations = validate(m);
    if (!violations.empty()) throw ValidationError(std::move(violations));
    return m;
}

// ---------------------------------------------------------------------------
// Behavior policies

inline BehaviorPolicy behavior_from_json(const json& j, const TabularMdp& mdp) {
    detail::check_version(j, "");
    const json& rows = detail::require(j, "behavior", "");
    if (!rows.is_array() || static_cast<int>(rows.size()) != mdp.num_states)
        throw SchemaError("/behavior", "expected one row per state");
    BehaviorPolicy b(static_cast<size_t>(mdp.num_pairs()));
    for (int s = 0; s < mdp.num_states; ++s) {
        const json& row = rows.at(s);
        if (!row.is_array() || static_cast<int>(row.size()) != mdp.num_actions)
            throw SchemaError("/behavior/" + std::to_string(s), "expected one entry per action");
        for (int a = 0; a < mdp.num_actions; ++a)
            b[static_cast<size_t>(mdp.pair_index(s, a))] = row.at(a).get<double>();
    }
    return b;
}

// ---------------------------------------------------------------------------
// Schedules

inline json schedule_to_json(const Schedule& s) {
    json out{{"kind", to_string(s.kind)}};
    switch (s.kind) {
        case ScheduleKind::rescaled_linear:
            out["c"] = s.c;
            out["log_exponent"] = s.log_exponent;
            break;
        case ScheduleKind::constant: out["eta"] = s.eta; break;
        case ScheduleKind::polynomial: out["omega"] = s.omega; break;
        case ScheduleKind::linear: break;
    }
    return out;
}

inline Schedule schedule_from_json(const json& j, const std::string& prefix = "/schedule") {
    const json& kind = detail::require(j, "kind", prefix);
    Schedule s;
    const std::string k = kind.get<std::string>();
    if (k == "rescaled_linear") {
        s.kind = ScheduleKind::rescaled_linear;
        if (j.contains("c")) s.c = j.at("c").get<double>();
        if (j.contains("log_exponent")) s.log_exponent = j.at("log_exponent").get<int>();
    } else if (k == "constant") {
        s.kind = ScheduleKind::constant;
        s.eta = detail::require_number(j, "eta", prefix);
    } else if (k == "polynomial") {
        s.kind = ScheduleKind::polynomial;
        s.omega = detail::require_number(j, "omega", prefix);
    } else if (k == "linear") {
        s.kind = ScheduleKind::linear;
    } else {
        throw SchemaError(prefix + "/kind", "unknown schedule kind '" + k + "'");
    }
    return s;
}

// ---------------------------------------------------------------------------
// Experiment files: a version-tagged single-run or sweep description.

inline InstanceSource instance_from_json(const json& j) {
    InstanceSource src;
    const std::string kind = detail::require(j, "kind", "/instance").get<std::string>();
    if (kind == "hard_mdp") src.kind = InstanceSource::Kind::hard_mdp;
    else if (kind == "hard_mrp") src.kind = InstanceSource::Kind::hard_mrp;
    else if (kind == "file") src.kind = InstanceSource::Kind::file;
    else if (kind == "random_mdp") src.kind = InstanceSource::Kind::random_mdp;
    else if (kind == "random_mrp") src.kind = InstanceSource::Kind::random_mrp;
    else throw SchemaError("/instance/kind", "unknown instance kind '" + kind + "'");
    if (src.kind == InstanceSource::Kind::file)
        src.path = detail::require(j, "path", "/instance").get<std::string>();
    if (j.contains("states")) src.states = j.at("states").get<int>();
    if (j.contains("actions")) src.actions = j.at("actions").get<int>();
    if (j.contains("horizon")) src.horizon = j.at("horizon").get<int>();
    if (j.contains("seed")) src.seed = j.at("seed").get<uint64_t>();
    return src;
}

inline json instance_to_json(const InstanceSource& src) {
    json j;
    switch (src.kind) {
        case InstanceSource::Kind::hard_mdp: j["kind"] = "hard_mdp"; break;
        case InstanceSource::Kind::hard_mrp: j["kind"] = "hard_mrp"; break;
        case InstanceSource::Kind::file:
            j["kind"] = "file";
            j["path"] = src.path;
            break;
        case InstanceSource::Kind::random_mdp: j["kind"] = "random_mdp"; break;
        case InstanceSource::Kind::random_mrp: j["kind"] = "random_mrp"; break;
    }
    if (src.kind != InstanceSource::Kind::file && src.kind != InstanceSource::Kind::hard_mdp &&
        src.kind != InstanceSource::Kind::hard_mrp) {
        j["states"] = src.states;
        j["actions"] = src.actions;
        j["horizon"] = src.horizon;
        j["seed"] = src.seed;
    }
    return j;
}

inline Algorithm algorithm_from_string(const std::string& s, const std::string& path) {
    if (s == "sync_q") return Algorithm::sync_q;
    if (s == "sync_td") return Algorithm::sync_td;
    if (s == "async_q") return Algorithm::async_q;
    if (s == "finite_q") return Algorithm::finite_q;
    throw SchemaError(path, "unknown algorithm '" + s + "'");
}

inline SweepConfig sweep_from_json(const json& j) {
    detail::check_version(j, "");
    SweepConfig cfg;
    cfg.algorithm =
        algorithm_from_string(detail::require(j, "algorithm", "").get<std::string>(), "/algorithm");
    cfg.instance = instance_from_json(detail::require(j, "instance", ""));
    cfg.gamma_grid = detail::require(j, "gamma_grid", "").get<std::vector<double>>();
    cfg.t_grid = detail::require(j, "t_grid", "").get<std::vector<long long>>();
    cfg.schedule_template = schedule_from_json(detail::require(j, "schedule", ""));
    cfg.runs_per_cell = static_cast<int>(detail::require_integer(j, "runs_per_cell", ""));
    if (j.contains("metric")) {
        const std::string m = j.at("metric").get<std::string>();
        if (m == "sup_q_error") cfg.metric = ErrorMetric::sup_q_error;
        else if (m == "per_state_mse") cfg.metric = ErrorMetric::per_state_mse;
        else throw SchemaError("/metric", "unknown metric '" + m + "'");
    }
    cfg.seed = detail::require(j, "seed", "").get<uint64_t>();
    if (j.contains("async_eta")) cfg.async_eta = j.at("async_eta").get<double>();
    if (j.contains("async_c1")) cfg.async_c1 = j.at("async_c1").get<double>();
    if (j.contains("bootstrap_resamples"))
        cfg.bootstrap_resamples = j.at("bootstrap_resamples").get<int>();
    return cfg;
}

inline json sweep_to_json(const SweepConfig& cfg) {
    json j{{"version", kFileVersion},
           {"type", "sweep"},
           {"algorithm", to_string(cfg.algorithm)},
           {"instance", instance_to_json(cfg.instance)},
           {"gamma_grid", cfg.gamma_grid},
           {"t_grid", cfg.t_grid},
           {"schedule", schedule_to_json(cfg.schedule_template)},
           {"runs_per_cell", cfg.runs_per_cell},
           {"metric", cfg.metric == ErrorMetric::sup_q_error ? "sup_q_error" : "per_state_mse"},
           {"seed", cfg.seed}};
    if (cfg.async_eta > 0.0) j["async_eta"] = cfg.async_eta;
    if (cfg.async_c1 > 0.0) j["async_c1"] = cfg.async_c1;
    j["bootstrap_resamples"] = cfg.bootstrap_resamples;
    return j;
}

/// A single training run description.
struct RunSpec {
    Algorithm algorithm = Algorithm::sync_q;
    InstanceSource instance;
    double gamma = 0.9; // for generated instances
    Schedule schedule;
    long long iterations = 0;
    uint64_t seed = 0;
    long long checkpoint_every = 0;
    int start_state = 0;
    std::string behavior_path; // async; empty = uniform
};

inline RunSpec run_spec_from_json(const json& j) {
    detail::check_version(j, "");
    RunSpec spec;
    spec.algorithm =
        algorithm_from_string(detail::require(j, "algorithm", "").get<std::string>(), "/algorithm");
    spec.instance = instance_from_json(detail::require(j, "instance", ""));
    if (j.at("instance").contains("gamma")) spec.gamma = j.at("instance").at("gamma").get<double>();
    spec.schedule = schedule_from_json(detail::require(j, "schedule", ""));
    spec.iterations = detail::require_integer(j, "iterations", "");
    spec.seed = detail::require(j, "seed", "").get<uint64_t>();
    if (j.contains("checkpoint_every"))
        spec.checkpoint_every = j.at("checkpoint_every").get<long long>();
    if (j.contains("start_state")) spec.start_state = j.at("start_state").get<int>();
    if (j.contains("behavior_path")) spec.behavior_path = j.at("behavior_path").get<std::string>();
    return spec;
}

inline json run_spec_to_json(const RunSpec& spec) {
    json instance = instance_to_json(spec.instance);
    if (spec.instance.kind != InstanceSource::Kind::file) instance["gamma"] = spec.gamma;
    json j{{"version", kFileVersion},
           {"type", "run"},
           {"algorithm", to_string(spec.algorithm)},
           {"instance", instance},
           {"schedule", schedule_to_json(spec.schedule)},
           {"iterations", spec.iterations},
           {"seed", spec.seed},
           {"checkpoint_every", spec.checkpoint_every},
           {"start_state", spec.start_state}};
    if (!spec.behavior_path.empty()) j["behavior_path"] = spec.behavior_path;
    return j;
}

// ---------------------------------------------------------------------------
// Results

inline json qtable_to_json(const QTable& q) {
    return json{{"num_states", q.num_states}, {"num_actions", q.num_actions}, {"data", q.data}};
}

template <typename Estimate>
json run_record_to_json(const RunRecord<Estimate>& rec, Algorithm algorithm) {
    json j{{"version", kFileVersion},
           {"algorithm", to_string(algorithm)},
           {"iterations", rec.config.iterations},
           {"seed", rec.config.seed},
           {"schedule", schedule_to_json(rec.config.schedule)},
           {"wall_seconds", rec.wall_seconds},
           {"warnings", rec.warnings}};
    if constexpr (std::is_same_v<Estimate, QTable>) {
        j["final_estimate"] = qtable_to_json(rec.final_estimate);
    } else if constexpr (std::is_same_v<Estimate, VTable>) {
        j["final_estimate"] = rec.final_estimate;
    } else {
        json tables = json::array();
        for (const auto& q : rec.final_estimate) tables.push_back(qtable_to_json(q));
        j["final_estimate"] = std::move(tables);
    }
    json cps = json::array();
    for (const auto& cp : rec.checkpoints) cps.push_back({{"t", cp.t}, {"sup_error", cp.sup_error}});
    j["checkpoints"] = std::move(cps);
    if (!rec.visit_counts.empty()) j["visit_counts"] = rec.visit_counts;
    return j;
}

inline std::string checkpoints_to_csv(const std::vector<Checkpoint>& cps) {
    std::ostringstream out;
    out << "t,sup_error\n";
    for (const auto& cp : cps) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%lld,%.17g\n", cp.t, cp.sup_error);
        out << buf;
    }
    return out.str();
}

/// Long-format per-run results: one row per (cell, run).
inline std::string sweep_to_csv(const ExponentFit& fit, Algorithm algorithm) {
    std::ostringstream out;
    out << "algorithm,gamma,T,seed,error,walltime\n";
    for (const auto& cell : fit.cells) {
        if (cell.aborted) continue;
        for (size_t r = 0; r < cell.run_errors.size(); ++r) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%s,%.17g,%lld,%llu,%.17g,%.6f\n",
                          to_string(algorithm).c_str(), cell.gamma, cell.iterations,
                          static_cast<unsigned long long>(cell.run_seeds[r]), cell.run_errors[r],
                          cell.run_wall[r]);
            out << buf;
        }
    }
    return out.str();
}

inline json sweep_summary_to_json(const SweepConfig& cfg, const ExponentFit& fit) {
    json cells = json::array();
    for (const auto& c : fit.cells) {
        json cj{{"gamma", c.gamma},
                {"T", c.iterations},
                {"aborted", c.aborted}};
        if (c.aborted) {
            cj["message"] = c.message;
        } else {
            cj["cell_value"] = c.cell_value;
            cj["median"] = c.median;
            cj["iqr"] = c.iqr;
        }
        cells.push_back(std::move(cj));
    }
    return json{{"version", kFileVersion},
                {"config", sweep_to_json(cfg)},
                {"fit",
                 {{"slope", fit.slope},
                  {"intercept", fit.intercept},
                  {"stderr", fit.stderr_},
                  {"r_squared", fit.r_squared}}},
                {"cells", std::move(cells)},
                {"notes", fit.notes}};
}

} // namespace tabrl
