#pragma once

// Scripted sweeps: run a learner over a gamma or iteration grid, aggregate
// per-cell errors, and fit log-log exponents with bootstrap standard
// errors. Cells are keyed by their coordinate values, so dropping a cell
// from a grid never changes another cell's numbers.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "tabrl/bellman.hpp"
#include "tabrl/hard_mdp.hpp"
#include "tabrl/learners.hpp"
#include "tabrl/mdp.hpp"
#include "tabrl/parallel.hpp"
#include "tabrl/rng.hpp"
#include "tabrl/solve.hpp"

namespace tabrl {

enum class Algorithm { sync_q, sync_td, async_q, finite_q };

inline std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::sync_q: return "sync_q";
        case Algorithm::sync_td: return "sync_td";
        case Algorithm::async_q: return "async_q";
        case Algorithm::finite_q: return "finite_q";
    }
    return "?";
}

/// sup_q_error: per-run sup-norm error of the final estimate; cells
/// aggregate the median over runs (robust to heavy right tails at small T).
/// per_state_mse: per-run squared value errors per state; cells aggregate
/// the worst-state root mean square over runs.
enum class ErrorMetric { sup_q_error, per_state_mse };

struct InstanceSource {
    enum class Kind { hard_mdp, hard_mrp, file, random_mdp, random_mrp };
    Kind kind = Kind::random_mdp;
    std::string path; // file
    int states = 5;
    int actions = 2;
    int horizon = 3; // finite_q
    uint64_t seed = 0;
};

struct SweepConfig {
    Algorithm algorithm = Algorithm::sync_q;
    InstanceSource instance;
    std::vector<double> gamma_grid;
    std::vector<long long> t_grid;
    Schedule schedule_template; // gamma / horizon_T are filled in per cell
    int runs_per_cell = 20;
    ErrorMetric metric = ErrorMetric::sup_q_error;
    uint64_t seed = 1;
    // async step size: explicit eta, or derived from the chain as
    // min(1, c1 log^3 T / ((1-gamma) T mu_min)) when async_c1 > 0.
    double async_eta = 0.0;
    double async_c1 = 0.0;
    BehaviorPolicy behavior; // async; empty = uniform over allowed actions
    int bootstrap_resamples = 1000;
};

struct SweepCell {
    double gamma = 0.0;
    long long iterations = 0;
    std::vector<double> run_errors;               // per-run sup error
    std::vector<std::vector<double>> run_state_sq; // per-run squared value error per state
    std::vector<double> run_wall;
    std::vector<uint64_t> run_seeds;
    double cell_value = std::numeric_limits<double>::quiet_NaN();
    double median = std::numeric_limits<double>::quiet_NaN();
    double iqr = std::numeric_limits<double>::quiet_NaN();
    bool aborted = false;
    std::string message;
};

struct ExponentFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_ = 0.0; // bootstrap over seeds
    double r_squared = 0.0;
    std::vector<SweepCell> cells;
    std::vector<std::string> notes;
};

/// Dirichlet(1,...,1) transition rows and uniform rewards, fixed by seed;
/// the discount is applied afterwards so one structural draw can be reused
/// across a gamma grid.
inline TabularMdp random_mdp(int states, int actions, uint64_t seed, double gamma) {
    if (states < 1 || actions < 1) throw std::invalid_argument("random_mdp: bad dimensions");
    TabularMdp m;
    m.num_states = states;
    m.num_actions = actions;
    m.discount = gamma;
    m.reward.resize(static_cast<size_t>(states) * actions);
    m.transition.resize(static_cast<size_t>(states) * actions * states);
    RngStream rng(seed, 0);
    for (size_t i = 0; i < m.reward.size(); ++i) m.reward[i] = rng.next_double();
    for (int idx = 0; idx < states * actions; ++idx) {
        double total = 0.0;
        std::vector<double> gammas(states);
        for (int s2 = 0; s2 < states; ++s2) {
            gammas[s2] = -std::log(1.0 - rng.next_double());
            total += gammas[s2];
        }
        for (int s2 = 0; s2 < states; ++s2)
            m.transition[static_cast<size_t>(idx) * states + s2] = gammas[s2] / total;
    }
    return m;
}

inline TabularMrp random_mrp(int states, uint64_t seed, double gamma) {
    const TabularMdp m = random_mdp(states, 1, seed, gamma);
    TabularMrp out;
    out.num_states = states;
    out.discount = gamma;
    out.reward = m.reward;
    out.transition = m.transition;
    return out;
}

/// Time-invariant random finite-horizon instance.
inline FiniteHorizonMdp random_fmdp(int states, int actions, int horizon, uint64_t seed) {
    const TabularMdp m = random_mdp(states, actions, seed, 0.5);
    FiniteHorizonMdp out;
    out.num_states = states;
    out.num_actions = actions;
    out.horizon = horizon;
    out.transition_h = {m.transition};
    out.reward_h = {m.reward};
    return out;
}

namespace detail {

inline double median_of(std::vector<double> x) {
    if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(x.begin(), x.end());
    const size_t n = x.size();
    return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

inline double quantile_of(std::vector<double> x, double q) {
    std::sort(x.begin(), x.end());
    const double pos = q * static_cast<double>(x.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

inline uint64_t cell_key(uint64_t base, double gamma, long long iterations) {
    const uint64_t g = std::bit_cast<uint64_t>(gamma);
    return derive_seed(derive_seed(base, g), static_cast<uint64_t>(iterations));
}

struct LineFit {
    double slope = 0.0, intercept = 0.0, r_squared = 0.0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    double sx = 0, sy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

inline double aggregate_cell(const SweepCell& cell, ErrorMetric metric,
                             const std::vector<int>* resample = nullptr) {
    const size_t n = cell.run_errors.size();
    auto pick = [&](size_t i) { return resample ? static_cast<size_t>((*resample)[i]) : i; };
    if (metric == ErrorMetric::sup_q_error) {
        std::vector<double> vals(n);
        for (size_t i = 0; i < n; ++i) vals[i] = cell.run_errors[pick(i)];
        return median_of(std::move(vals));
    }
    const size_t states = cell.run_state_sq.front().size();
    double worst = 0.0;
    for (size_t s = 0; s < states; ++s) {
        double acc = 0.0;
        for (size_t i = 0; i < n; ++i) acc += cell.run_state_sq[pick(i)][s];
        worst = std::max(worst, acc / static_cast<double>(n));
    }
    return std::sqrt(worst);
}

} // namespace detail

/// File-backed instances, resolved by the caller (the config layer loads
/// them once and passes pointers; the sweep applies each cell's discount).
struct LoadedInstance {
    const TabularMdp* mdp = nullptr;
    const TabularMrp* mrp = nullptr;
    const FiniteHorizonMdp* fmdp = nullptr;
};

/// Runs one (gamma, T) cell of a sweep: builds the instance and its exact
/// oracle, executes runs_per_cell independent runs in parallel, and records
/// per-run errors. Run r of a cell uses the sub-seed derived from
/// (base seed, gamma bits, T, r).
inline SweepCell run_sweep_cell(const SweepConfig& cfg, double gamma, long long iterations,
                                const LoadedInstance& loaded = {}) {
    SweepCell cell;
    cell.gamma = gamma;
    cell.iterations = iterations;
    const int runs = cfg.runs_per_cell;
    if (runs < 1) throw std::invalid_argument("sweep: runs_per_cell must be >= 1");

    Schedule schedule = cfg.schedule_template;
    if (schedule.kind == ScheduleKind::rescaled_linear) {
        schedule.gamma = cfg.algorithm == Algorithm::finite_q
                             ? 1.0 - 1.0 / static_cast<double>(cfg.instance.horizon)
                             : gamma;
        schedule.horizon_T = iterations;
    }

    const uint64_t cell_seed = detail::cell_key(cfg.seed, gamma, iterations);
    cell.run_seeds.resize(runs);
    for (int r = 0; r < runs; ++r)
        cell.run_seeds[static_cast<size_t>(r)] = derive_seed(cell_seed, static_cast<uint64_t>(r));

    cell.run_errors.assign(runs, 0.0);
    cell.run_state_sq.assign(runs, {});
    cell.run_wall.assign(runs, 0.0);

    auto record_value_errors = [&](int r, const VTable& v, const VTable& v_ref, double sup) {
        cell.run_errors[static_cast<size_t>(r)] = sup;
        auto& sq = cell.run_state_sq[static_cast<size_t>(r)];
        sq.resize(v.size());
        for (size_t s = 0; s < v.size(); ++s) sq[s] = (v[s] - v_ref[s]) * (v[s] - v_ref[s]);
    };

    switch (cfg.algorithm) {
        case Algorithm::sync_q:
        case Algorithm::async_q: {
            TabularMdp mdp;
            if (cfg.instance.kind == InstanceSource::Kind::hard_mdp)
                mdp = build_hard_mdp(gamma);
            else if (cfg.instance.kind == InstanceSource::Kind::random_mdp)
                mdp = random_mdp(cfg.instance.states, cfg.instance.actions, cfg.instance.seed,
                                 gamma);
            else if (cfg.instance.kind == InstanceSource::Kind::file && loaded.mdp) {
                mdp = *loaded.mdp;
                mdp.discount = gamma;
            } else
                throw std::invalid_argument("sweep: unsupported instance for this algorithm");
            const ValueIterationResult truth = value_iteration(mdp);

            BehaviorPolicy behavior;
            double eta = 0.0;
            if (cfg.algorithm == Algorithm::async_q) {
                behavior = cfg.behavior.empty() ? uniform_behavior(mdp) : cfg.behavior;
                eta = cfg.async_eta;
                if (cfg.async_c1 > 0.0) {
                    const ChainDiagnostics diag = diagnose_chain(mdp, behavior);
                    if (!diag.ergodic)
                        throw std::runtime_error("sweep: behavior chain not ergodic");
                    const double logT = std::log(static_cast<double>(iterations));
                    eta = std::min(1.0, cfg.async_c1 * logT * logT * logT /
                                            ((1.0 - gamma) * static_cast<double>(iterations) *
                                             diag.mu_min));
                }
                if (!(eta > 0.0 && eta <= 1.0))
                    throw std::invalid_argument("sweep: async step size not in (0,1]");
            }

            parallel_for(runs, [&](long long r) {
                RunConfig rc;
                rc.schedule = schedule;
                rc.iterations = iterations;
                rc.seed = cell.run_seeds[static_cast<size_t>(r)];
                rc.stream_id = static_cast<uint64_t>(r);
                RunRecord<QTable> rec;
                if (cfg.algorithm == Algorithm::async_q) {
                    rc.schedule = Schedule::constant_rate(eta);
                    rec = run_async_q(mdp, behavior, rc);
                } else {
                    rec = run_sync_q(mdp, rc);
                }
                record_value_errors(static_cast<int>(r), state_values(rec.final_estimate, mdp),
                                    truth.v_star,
                                    sup_error(rec.final_estimate, truth.q_star, mdp));
                cell.run_wall[static_cast<size_t>(r)] = rec.wall_seconds;
            });
            break;
        }
        case Algorithm::sync_td: {
            TabularMrp mrp;
            if (cfg.instance.kind == InstanceSource::Kind::hard_mrp)
                mrp = hard_mrp(gamma);
            else if (cfg.instance.kind == InstanceSource::Kind::random_mrp)
                mrp = random_mrp(cfg.instance.states, cfg.instance.seed, gamma);
            else if (cfg.instance.kind == InstanceSource::Kind::file && loaded.mrp) {
                mrp = *loaded.mrp;
                mrp.discount = gamma;
            } else
                throw std::invalid_argument("sweep: unsupported instance for sync_td");
            const VTable v_star = exact_mrp_value(mrp);
            parallel_for(runs, [&](long long r) {
                RunConfig rc;
                rc.schedule = schedule;
                rc.iterations = iterations;
                rc.seed = cell.run_seeds[static_cast<size_t>(r)];
                const RunRecord<VTable> rec = run_sync_td(mrp, rc);
                record_value_errors(static_cast<int>(r), rec.final_estimate, v_star,
                                    sup_error(rec.final_estimate, v_star));
                cell.run_wall[static_cast<size_t>(r)] = rec.wall_seconds;
            });
            break;
        }
        case Algorithm::finite_q: {
            FiniteHorizonMdp fmdp;
            if (cfg.instance.kind == InstanceSource::Kind::random_mdp)
                fmdp = random_fmdp(cfg.instance.states, cfg.instance.actions,
                                   cfg.instance.horizon, cfg.instance.seed);
            else if (cfg.instance.kind == InstanceSource::Kind::file && loaded.fmdp)
                fmdp = *loaded.fmdp;
            else
                throw std::invalid_argument("sweep: unsupported instance for finite_q");
            const std::vector<QTable> truth = backward_induction(fmdp);
            parallel_for(runs, [&](long long r) {
                RunConfig rc;
                rc.schedule = schedule;
                rc.iterations = iterations;
                rc.seed = cell.run_seeds[static_cast<size_t>(r)];
                const auto rec = run_finite_horizon_q(fmdp, rc);
                double sup = 0.0;
                std::vector<double> sq;
                for (int h = 0; h < fmdp.horizon; ++h)
                    for (size_t i = 0; i < truth[h].data.size(); ++i) {
                        const double d = rec.final_estimate[h].data[i] - truth[h].data[i];
                        sup = std::max(sup, std::abs(d));
                        sq.push_back(d * d);
                    }
                cell.run_errors[static_cast<size_t>(r)] = sup;
                cell.run_state_sq[static_cast<size_t>(r)] = std::move(sq);
                cell.run_wall[static_cast<size_t>(r)] = rec.wall_seconds;
            });
            break;
        }
    }

    cell.cell_value = detail::aggregate_cell(cell, cfg.metric);
    cell.median = detail::median_of(cell.run_errors);
    cell.iqr = detail::quantile_of(cell.run_errors, 0.75) -
               detail::quantile_of(cell.run_errors, 0.25);
    return cell;
}

namespace detail {

inline ExponentFit fit_cells(const SweepConfig& cfg, std::vector<SweepCell> cells,
                             bool x_is_horizon) {
    ExponentFit fit;
    std::vector<double> xs, ys;
    for (const auto& c : cells) {
        if (c.aborted) {
            fit.notes.push_back("aborted cell gamma=" + std::to_string(c.gamma) +
                                " T=" + std::to_string(c.iterations) + ": " + c.message);
            continue;
        }
        xs.push_back(x_is_horizon ? std::log(1.0 / (1.0 - c.gamma))
                                  : std::log(static_cast<double>(c.iterations)));
        ys.push_back(std::log(c.cell_value));
    }
    if (xs.size() < 2) throw std::runtime_error("sweep: fewer than 2 usable cells, fit impossible");
    const LineFit ls = least_squares(xs, ys);
    fit.slope = ls.slope;
    fit.intercept = ls.intercept;
    fit.r_squared = ls.r_squared;
    if (cfg.instance.kind == InstanceSource::Kind::hard_mdp ||
        cfg.instance.kind == InstanceSource::Kind::hard_mrp)
        fit.notes.push_back("exponent fit ignores logarithmic-in-T corrections; at this scale "
                            "they are indistinguishable from constants");

    // Non-power-law check for iteration sweeps: geometric decay fits a
    // log-linear-in-T model better than a power law.
    if (!x_is_horizon) {
        std::vector<double> xt;
        for (const auto& c : cells)
            if (!c.aborted) xt.push_back(static_cast<double>(c.iterations));
        const LineFit lin = least_squares(xt, ys);
        if (lin.r_squared > ls.r_squared)
            fit.notes.push_back("non-power-law: log-linear in T fits better (r2 " +
                                std::to_string(lin.r_squared) + " vs " +
                                std::to_string(ls.r_squared) + ")");
    }

    // Bootstrap over seeds within each cell.
    const int B = cfg.bootstrap_resamples;
    if (B > 0) {
        RngStream rng(derive_seed(cfg.seed, 0x626f6f74ULL), 0);
        std::vector<double> slopes;
        slopes.reserve(static_cast<size_t>(B));
        std::vector<int> resample(static_cast<size_t>(cfg.runs_per_cell));
        for (int b = 0; b < B; ++b) {
            std::vector<double> bxs, bys;
            for (const auto& c : cells) {
                if (c.aborted) continue;
                const int n = static_cast<int>(c.run_errors.size());
                for (int i2 = 0; i2 < n; ++i2)
                    resample[static_cast<size_t>(i2)] =
                        static_cast<int>(rng.next_u64() % static_cast<uint64_t>(n));
                const double v = aggregate_cell(c, cfg.metric, &resample);
                if (!(v > 0.0)) continue;
                bxs.push_back(x_is_horizon ? std::log(1.0 / (1.0 - c.gamma))
                                           : std::log(static_cast<double>(c.iterations)));
                bys.push_back(std::log(v));
            }
            if (bxs.size() >= 2) slopes.push_back(least_squares(bxs, bys).slope);
        }
        double mean = 0.0;
        for (double s : slopes) mean += s;
        mean /= static_cast<double>(slopes.size());
        double ss = 0.0;
        for (double s : slopes) ss += (s - mean) * (s - mean);
        fit.stderr_ = std::sqrt(ss / static_cast<double>(slopes.size() - 1));
    }
    fit.cells = std::move(cells);
    return fit;
}

} // namespace detail

/// Slope of log(error) against log(1/(1-gamma)) at fixed T.
inline ExponentFit horizon_exponent_sweep(const SweepConfig& cfg,
                                          const LoadedInstance& loaded = {}) {
    if (cfg.gamma_grid.size() < 3)
        throw std::invalid_argument("horizon sweep: need at least 3 gamma points");
    if (cfg.t_grid.size() != 1)
        throw std::invalid_argument("horizon sweep: T must be fixed (one grid point)");
    if (cfg.algorithm == Algorithm::finite_q)
        throw std::invalid_argument("horizon sweep: finite_q has no discount dependence");
    std::vector<SweepCell> cells;
    for (double gamma : cfg.gamma_grid) {
        try {
            cells.push_back(run_sweep_cell(cfg, gamma, cfg.t_grid.front(), loaded));
        } catch (const std::exception& e) {
            SweepCell c;
            c.gamma = gamma;
            c.iterations = cfg.t_grid.front();
            c.aborted = true;
            c.message = e.what();
            cells.push_back(std::move(c));
        }
    }
    return detail::fit_cells(cfg, std::move(cells), true);
}

/// Slope of log(error) against log(T) at fixed gamma.
inline ExponentFit iteration_exponent_sweep(const SweepConfig& cfg,
                                            const LoadedInstance& loaded = {}) {
    if (cfg.t_grid.size() < 3)
        throw std::invalid_argument("iteration sweep: need at least 3 T points");
    if (cfg.gamma_grid.size() != 1)
        throw std::invalid_argument("iteration sweep: gamma must be fixed (one grid point)");
    const auto [lo, hi] = std::minmax_element(cfg.t_grid.begin(), cfg.t_grid.end());
    if (static_cast<double>(*hi) < 10.0 * static_cast<double>(*lo))
        throw std::invalid_argument("iteration sweep: T grid must span at least one decade");
    std::vector<SweepCell> cells;
    for (long long t : cfg.t_grid) {
        try {
            cells.push_back(run_sweep_cell(cfg, cfg.gamma_grid.front(), t, loaded));
        } catch (const std::exception& e) {
            SweepCell c;
            c.gamma = cfg.gamma_grid.front();
            c.iterations = t;
            c.aborted = true;
            c.message = e.what();
            cells.push_back(std::move(c));
        }
    }
    return detail::fit_cells(cfg, std::move(cells), false);
}

struct EpsilonThreshold {
    double epsilon = 0.0;
    long long iterations = 0;
    bool reached = false;
};

/// For each accuracy level, the smallest grid T whose cell median error is
/// within it; "unreached" when no grid point achieves it.
inline std::vector<EpsilonThreshold> epsilon_threshold_table(const SweepConfig& cfg,
                                                             const std::vector<double>& epsilons,
                                                             const LoadedInstance& loaded = {}) {
    if (!std::is_sorted(cfg.t_grid.begin(), cfg.t_grid.end()))
        throw std::invalid_argument("epsilon table: T grid must be sorted ascending");
    if (cfg.gamma_grid.size() != 1)
        throw std::invalid_argument("epsilon table: gamma must be fixed");
    std::vector<double> medians;
    for (long long t : cfg.t_grid)
        medians.push_back(run_sweep_cell(cfg, cfg.gamma_grid.front(), t, loaded).median);
    std::vector<EpsilonThreshold> out;
    for (double eps : epsilons) {
        EpsilonThreshold row;
        row.epsilon = eps;
        for (size_t i = 0; i < medians.size(); ++i)
            if (medians[i] <= eps) {
                row.iterations = cfg.t_grid[i];
                row.reached = true;
                break;
            }
        out.push_back(row);
    }
    return out;
}

struct OverestimationCell {
    double gamma = 0.0;
    BiasVarianceEstimate estimate;
    bool positive_bias = false; // bias > 0 at the 3-stderr level
};

/// Bias/variance probe of the hard instance's two-action state across a
/// gamma grid, flagging cells with significantly positive bias.
inline std::vector<OverestimationCell> overestimation_report(const std::vector<double>& gamma_grid,
                                                             const Schedule& schedule,
                                                             long long iterations, int runs,
                                                             uint64_t seed, int state = 1) {
    std::vector<OverestimationCell> out;
    for (double gamma : gamma_grid) {
        Schedule s = schedule;
        if (s.kind == ScheduleKind::rescaled_linear) {
            s.gamma = gamma;
            s.horizon_T = iterations;
        }
        OverestimationCell cell;
        cell.gamma = gamma;
        cell.estimate = bias_variance_probe(
            gamma, s, iterations, runs, detail::cell_key(seed, gamma, iterations), state);
        cell.positive_bias = cell.estimate.bias > 3.0 * cell.estimate.se_mean;
        out.push_back(std::move(cell));
    }
    return out;
}

} // namespace tabrl
