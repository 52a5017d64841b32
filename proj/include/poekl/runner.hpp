#pragma once

#include "poekl/alpha_select.hpp"
#include "poekl/config.hpp"
#include "poekl/critic.hpp"
#include "poekl/csv.hpp"
#include "poekl/deploy.hpp"
#include "poekl/manifest.hpp"
#include "poekl/mdp.hpp"
#include "poekl/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <thread>

namespace poekl {

namespace detail {

inline GaussianPolicyFn as_fn(LinearGaussianPolicy p) {
    return [p = std::move(p)](const EnvState& s) { return p.dist(s); };
}

/// Mixture-sampled Monte Carlo TV estimate for finite pmfs, the discrete
/// analog of mc_tv_estimate.
inline double finite_mc_tv(const FinitePolicy& p, const FinitePolicy& q, size_t n_samples,
                           uint64_t seed) {
    Rng rng(seed);
    double acc = 0.0;
    for (size_t k = 0; k < n_samples; ++k) {
        const FinitePolicy& comp = (rng.uniform() < 0.5) ? p : q;
        // inverse-CDF draw
        const double u = rng.uniform();
        double cum = 0.0;
        size_t a = comp.size() - 1;
        for (size_t i = 0; i < comp.size(); ++i) {
            cum += comp.probs[i];
            if (u < cum) {
                a = i;
                break;
            }
        }
        const double pa = p.probs[a], qa = q.probs[a];
        if (pa + qa > 0.0) acc += std::abs(pa - qa) / (pa + qa);
    }
    return acc / static_cast<double>(n_samples);
}

inline void parallel_for(size_t n_tasks, size_t jobs, const std::function<void(size_t)>& body) {
    if (jobs <= 1 || n_tasks <= 1) {
        for (size_t i = 0; i < n_tasks; ++i) body(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> workers;
    const size_t n_workers = std::min(jobs, n_tasks);
    for (size_t w = 0; w < n_workers; ++w)
        workers.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) body(i);
        });
    for (auto& t : workers) t.join();
}

/// The 13 core deployment methods: frozen, prior-only, additive(lambda),
/// PoE over the alpha grid, KL-Reg over the matched beta grid. The KL-Reg
/// parameter is computed as alpha/(1-alpha) from the matched grid alpha so
/// the pairing is exact; the configured beta value only names the method.
struct NamedMethod {
    MethodSpec spec;
    std::string id;
};

inline std::vector<NamedMethod> core_methods(const RunConfig& c) {
    std::vector<NamedMethod> out;
    out.push_back({{MethodKind::frozen, 0.0, c.awr_clip}, "frozen"});
    out.push_back({{MethodKind::prior_only, 0.0, c.awr_clip}, "prior_only"});
    {
        MethodSpec m{MethodKind::additive, c.lambda, c.awr_clip};
        out.push_back({m, m.id()});
    }
    for (double a : c.alpha_grid) {
        MethodSpec m{MethodKind::poe, a, c.awr_clip};
        out.push_back({m, m.id()});
    }
    for (size_t i = 0; i < c.alpha_grid.size(); ++i) {
        MethodSpec m{MethodKind::klreg, alpha_to_beta(c.alpha_grid[i]), c.awr_clip};
        char buf[32];
        std::snprintf(buf, sizeof buf, "klreg_%.3f", c.beta_grid[i]);
        out.push_back({m, buf});
    }
    return out;
}

inline std::filesystem::path ensure_out(const RunConfig& c) {
    std::filesystem::path dir(c.out_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline CellSummary summarize_cell(const std::string& method, const std::string& goal,
                                  const std::vector<EpisodeRecord>& episodes, const RunConfig& c) {
    CellSummary cell;
    cell.method_id = method;
    cell.env_id = "pointmass";
    cell.goal_id = goal;
    for (const auto& e : episodes) cell.returns.push_back(e.goal_weighted_return);
    cell.mean = mean_of(cell.returns);
    cell.n_seeds = c.seeds.size();
    const uint64_t bs = Rng::derive(c.bootstrap_seed, Rng::hash_str(method), Rng::hash_str(goal));
    bool constant = true;
    for (double r : cell.returns)
        if (r != cell.returns.front()) constant = false;
    if (constant) {
        cell.ci_low = cell.ci_high = cell.mean;
    } else {
        const auto [lo, hi] = bootstrap_ci(cell.returns, c.ci_level, c.bootstrap_resamples, bs);
        cell.ci_low = lo;
        cell.ci_high = hi;
    }
    return cell;
}

} // namespace detail

// ---------------------------------------------------------------------------
// audit-equivalence
// ---------------------------------------------------------------------------

inline int cmd_audit_equivalence(const RunConfig& c) {
    c.validate();
    const auto dir = detail::ensure_out(c);
    CsvWriter csv((dir / "equivalence_audit.csv").string(),
                  {"alpha", "beta", "n_states", "max_mean_abs_diff", "mean_mean_abs_diff",
                   "max_variance_residual"});
    bool within = true;
    for (size_t i = 0; i < c.alpha_grid.size(); ++i) {
        const double alpha = c.alpha_grid[i];
        Rng rng(Rng::derive(c.audit_seed, 0x61756474ULL, i)); // "audt"
        double max_mean = 0.0, sum_mean = 0.0, max_var = 0.0;
        for (size_t k = 0; k < c.audit_states; ++k) {
            const size_t d = c.env.action_dim;
            std::vector<double> ma(d), va(d), mp(d), vp(d);
            for (size_t j = 0; j < d; ++j) {
                ma[j] = rng.uniform(-2.0, 2.0);
                mp[j] = rng.uniform(-2.0, 2.0);
                const double sa = std::exp(rng.uniform(std::log(0.05), 0.0));
                const double sp = std::exp(rng.uniform(std::log(0.05), 0.0));
                va[j] = sa * sa;
                vp[j] = sp * sp;
            }
            const EquivalenceRecord rec =
                equivalence_audit(DiagGaussian{ma, va}, DiagGaussian{mp, vp}, alpha);
            max_mean = std::max(max_mean, rec.max_mean_abs_diff);
            sum_mean += rec.max_mean_abs_diff;
            max_var = std::max(max_var, rec.variance_identity_residual);
        }
        if (max_mean > c.audit_tolerance || max_var > c.audit_tolerance) within = false;
        csv.write_row_strings({csv_num(alpha), csv_num(alpha_to_beta(alpha)),
                               std::to_string(c.audit_states), csv_num(max_mean),
                               csv_num(sum_mean / static_cast<double>(c.audit_states)),
                               csv_num(max_var)});
    }
    csv.close();
    return within ? 0 : 1;
}

// ---------------------------------------------------------------------------
// rollout package
// ---------------------------------------------------------------------------

namespace detail {

struct CellRecords {
    std::string method_id;
    std::string goal_id;
    std::vector<EpisodeRecord> episodes;
};

inline void write_episode_csv(CsvWriter& csv, const EpisodeRecord& e) {
    csv.write_row_strings({e.method_id, e.goal_id, std::to_string(e.seed),
                           std::to_string(e.episode_index), csv_num(e.goal_weighted_return),
                           csv_num(e.raw_component_sums[0]), csv_num(e.raw_component_sums[1]),
                           csv_num(e.raw_component_sums[2]), std::to_string(e.length),
                           csv_num(e.mean_kl_from_actor)});
}

inline const std::vector<std::string> kEpisodeHeader = {
    "method_id", "goal_id", "seed", "episode_index", "goal_weighted_return",
    "rc_forward", "rc_control", "rc_alive", "length", "mean_kl_from_actor"};

} // namespace detail

inline int cmd_rollout_package(const RunConfig& c, size_t jobs = 1) {
    c.validate();
    const auto dir = detail::ensure_out(c);

    const GaussianPolicyFn actor = detail::as_fn(make_actor(c.env));
    std::map<std::string, GaussianPolicyFn> priors;
    for (const Goal& g : c.goals)
        priors[g.id] = detail::as_fn(make_prior(PriorKind::trained, g, c.env, c.prior_seed));

    // critic for the AWR comparison, trained once on behavior data
    const auto dataset = behavior_dataset(c.env, actor, c.dataset_size, c.critic_seed);
    FeatureSpec fspec;
    fspec.action_dim = c.env.action_dim;
    GoalSampler sampler{c.goals};
    const FqeResult fqe = fqe_train(dataset, fspec, sampler, c.fqe_epochs, c.fqe_gamma,
                                    c.polyak_tau, actor, c.critic_seed);
    auto critic = std::make_shared<const LinearCritic>(fqe.critic);

    // core cells
    const auto methods = detail::core_methods(c);
    std::vector<detail::CellRecords> cells(methods.size() * c.goals.size());
    detail::parallel_for(cells.size(), jobs, [&](size_t i) {
        const auto& m = methods[i / c.goals.size()];
        const Goal& g = c.goals[i % c.goals.size()];
        const ActionRule rule = compose_method(m.spec, actor, priors.at(g.id), nullptr, g);
        cells[i] = {m.id, g.id,
                    rollout(c.env, rule, g, c.seeds, c.episodes_per_seed, m.id)};
    });

    // AWR cells
    std::vector<detail::CellRecords> awr_cells(c.awr_betas.size() * c.goals.size());
    detail::parallel_for(awr_cells.size(), jobs, [&](size_t i) {
        MethodSpec m{MethodKind::awr, c.awr_betas[i / c.goals.size()], c.awr_clip};
        const Goal& g = c.goals[i % c.goals.size()];
        const ActionRule rule = compose_method(m, actor, priors.at(g.id), critic, g);
        awr_cells[i] = {m.id(), g.id,
                        rollout(c.env, rule, g, c.seeds, c.episodes_per_seed, m.id())};
    });

    // episodes.csv (core methods only; the AWR comparison has its own file)
    {
        CsvWriter csv((dir / "episodes.csv").string(), detail::kEpisodeHeader);
        for (const auto& cell : cells)
            for (const auto& e : cell.episodes) detail::write_episode_csv(csv, e);
    }
    {
        CsvWriter csv((dir / "awr_episodes.csv").string(), detail::kEpisodeHeader);
        for (const auto& cell : awr_cells)
            for (const auto& e : cell.episodes) detail::write_episode_csv(csv, e);
    }

    // per_seed_summary.csv
    {
        CsvWriter csv((dir / "per_seed_summary.csv").string(),
                      {"method_id", "goal_id", "seed", "mean_return", "mean_kl", "n_episodes"});
        for (const auto& cell : cells)
            for (uint64_t seed : c.seeds) {
                double ret = 0.0, kl = 0.0;
                size_t n = 0;
                for (const auto& e : cell.episodes)
                    if (e.seed == seed) {
                        ret += e.goal_weighted_return;
                        kl += e.mean_kl_from_actor;
                        ++n;
                    }
                csv.write_row_strings({cell.method_id, cell.goal_id, std::to_string(seed),
                                       csv_num(ret / static_cast<double>(n)),
                                       csv_num(kl / static_cast<double>(n)), std::to_string(n)});
            }
    }

    // cell summaries + classifier inputs
    std::map<std::pair<std::string, std::string>, CellSummary> summaries;
    for (const auto& cell : cells)
        summaries[{cell.method_id, cell.goal_id}] =
            detail::summarize_cell(cell.method_id, cell.goal_id, cell.episodes, c);

    {
        CsvWriter csv((dir / "cell_summary.csv").string(),
                      {"method_id", "goal_id", "mean_return", "ci_low", "ci_high", "mean_kl",
                       "prob_improve_vs_frozen", "n_episodes", "n_seeds"});
        for (const auto& cell : cells) {
            const CellSummary& s = summaries.at({cell.method_id, cell.goal_id});
            const CellSummary& fr = summaries.at({"frozen", cell.goal_id});
            double kl = 0.0;
            for (const auto& e : cell.episodes) kl += e.mean_kl_from_actor;
            kl /= static_cast<double>(cell.episodes.size());
            csv.write_row_strings({cell.method_id, cell.goal_id, csv_num(s.mean),
                                   csv_num(s.ci_low), csv_num(s.ci_high), csv_num(kl),
                                   csv_num(prob_improvement(s.returns, fr.returns)),
                                   std::to_string(s.returns.size()),
                                   std::to_string(s.n_seeds)});
        }
    }

    // matched_pairs.csv: PoE vs matched KL-Reg, per (alpha, goal)
    {
        CsvWriter csv((dir / "matched_pairs.csv").string(),
                      {"alpha", "beta", "goal_id", "mean_diff", "ci_low", "ci_high"});
        for (size_t i = 0; i < c.alpha_grid.size(); ++i) {
            char poe_id[32], kl_id[32];
            std::snprintf(poe_id, sizeof poe_id, "poe_%.3f", c.alpha_grid[i]);
            std::snprintf(kl_id, sizeof kl_id, "klreg_%.3f", c.beta_grid[i]);
            for (const Goal& g : c.goals) {
                const auto& a = summaries.at({poe_id, g.id}).returns;
                const auto& b = summaries.at({kl_id, g.id}).returns;
                const PairedDiff pd = paired_diff_ci(a, b, c.ci_level, c.bootstrap_resamples,
                                                     Rng::derive(c.bootstrap_seed, i));
                csv.write_row_strings({csv_num(c.alpha_grid[i]), csv_num(c.beta_grid[i]), g.id,
                                       csv_num(pd.mean_diff), csv_num(pd.ci_low),
                                       csv_num(pd.ci_high)});
            }
        }
    }

    // diagnostic_summary.csv: Help/Frozen/Hurt per goal; best over the
    // composition families (additive + PoE grid + KL-Reg grid)
    {
        CsvWriter csv((dir / "diagnostic_summary.csv").string(),
                      {"goal_id", "frozen_mean", "frozen_ci_low", "frozen_ci_high", "best_method",
                       "best_mean", "best_gap", "half_width", "verdict", "best_families"});
        for (const Goal& g : c.goals) {
            const CellSummary& fr = summaries.at({"frozen", g.id});
            std::string best_id;
            double best_mean = -std::numeric_limits<double>::infinity();
            for (const auto& m : methods) {
                if (m.spec.kind != MethodKind::additive && m.spec.kind != MethodKind::poe &&
                    m.spec.kind != MethodKind::klreg)
                    continue;
                const double mean = summaries.at({m.id, g.id}).mean;
                if (mean > best_mean) {
                    best_mean = mean;
                    best_id = m.id;
                }
            }
            const Verdict v = classify_cell(fr, best_mean);
            csv.write_row_strings({g.id, csv_num(fr.mean), csv_num(fr.ci_low), csv_num(fr.ci_high),
                                   best_id, csv_num(best_mean), csv_num(v.best_gap),
                                   csv_num(v.half_width), verdict_name(v.label),
                                   "additive|poe|klreg"});
        }
    }

    // awr_comparison.csv
    {
        CsvWriter csv((dir / "awr_comparison.csv").string(),
                      {"method_id", "goal_id", "mean_return", "ci_low", "ci_high", "mean_kl",
                       "frozen_mean", "gap_vs_frozen"});
        for (const auto& cell : awr_cells) {
            const CellSummary s = detail::summarize_cell(cell.method_id, cell.goal_id,
                                                         cell.episodes, c);
            const CellSummary& fr = summaries.at({"frozen", cell.goal_id});
            double kl = 0.0;
            for (const auto& e : cell.episodes) kl += e.mean_kl_from_actor;
            kl /= static_cast<double>(cell.episodes.size());
            csv.write_row_strings({cell.method_id, cell.goal_id, csv_num(s.mean),
                                   csv_num(s.ci_low), csv_num(s.ci_high), csv_num(kl),
                                   csv_num(fr.mean), csv_num(s.mean - fr.mean)});
        }
    }

    write_manifest(dir, c.to_json(), c.seeds);
    return 0;
}

// ---------------------------------------------------------------------------
// degrade-prior
// ---------------------------------------------------------------------------

inline int cmd_prior_degradation(const RunConfig& c, size_t jobs = 1) {
    c.validate();
    const auto dir = detail::ensure_out(c);
    const GaussianPolicyFn actor = detail::as_fn(make_actor(c.env));

    const std::vector<PriorKind> variants = {PriorKind::trained, PriorKind::undertrained,
                                             PriorKind::noisy, PriorKind::random};
    std::vector<detail::NamedMethod> methods;
    methods.push_back({{MethodKind::frozen, 0.0, c.awr_clip}, "frozen"});
    methods.push_back({{MethodKind::prior_only, 0.0, c.awr_clip}, "prior_only"});
    {
        MethodSpec m{MethodKind::additive, c.lambda, c.awr_clip};
        methods.push_back({m, m.id()});
    }
    {
        MethodSpec m{MethodKind::poe, 0.5, c.awr_clip};
        methods.push_back({m, m.id()});
    }
    methods.push_back({{MethodKind::klreg, 1.0, c.awr_clip}, "klreg_1.000"});

    struct Task {
        PriorKind variant;
        size_t method;
        size_t goal;
        std::vector<EpisodeRecord> episodes;
    };
    std::vector<Task> tasks;
    for (PriorKind v : variants)
        for (size_t m = 0; m < methods.size(); ++m)
            for (size_t g = 0; g < c.goals.size(); ++g) tasks.push_back({v, m, g, {}});

    detail::parallel_for(tasks.size(), jobs, [&](size_t i) {
        Task& t = tasks[i];
        const Goal& g = c.goals[t.goal];
        const GaussianPolicyFn prior =
            detail::as_fn(make_prior(t.variant, g, c.env, c.prior_seed, c.prior_noise_sigma));
        const ActionRule rule = compose_method(methods[t.method].spec, actor, prior, nullptr, g);
        t.episodes = rollout(c.env, rule, g, c.degrade_seeds, c.degrade_episodes,
                             methods[t.method].id);
    });

    {
        CsvWriter csv((dir / "degrade_episodes.csv").string(),
                      {"variant", "method_id", "goal_id", "seed", "episode_index",
                       "goal_weighted_return", "length", "mean_kl_from_actor"});
        for (const auto& t : tasks)
            for (const auto& e : t.episodes)
                csv.write_row_strings({prior_kind_name(t.variant), e.method_id, e.goal_id,
                                       std::to_string(e.seed), std::to_string(e.episode_index),
                                       csv_num(e.goal_weighted_return), std::to_string(e.length),
                                       csv_num(e.mean_kl_from_actor)});
    }

    // cell means and the frozen-gap pivot (averaged over goals)
    std::map<std::pair<std::string, std::pair<std::string, std::string>>, double> cell_mean;
    {
        CsvWriter csv((dir / "degrade_cells.csv").string(),
                      {"variant", "method_id", "goal_id", "mean_return", "n_episodes"});
        for (const auto& t : tasks) {
            double mean = 0.0;
            for (const auto& e : t.episodes) mean += e.goal_weighted_return;
            mean /= static_cast<double>(t.episodes.size());
            const std::string variant = prior_kind_name(t.variant);
            cell_mean[{variant, {methods[t.method].id, c.goals[t.goal].id}}] = mean;
            csv.write_row_strings({variant, methods[t.method].id, c.goals[t.goal].id,
                                   csv_num(mean), std::to_string(t.episodes.size())});
        }
    }
    {
        CsvWriter csv((dir / "degrade_pivot.csv").string(),
                      {"variant", "method_id", "gap_vs_frozen"});
        for (PriorKind v : variants)
            for (const auto& m : methods) {
                double gap = 0.0;
                for (const Goal& g : c.goals) {
                    const std::string variant = prior_kind_name(v);
                    gap += cell_mean.at({variant, {m.id, g.id}}) -
                           cell_mean.at({variant, {"frozen", g.id}});
                }
                gap /= static_cast<double>(c.goals.size());
                csv.write_row_strings({prior_kind_name(v), m.id, csv_num(gap)});
            }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// cpi-diagnostic
// ---------------------------------------------------------------------------

inline int cmd_cpi_diagnostic(const RunConfig& c) {
    c.validate();
    const auto dir = detail::ensure_out(c);
    CsvWriter csv((dir / "cpi_diagnostic.csv").string(),
                  {"gamma", "instance", "goal_id", "alpha", "lhs", "gain", "eps_a",
                   "delta_pi_exact", "delta_pi_mc", "delta_pi_pinsker", "penalty_coeff", "rhs",
                   "rhs_unit_proxy", "improvement_flag", "loose_witness"});
    for (size_t gi = 0; gi < c.cpi_gammas.size(); ++gi) {
        const double gamma = c.cpi_gammas[gi];
        for (size_t inst = 0; inst < c.cpi_instances; ++inst) {
            Rng rng(Rng::derive(c.cpi_seed, gi, inst));
            const TabularMdp mdp = random_mdp(c.cpi_states, c.cpi_actions, gamma, rng);
            const TabularPolicy actor = random_policy(c.cpi_states, c.cpi_actions, rng);
            const TabularPolicy prior = random_policy(c.cpi_states, c.cpi_actions, rng);
            for (const Goal& goal : c.goals) {
                for (double alpha : c.alpha_grid) {
                    TabularPolicy refined;
                    refined.probs.resize(c.cpi_states);
                    for (size_t s = 0; s < c.cpi_states; ++s)
                        refined.probs[s] = poe_finite(actor.row(s), prior.row(s), alpha).probs;
                    const CpiDiagnostic d = cpi_diagnostic(mdp, actor, refined, goal.weights);

                    double mc_tv = 0.0, max_kl = 0.0;
                    for (size_t s = 0; s < c.cpi_states; ++s) {
                        mc_tv = std::max(
                            mc_tv, detail::finite_mc_tv(
                                       refined.row(s), actor.row(s), c.tv_samples,
                                       Rng::derive(c.cpi_seed, 0x74767476ULL,
                                                   Rng::derive(gi * 1000 + inst, s,
                                                               Rng::hash_str(goal.id)) ^
                                                       static_cast<uint64_t>(alpha * 1e6))));
                        max_kl = std::max(max_kl, finite_kl(refined.row(s), actor.row(s)));
                    }
                    const double pinsker = pinsker_tv_bound(max_kl);
                    const bool loose = (d.lhs - d.rhs) > 10.0 * std::abs(d.lhs);
                    // unit proxy: eps_A replaced by the conservative constant 1.0
                    const double rhs_unit =
                        d.gain_term / (1.0 - gamma) - d.penalty_coeff * 1.0 * d.delta_pi;
                    csv.write_row_strings(
                        {csv_num(gamma), std::to_string(inst), goal.id, csv_num(alpha),
                         csv_num(d.lhs), csv_num(d.gain_term), csv_num(d.eps_a),
                         csv_num(d.delta_pi), csv_num(mc_tv), csv_num(pinsker),
                         csv_num(d.penalty_coeff), csv_num(d.rhs), csv_num(rhs_unit),
                         d.improvement_flag ? "1" : "0", loose ? "1" : "0"});
                }
            }
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// alpha-study
// ---------------------------------------------------------------------------

inline std::vector<AlphaGridResult> alpha_study_grid(const RunConfig& c, const Goal& goal) {
    const GaussianPolicyFn actor = detail::as_fn(make_actor(c.env));
    const GaussianPolicyFn prior =
        detail::as_fn(make_prior(PriorKind::trained, goal, c.env, c.prior_seed));
    std::vector<AlphaGridResult> grid;
    for (double alpha : c.alpha_grid) {
        MethodSpec m{MethodKind::poe, alpha, c.awr_clip};
        const ActionRule rule = compose_method(m, actor, prior, nullptr, goal);
        const auto summarize = [&](const std::vector<uint64_t>& seeds, double& ret, double& kl) {
            const auto eps = rollout(c.env, rule, goal, seeds, c.episodes_per_seed, m.id());
            ret = 0.0;
            kl = 0.0;
            for (const auto& e : eps) {
                ret += e.goal_weighted_return;
                kl += e.mean_kl_from_actor;
            }
            ret /= static_cast<double>(eps.size());
            kl /= static_cast<double>(eps.size());
        };
        AlphaGridResult r;
        r.alpha = alpha;
        summarize(c.val_seeds, r.val_return, r.val_kl);
        summarize(c.test_seeds, r.test_return, r.test_kl);
        grid.push_back(r);
    }
    return grid;
}

inline int cmd_alpha_study(const RunConfig& c) {
    c.validate();
    const auto dir = detail::ensure_out(c);
    CsvWriter csv((dir / "alpha_study.csv").string(),
                  {"goal_id", "rule", "kappa", "selected_alpha", "oracle_alpha", "test_return",
                   "oracle_return", "selection_loss", "test_kl"});
    CsvWriter grid_csv((dir / "alpha_grid.csv").string(),
                       {"goal_id", "alpha", "val_return", "test_return", "val_kl", "test_kl"});
    for (const Goal& goal : c.goals) {
        const auto grid = alpha_study_grid(c, goal);
        for (const auto& g : grid)
            grid_csv.write_row_strings({goal.id, csv_num(g.alpha), csv_num(g.val_return),
                                        csv_num(g.test_return), csv_num(g.val_kl),
                                        csv_num(g.test_kl)});
        // test-split oracle, ties toward larger alpha
        const AlphaGridResult* oracle = &grid.front();
        for (const auto& g : grid)
            if (g.test_return >= oracle->test_return) oracle = &g;
        const auto at = [&](double alpha) -> const AlphaGridResult& {
            for (const auto& g : grid)
                if (g.alpha == alpha) return g;
            throw std::logic_error("alpha not in grid");
        };
        const auto emit = [&](const std::string& rule, const std::string& kappa_field,
                              double selected) {
            const AlphaGridResult& sel = at(selected);
            csv.write_row_strings({goal.id, rule, kappa_field, csv_num(selected),
                                   csv_num(oracle->alpha), csv_num(sel.test_return),
                                   csv_num(oracle->test_return),
                                   csv_num(selection_loss(selected, grid)),
                                   csv_num(sel.test_kl)});
        };
        for (double kappa : c.kappa_set)
            emit("kl_budget", csv_num(kappa), kl_budget_select(grid, kappa));
        emit("val_best", "", val_best_select(grid));
    }
    return 0;
}

// ---------------------------------------------------------------------------
// manifest / validate
// ---------------------------------------------------------------------------

inline int cmd_manifest(const RunConfig& c, bool verify) {
    const std::filesystem::path dir(c.out_dir);
    if (!std::filesystem::is_directory(dir)) {
        std::fprintf(stderr, "manifest: no such directory: %s\n", dir.string().c_str());
        return 1;
    }
    if (verify) {
        const ManifestCheck check = verify_manifest(dir);
        for (const auto& p : check.problems) std::fprintf(stderr, "manifest: %s\n", p.c_str());
        return check.ok ? 0 : 1;
    }
    write_manifest(dir, c.to_json(), c.seeds);
    return 0;
}

inline int cmd_validate(const RunConfig& c, std::string* report = nullptr) {
    c.validate();
    const std::filesystem::path dir(c.out_dir);
    std::vector<std::string> problems;
    const auto note = [&](const std::string& p) { problems.push_back(p); };

    const ManifestCheck mc = verify_manifest(dir);
    if (!mc.ok)
        for (const auto& p : mc.problems) note("manifest: " + p);

    const auto finite_check = [&](const CsvTable& t, const std::string& name) {
        for (const auto& row : t.rows)
            for (const std::string& f : row) {
                if (f.empty()) continue;
                char* end = nullptr;
                const double v = std::strtod(f.c_str(), &end);
                if (end != f.c_str() + f.size()) continue; // non-numeric field
                if (!std::isfinite(v)) {
                    note(name + ": non-finite value " + f);
                    return;
                }
            }
    };

    try {
        const CsvTable eps = read_csv((dir / "episodes.csv").string());
        finite_check(eps, "episodes.csv");
        const auto methods = detail::core_methods(c);
        const size_t expect =
            methods.size() * c.goals.size() * c.seeds.size() * c.episodes_per_seed;
        if (eps.rows.size() != expect)
            note("episodes.csv: expected " + std::to_string(expect) + " rows, found " +
                 std::to_string(eps.rows.size()));

        const size_t c_m = eps.col("method_id"), c_g = eps.col("goal_id"), c_s = eps.col("seed"),
                     c_e = eps.col("episode_index"), c_r = eps.col("goal_weighted_return"),
                     c_len = eps.col("length");
        // coverage: every cell key exactly once; seeds drawn from the config list
        std::map<std::string, size_t> count;
        std::map<std::string, std::pair<std::string, std::string>> payload;
        for (const auto& row : eps.rows) {
            const std::string key = row[c_m] + "|" + row[c_g] + "|" + row[c_s] + "|" + row[c_e];
            count[key] += 1;
            payload[key] = {row[c_r], row[c_len]};
            const uint64_t seed = std::strtoull(row[c_s].c_str(), nullptr, 10);
            if (std::find(c.seeds.begin(), c.seeds.end(), seed) == c.seeds.end())
                note("episodes.csv: seed " + row[c_s] + " not in config seed list");
        }
        for (const auto& m : methods)
            for (const Goal& g : c.goals)
                for (uint64_t seed : c.seeds)
                    for (size_t ep = 0; ep < c.episodes_per_seed; ++ep) {
                        const std::string key = m.id + "|" + g.id + "|" + std::to_string(seed) +
                                                "|" + std::to_string(ep);
                        if (count[key] != 1)
                            note("episodes.csv: cell key " + key + " appears " +
                                 std::to_string(count[key]) + " times");
                    }
        // matched-pair bit identity: PoE and its matched KL-Reg rows agree
        for (size_t i = 0; i < c.alpha_grid.size(); ++i) {
            char poe_id[32], kl_id[32];
            std::snprintf(poe_id, sizeof poe_id, "poe_%.3f", c.alpha_grid[i]);
            std::snprintf(kl_id, sizeof kl_id, "klreg_%.3f", c.beta_grid[i]);
            for (const Goal& g : c.goals)
                for (uint64_t seed : c.seeds)
                    for (size_t ep = 0; ep < c.episodes_per_seed; ++ep) {
                        const std::string suffix =
                            "|" + g.id + "|" + std::to_string(seed) + "|" + std::to_string(ep);
                        if (payload[poe_id + suffix] != payload[kl_id + suffix])
                            note(std::string("episodes.csv: matched pair mismatch at ") + poe_id +
                                 suffix);
                    }
        }
    } catch (const std::exception& e) {
        note(std::string("episodes.csv: ") + e.what());
    }

    for (const char* name : {"per_seed_summary.csv", "cell_summary.csv", "matched_pairs.csv",
                             "diagnostic_summary.csv", "awr_comparison.csv"}) {
        try {
            finite_check(read_csv((dir / name).string()), name);
        } catch (const std::exception& e) {
            note(std::string(name) + ": " + e.what());
        }
    }

    std::string text;
    for (const auto& p : problems) text += p + "\n";
    text += problems.empty() ? "STATUS: PASS\n" : "STATUS: FAIL\n";
    if (report)
        *report = text;
    else
        std::fputs(text.c_str(), stdout);
    return problems.empty() ? 0 : 1;
}

} // namespace poekl
