// Command-line front end: configuration-driven experiment runner emitting
// CSV evidence packages with a SHA-256 manifest.
//
// Subcommands: audit-equivalence, rollout, degrade-prior, cpi-diagnostic,
// alpha-study, manifest, validate.
// Exit codes: 0 success, 1 validation failure, 2 config error.

#include "poekl/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Actor-preserving policy composition experiment runner"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may appear after the subcommand

    std::string config_path;
    std::string out_dir;
    long long seed_override = -1;
    unsigned jobs = 1;
    app.add_option("--config", config_path, "Path to a JSON run configuration");
    app.add_option("--out", out_dir, "Output directory (overrides the config's out_dir)");
    app.add_option("--seed-override", seed_override, "Replace the seed list with this single seed");
    app.add_option("--jobs", jobs, "Worker threads (output is identical for any value)");

    auto* audit = app.add_subcommand("audit-equivalence", "PoE vs KL-Reg closed-form audit");
    auto* roll = app.add_subcommand("rollout", "Main rollout package (episodes + summaries)");
    auto* degrade = app.add_subcommand("degrade-prior", "Prior-degradation study");
    auto* cpi = app.add_subcommand("cpi-diagnostic", "Conservative-improvement bound sweep");
    auto* alpha = app.add_subcommand("alpha-study", "Adaptive alpha selection study");
    auto* manifest = app.add_subcommand("manifest", "Write or verify the package manifest");
    bool verify = false;
    manifest->add_flag("--verify", verify, "Verify hashes instead of writing");
    auto* validate = app.add_subcommand("validate", "Validate an emitted package");

    CLI11_PARSE(app, argc, argv);

    try {
        poekl::RunConfig cfg =
            config_path.empty() ? poekl::RunConfig{} : poekl::load_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (seed_override >= 0)
            cfg.seeds = {static_cast<uint64_t>(seed_override)};
        cfg.validate();

        if (audit->parsed()) return poekl::cmd_audit_equivalence(cfg);
        if (roll->parsed()) return poekl::cmd_rollout_package(cfg, jobs);
        if (degrade->parsed()) return poekl::cmd_prior_degradation(cfg, jobs);
        if (cpi->parsed()) return poekl::cmd_cpi_diagnostic(cfg);
        if (alpha->parsed()) return poekl::cmd_alpha_study(cfg);
        if (manifest->parsed()) return poekl::cmd_manifest(cfg, verify);
        if (validate->parsed()) return poekl::cmd_validate(cfg);
    } catch (const poekl::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
