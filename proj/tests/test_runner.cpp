#include "poekl/runner.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

using namespace poekl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("poekl_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

RunConfig small_config(const std::string& tag) {
    RunConfig c;
    c.seeds = {0, 1};
    c.episodes_per_seed = 2;
    c.val_seeds = {0};
    c.test_seeds = {1};
    c.degrade_seeds = {0};
    c.degrade_episodes = 2;
    c.bootstrap_resamples = 200;
    c.audit_states = 50;
    c.dataset_size = 60;
    c.fqe_epochs = 4;
    c.cpi_instances = 1;
    c.cpi_states = 4;
    c.tv_samples = 64;
    c.env.max_steps = 30;
    c.out_dir = fresh_dir(tag).string();
    return c;
}

} // namespace

TEST_CASE("default config validates and survives a json round trip", "[runner]") {
    RunConfig c;
    REQUIRE_NOTHROW(c.validate());
    const RunConfig back = config_from_json(c.to_json());
    REQUIRE(back.alpha_grid == c.alpha_grid);
    REQUIRE(back.beta_grid == c.beta_grid);
    REQUIRE(back.seeds == c.seeds);
    REQUIRE(back.prior_seed == c.prior_seed);
    REQUIRE(back.goals.size() == c.goals.size());
    REQUIRE(back.goals[2].id == "G3");
    REQUIRE(back.env.max_steps == c.env.max_steps);
}

TEST_CASE("config rejects malformed input", "[runner]") {
    SECTION("unknown key") {
        REQUIRE_THROWS_AS(config_from_json({{"not_a_key", 1}}), ConfigError);
    }
    SECTION("beta grid not matching alpha/(1-alpha)") {
        nlohmann::json j;
        j["alpha_grid"] = {0.1, 0.5};
        j["beta_grid"] = {0.111, 2.0};
        REQUIRE_THROWS_AS(config_from_json(j), ConfigError);
    }
    SECTION("mismatched grid lengths") {
        nlohmann::json j;
        j["alpha_grid"] = {0.5};
        j["beta_grid"] = {1.0, 9.0};
        REQUIRE_THROWS_AS(config_from_json(j), ConfigError);
    }
    SECTION("unordered kappa set") {
        nlohmann::json j;
        j["kappa_set"] = {0.5, 0.1};
        REQUIRE_THROWS_AS(config_from_json(j), ConfigError);
    }
    SECTION("wrongly typed value") {
        nlohmann::json j;
        j["episodes_per_seed"] = "five";
        REQUIRE_THROWS_AS(config_from_json(j), ConfigError);
    }
    SECTION("missing file and parse error") {
        REQUIRE_THROWS_AS(load_config("/nonexistent/path.json"), ConfigError);
        const fs::path p = fresh_dir("badjson") / "c.json";
        std::ofstream(p) << "{not json";
        REQUIRE_THROWS_AS(load_config(p.string()), ConfigError);
    }
}

TEST_CASE("csv formatting and round trip", "[runner]") {
    REQUIRE(csv_num(1.0) == "1");
    REQUIRE(csv_num(0.1) == "0.1");
    REQUIRE(csv_num(-2.5e-8) == "-2.5e-08");
    const fs::path dir = fresh_dir("csv");
    const std::string path = (dir / "t.csv").string();
    {
        CsvWriter w(path, {"a", "b"});
        w.write_row_strings({"1", "x"});
        w.write_row_strings({csv_num(0.25), "y"});
        REQUIRE_THROWS_AS(w.write_row_strings({"only_one"}), std::logic_error);
    }
    const CsvTable t = read_csv(path);
    REQUIRE(t.header == std::vector<std::string>{"a", "b"});
    REQUIRE(t.rows.size() == 2);
    REQUIRE(t.rows[1][0] == "0.25");
    REQUIRE(t.col("b") == 1);
    REQUIRE_THROWS_AS(t.col("missing"), std::runtime_error);
}

TEST_CASE("manifest write, verify, and tamper detection", "[runner]") {
    const fs::path dir = fresh_dir("manifest");
    std::ofstream(dir / "one.csv") << "a,b\n1,2\n";
    std::ofstream(dir / "two.csv") << "c\n3\n";
    write_manifest(dir, nlohmann::json::object(), {0, 1});
    REQUIRE(verify_manifest(dir).ok);

    SECTION("single byte change is caught") {
        std::fstream f(dir / "one.csv", std::ios::in | std::ios::out);
        f.seekp(4);
        f.put('9');
        f.close();
        const ManifestCheck c = verify_manifest(dir);
        REQUIRE_FALSE(c.ok);
        REQUIRE(c.problems.at(0).find("hash mismatch") != std::string::npos);
    }
    SECTION("missing listed file is caught") {
        fs::remove(dir / "two.csv");
        const ManifestCheck c = verify_manifest(dir);
        REQUIRE_FALSE(c.ok);
        REQUIRE(c.problems.at(0).find("missing on disk") != std::string::npos);
    }
    SECTION("unlisted extra file is caught") {
        std::ofstream(dir / "extra.csv") << "z\n";
        const ManifestCheck c = verify_manifest(dir);
        REQUIRE_FALSE(c.ok);
        REQUIRE(c.problems.at(0).find("not listed") != std::string::npos);
    }
    SECTION("missing manifest is caught") {
        fs::remove(dir / "manifest.json");
        REQUIRE_FALSE(verify_manifest(dir).ok);
    }
}

TEST_CASE("audit command stays within tolerance", "[runner]") {
    RunConfig c = small_config("audit");
    REQUIRE(cmd_audit_equivalence(c) == 0);
    const CsvTable t = read_csv((fs::path(c.out_dir) / "equivalence_audit.csv").string());
    REQUIRE(t.rows.size() == c.alpha_grid.size());
    const size_t col = t.col("max_mean_abs_diff");
    for (const auto& row : t.rows) REQUIRE(std::stod(row[col]) <= c.audit_tolerance);
}

TEST_CASE("rollout package validates end to end on a small config", "[runner]") {
    RunConfig c = small_config("package");
    REQUIRE(cmd_audit_equivalence(c) == 0);
    REQUIRE(cmd_rollout_package(c, 2) == 0);

    std::string report;
    REQUIRE(cmd_validate(c, &report) == 0);
    REQUIRE(report.find("STATUS: PASS") != std::string::npos);

    const fs::path dir(c.out_dir);
    const CsvTable eps = read_csv((dir / "episodes.csv").string());
    REQUIRE(eps.rows.size() == 13 * c.goals.size() * c.seeds.size() * c.episodes_per_seed);
    const CsvTable pairs = read_csv((dir / "matched_pairs.csv").string());
    const size_t md = pairs.col("mean_diff");
    for (const auto& row : pairs.rows) REQUIRE(row[md] == "0");
    const CsvTable diag = read_csv((dir / "diagnostic_summary.csv").string());
    REQUIRE(diag.rows.size() == c.goals.size());
    const size_t vcol = diag.col("verdict");
    for (const auto& row : diag.rows) {
        const std::string& v = row[vcol];
        REQUIRE((v == "Help" || v == "Frozen" || v == "Hurt"));
    }

    SECTION("validate flags a tampered package") {
        std::ofstream(dir / "episodes.csv", std::ios::app) << "x";
        std::string bad;
        REQUIRE(cmd_validate(c, &bad) == 1);
        REQUIRE(bad.find("STATUS: FAIL") != std::string::npos);
    }
}

TEST_CASE("degradation command writes the three tables", "[runner]") {
    RunConfig c = small_config("degrade");
    REQUIRE(cmd_prior_degradation(c, 2) == 0);
    const fs::path dir(c.out_dir);
    const CsvTable cells = read_csv((dir / "degrade_cells.csv").string());
    REQUIRE(cells.rows.size() == 4 * 5 * c.goals.size()); // variants x methods x goals
    const CsvTable pivot = read_csv((dir / "degrade_pivot.csv").string());
    REQUIRE(pivot.rows.size() == 4 * 5);
    // frozen rows ignore the prior entirely, so their gap is exactly zero
    const size_t mcol = pivot.col("method_id"), gcol = pivot.col("gap_vs_frozen");
    for (const auto& row : pivot.rows)
        if (row[mcol] == "frozen") REQUIRE(row[gcol] == "0");
}

TEST_CASE("cpi diagnostic emits the expected grid with exact coefficients", "[runner]") {
    RunConfig c = small_config("cpi");
    REQUIRE(cmd_cpi_diagnostic(c) == 0);
    const CsvTable t = read_csv((fs::path(c.out_dir) / "cpi_diagnostic.csv").string());
    REQUIRE(t.rows.size() ==
            c.cpi_gammas.size() * c.cpi_instances * c.goals.size() * c.alpha_grid.size());
    const size_t gcol = t.col("gamma"), pcol = t.col("penalty_coeff"), lcol = t.col("lhs"),
                 rcol = t.col("rhs"), mc = t.col("delta_pi_mc"), pk = t.col("delta_pi_pinsker"),
                 ex = t.col("delta_pi_exact");
    for (const auto& row : t.rows) {
        if (row[gcol] == "0.9") REQUIRE(row[pcol] == "180");
        if (row[gcol] == "0.99") REQUIRE(row[pcol] == "19800");
        REQUIRE(std::stod(row[lcol]) >= std::stod(row[rcol]) - 1e-9); // Theorem 3 holds
        REQUIRE(std::stod(row[pk]) + 1e-12 >= std::stod(row[ex]));    // Pinsker dominates exact TV
        REQUIRE(std::stod(row[mc]) >= 0.0);
    }
}

TEST_CASE("alpha study emits one row per rule and budget", "[runner]") {
    RunConfig c = small_config("alpha");
    REQUIRE(cmd_alpha_study(c) == 0);
    const fs::path dir(c.out_dir);
    const CsvTable study = read_csv((dir / "alpha_study.csv").string());
    REQUIRE(study.rows.size() == c.goals.size() * (c.kappa_set.size() + 1));
    const size_t loss = study.col("selection_loss");
    for (const auto& row : study.rows) REQUIRE(std::stod(row[loss]) >= 0.0);
    const CsvTable grid = read_csv((dir / "alpha_grid.csv").string());
    REQUIRE(grid.rows.size() == c.goals.size() * c.alpha_grid.size());
}
