#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cascadelab/error.hpp"
#include "cascadelab/experiment.hpp"
#include "cascadelab/table.hpp"

using namespace cascadelab;

namespace {

ErrorKind failure(const std::string& config, const RunOverrides& o = {}) {
    try {
        run_experiment(config, o);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected the run to fail");
    return ErrorKind::Io;
}

std::string message(const std::string& config) {
    try {
        run_experiment(config);
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

const Table& table(const ResultRecord& r, const std::string& name) {
    for (const auto& t : r.tables)
        if (t.name == name) return t.table;
    FAIL("missing table " << name);
    return r.tables.front().table;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

const char* kCantor = R"({"kind": "validate", "ifs": {"preset": "cantor"}, "weights": {"model": "bernoulli"}})";

}  // namespace

TEST_CASE("unknown keys are reported with their path") {
    CHECK(failure(R"({"kind": "validate", "ifs": {"preset": "cantor"}, "weights": {"model": "bernoulli"}, "levle": 3})") ==
          ErrorKind::ConfigInvalid);
    CHECK(message(R"({"kind": "validate", "ifs": {"preset": "cantor"}, "weights": {"model": "bernoulli"}, "levle": 3})")
              .find("levle") != std::string::npos);
    const auto nested =
        message(R"({"kind": "validate", "ifs": {"preset": "cantor", "ratios": [1]}, "weights": {"model": "bernoulli"}})");
    CHECK(nested.find("ifs/ratios:") != std::string::npos);
}

TEST_CASE("config errors") {
    CHECK(failure("{ not json") == ErrorKind::ConfigInvalid);
    CHECK(failure(R"({"kind": "bogus", "ifs": {"preset": "cantor"}, "weights": {"model": "bernoulli"}})") ==
          ErrorKind::ConfigInvalid);
    CHECK(failure(kCantor, RunOverrides{"dims", std::nullopt}) == ErrorKind::ConfigInvalid);
    CHECK(failure(R"({"kind": "percolate", "ifs": {"preset": "grid4"}, "level": {"grid": [3, 4]},
                      "weights": {"model": "percolation", "keep": 0.8}})") == ErrorKind::ConfigInvalid);
    CHECK(failure(R"({"kind": "sweep", "sweep": {"base": "percolate"}, "ifs": {"preset": "grid4"},
                      "level": {"grid": [3, 4]}, "weights": {"model": "percolation", "keep": {"grid": [0.7, 0.8]}}})") ==
          ErrorKind::MultipleGrids);
    CHECK(failure(R"({"kind": "sweep", "sweep": {"base": "percolate"}, "ifs": {"preset": "grid4"},
                      "weights": {"model": "percolation", "keep": {"grid": []}}})") == ErrorKind::ConfigInvalid);
    CHECK(failure(R"({"kind": "dims", "ifs": {"preset": "cantor"},
                      "weights": {"model": "deterministic", "p": [0.2, 0.2]}})") == ErrorKind::InvalidWeightModel);
}

TEST_CASE("validate reports the similarity dimension") {
    const auto r = run_experiment(kCantor);
    CHECK(r.kind == "validate");
    CHECK(r.scalar("similarity_dimension").value() == doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(1e-12));
    CHECK(summary_text(r).find("0.630929754") != std::string::npos);
    CHECK(summary_text(r).find(std::string(version_string())) != std::string::npos);

    const auto bad = run_experiment(
        R"({"kind": "validate", "ifs": {"preset": "cantor"}, "weights": {"model": "deterministic", "p": [0.2, 0.2]}})");
    CHECK(bad.scalar("valid").value() == 0.0);
}

TEST_CASE("p/q strings and comments are accepted") {
    const auto r = run_experiment(R"({
        // two maps
        "kind": "validate",
        "ifs": {"maps": [{"ratio": "1/3", "translation": [0]}, {"ratio": "1/3", "translation": ["2/3"]}]},
        "weights": {"model": "bernoulli"}
    })");
    CHECK(r.scalar("similarity_dimension").value() == doctest::Approx(0.6309297535714574));
}

TEST_CASE("percolation exponent in the percolate kind") {
    const auto r = run_experiment(R"({"kind": "percolate", "seed": 4, "ifs": {"preset": "grid4"},
        "weights": {"model": "percolation", "keep": 0.7}, "level": 5, "percolation": {"seeds": 50}})");
    CHECK(r.scalar("alpha").value() == doctest::Approx(1.48542683).epsilon(1e-8));
    CHECK(table(r, "box_counts").rows() > 0);
}

TEST_CASE("projection profile has one row per angle") {
    const auto r = run_experiment(R"({"kind": "project", "seed": 2, "ifs": {"preset": "dense-planar"},
        "weights": {"model": "bernoulli"}, "level": 7, "projection": {"angles": 64}})");
    CHECK(table(r, "profile").rows() == 64);
    CHECK(table(r, "plot_profile").rows() == 64);
    CHECK(r.scalar("profile_min").value() <= r.scalar("profile_mean").value());
    CHECK(r.scalar("profile_mean").value() <= r.scalar("profile_max").value());
}

TEST_CASE("sweep rows and seed override") {
    const char* cfg = R"({"kind": "sweep", "seed": 3, "sweep": {"base": "percolate"}, "ifs": {"preset": "grid4"},
        "weights": {"model": "percolation", "keep": {"grid": [0.6, 0.8, 0.9]}}, "level": 4,
        "percolation": {"seeds": 20}})";
    const auto r = run_experiment(cfg);
    const auto& t = table(r, "sweep");
    CHECK(t.rows() == 3);
    CHECK(t.header()[0] == "index");
    CHECK(t.header()[1] == "value");
    CHECK(t.cell(2, 1) == "0.9");
    const auto o = run_experiment(cfg, RunOverrides{std::nullopt, 77});
    CHECK(o.seed == 77);
}

TEST_CASE("runs are deterministic for a fixed seed") {
    const char* cfg = R"({"kind": "simulate", "seed": 8, "ifs": {"preset": "cantor"},
        "weights": {"model": "percolation", "keep": 0.8}, "level": 6, "martingale": {"seeds": 30, "level": 6}})";
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    REQUIRE(a.tables.size() == b.tables.size());
    for (std::size_t i = 0; i < a.tables.size(); ++i) CHECK(a.tables[i].table.str() == b.tables[i].table.str());
    CHECK(a.resolved_config == b.resolved_config);
    CHECK(table(a, "plot_martingale").rows() > 0);
    const auto c = run_experiment(cfg, RunOverrides{std::nullopt, 9});
    CHECK(table(a, "plot_martingale").str() != table(c, "plot_martingale").str());
}

TEST_CASE("plot tables of dims and eq-scan") {
    const auto d = run_experiment(R"({"kind": "dims", "ifs": {"preset": "cantor"}, "weights": {"model": "bernoulli"},
        "level": 8, "exactness": {"points": 64}, "conditional": {"n": 4, "replicas": 16}})");
    CHECK(table(d, "plot_entropy").rows() > 2);
    CHECK(d.scalar("entropy_dimension").has_value());

    const auto e = run_experiment(R"({"kind": "eq-scan", "ifs": {"preset": "dense-planar"},
        "weights": {"model": "bernoulli"}, "level": 6, "eq": {"q": [4, 2], "replicas": 4, "frame": {"angle": 0}}})");
    const auto& plot = table(e, "plot_eq");
    CHECK(plot.rows() == 2);
    CHECK(plot.cell(0, 0) == "2");
    CHECK(e.scalar("E_2").has_value());
    CHECK(e.scalar("E_q").value() == e.scalar("E_4").value());
}

TEST_CASE("write_result lays out the output directory") {
    const auto dir = std::filesystem::temp_directory_path() / "cascadelab_write_result";
    std::filesystem::remove_all(dir);
    const auto r = run_experiment(kCantor);
    write_result(r, dir);
    CHECK(std::filesystem::exists(dir / "summary.txt"));
    CHECK(std::filesystem::exists(dir / "config.resolved.json"));
    CHECK(slurp(dir / "moments.csv").rfind("p,sum_E_W_p\n", 0) == 0);
    CHECK(slurp(dir / "config.resolved.json").find("\"kind\"") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("shipped configs parse") {
    const char* env = std::getenv("CASCADELAB_CONFIG_DIR");
    if (env == nullptr) return;
    // Only the cheap kinds are run here; the rest run in acceptance.
    for (const char* name : {"validate_dense.json", "simulate_cantor.json"}) {
        CAPTURE(name);
        CHECK_NOTHROW(run_experiment(slurp(std::filesystem::path(env) / name)));
    }
}

TEST_CASE("number formatting keeps 9 significant digits") {
    CHECK(format_number(1.0) == "1");
    CHECK(format_number(0.1234567891234) == "0.123456789");
    CHECK(format_number(123456789012.0) == "1.23456789e+11");
    Table t({"a", "b"});
    t.row().add(0.5).add("x");
    CHECK(t.str() == "a,b\n0.5,x\n");
}

TEST_CASE("exit codes") {
    CHECK(exit_code_for(ErrorKind::ConfigInvalid) == 2);
    CHECK(exit_code_for(ErrorKind::MultipleGrids) == 2);
    CHECK(exit_code_for(ErrorKind::InvalidWeightModel) == 2);
    CHECK(exit_code_for(ErrorKind::Io) == 2);
    CHECK(exit_code_for(ErrorKind::Extinct) == 3);
    CHECK(exit_code_for(ErrorKind::DegenerateDenominator) == 4);
    CHECK(exit_code_for(ErrorKind::EmptyBall) == 4);
}
