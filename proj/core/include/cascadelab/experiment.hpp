#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cascadelab/error.hpp"
#include "cascadelab/table.hpp"

namespace cascadelab {

// Version string baked in at configure time ("0.4.0-g1a2b3c4" style).
std::string_view version_string() noexcept;

// validate, simulate, dims, project, conserve, percolate, distances,
// eq-scan, sweep.
const std::vector<std::string>& experiment_kinds();

struct RunOverrides {
    std::optional<std::string> kind;
    std::optional<std::uint64_t> seed;
};

struct NamedTable {
    std::string name;  // file stem
    Table table;
};

struct NamedText {
    std::string name;  // file name
    std::string text;
};

struct Scalar {
    std::string name;
    double value;
};

struct ResultRecord {
    std::string kind;
    std::uint64_t seed = 0;
    std::string resolved_config;  // JSON, defaults expanded
    std::string output_dir;       // from the config's "output", if any
    std::string version;
    double wall_seconds = 0.0;
    std::vector<NamedTable> tables;
    std::vector<NamedText> texts;
    std::vector<Scalar> scalars;
    std::vector<std::string> notes;

    [[nodiscard]] std::optional<double> scalar(std::string_view name) const;
};

// Parses and validates the JSON config (unknown keys are rejected), runs the
// experiment and returns everything it produced. Nothing is written.
ResultRecord run_experiment(std::string_view config_text, const RunOverrides& overrides = {});

// Writes <stem>.csv per table, the text files, config.resolved.json and
// summary.txt into `out` (created if missing).
void write_result(const ResultRecord& record, const std::filesystem::path& out);

std::string summary_text(const ResultRecord& record);

// 2 for configuration problems, 3 for extinction, 4 for numeric failures.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace cascadelab
