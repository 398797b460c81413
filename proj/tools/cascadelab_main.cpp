// Command line driver: one subcommand per experiment kind, plus `run`
// which takes the kind from the config file.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "cascadelab/experiment.hpp"
#include "cascadelab/parallel.hpp"

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::size_t threads = 0;
    bool quiet = false;
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("-c,--config", o.config, "JSON experiment config")->required()->check(CLI::ExistingFile);
    cmd->add_option("-s,--seed", o.seed, "override the config seed");
    cmd->add_option("-o,--out", o.out, "directory for CSV and summary output (overrides the config)");
    cmd->add_option("-j,--threads", o.threads, "worker threads (default: CASCADELAB_THREADS or all cores)");
    cmd->add_flag("-q,--quiet", o.quiet, "do not print the summary");
}

int run(const Options& o, std::optional<std::string> kind) {
    using namespace cascadelab;
    try {
        std::ifstream in(o.config, std::ios::binary);
        if (!in) throw Error(ErrorKind::Io, "cannot read " + o.config);
        std::ostringstream text;
        text << in.rdbuf();
        if (o.threads > 0) set_thread_count(o.threads);
        const auto record = run_experiment(text.str(), {std::move(kind), o.seed});
        const std::string out = o.out.empty() ? record.output_dir : o.out;
        if (!out.empty()) write_result(record, out);
        if (!o.quiet) std::cout << summary_text(record);
        return 0;
    } catch (const Error& e) {
        std::cerr << "cascadelab: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "cascadelab: internal error: " << e.what() << '\n';
        return 4;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random cascade measures on self-similar sets"};
    app.set_version_flag("-V,--version", std::string(cascadelab::version_string()));
    app.require_subcommand(1);

    Options options;
    std::optional<std::string> chosen;
    auto* generic = app.add_subcommand("run", "run the experiment named by the config's kind");
    add_common(generic, options);
    generic->callback([&] { chosen.reset(); });
    for (const auto& kind : cascadelab::experiment_kinds()) {
        auto* cmd = app.add_subcommand(kind, kind + " experiment");
        add_common(cmd, options);
        cmd->callback([&chosen, kind] { chosen = kind; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return run(options, chosen);
}
