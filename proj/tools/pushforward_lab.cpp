#include <cstdlib>
#include <iostream>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "pushforward/experiment.hpp"

namespace pf = pushforward;

namespace {

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("pushforward-lab");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("PUSHFORWARD_LAB_LOG")) {
        const std::string level = env;
        if (level == "error") spdlog::set_level(spdlog::level::err);
        else if (level == "warn") spdlog::set_level(spdlog::level::warn);
        else if (level == "info") spdlog::set_level(spdlog::level::info);
        else if (level == "debug") spdlog::set_level(spdlog::level::debug);
        else spdlog::warn("PUSHFORWARD_LAB_LOG='{}' is not one of error, warn, info, debug; using info", level);
    }
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();

    CLI::App app{"Push-forward dynamics on spaces of probability measures: config-driven experiments"};
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::size_t threads = 0;
    bool validate_only = false;
    app.add_option("config", config_path, "experiment config (TOML)")->required();
    auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
    auto* out_opt = app.add_option("--out-dir", out_dir, "override the output directory");
    auto* threads_opt = app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--validate-only", validate_only, "check the config and exit");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        pf::ExperimentConfig config = pf::load_config(config_path);
        if (*seed_opt) config.seed = seed;
        if (*out_opt) config.out_dir = out_dir;
        if (*threads_opt) config.threads = threads;

        const auto errors = pf::validate(config);
        if (!errors.empty()) {
            for (const auto& e : errors) spdlog::error("{}: {}", e.field, e.message);
            return 2;
        }
        if (validate_only) {
            spdlog::info("{}: ok ({})", config_path, config.experiment);
            return 0;
        }
        spdlog::debug("running {} with seed {} on {} thread(s)", config.experiment, config.seed, config.threads);
        const auto summary = pf::run(config);
        pf::write_outputs(config, summary);
        for (const auto& w : summary.warnings) spdlog::warn("{}", w);
        const std::string name = config.name.empty() ? config.experiment : config.name;
        spdlog::info("wrote {}/{}.csv and {}.summary.json ({:.2f} s)", config.out_dir.string(), name, name,
                     summary.wall_seconds);
        return 0;
    } catch (const pf::ConfigError& e) {
        spdlog::error("{}", e.what());
        for (const auto& f : e.fields()) spdlog::error("{}: {}", f.field, f.message);
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return pf::exit_code_for(e);
    }
}
