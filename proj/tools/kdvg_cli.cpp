#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kdvg/experiments.hpp"

namespace ex = kdvg::experiments;
namespace fs = std::filesystem;

namespace {

constexpr int exit_config = 2;
constexpr int exit_runtime = 3;

struct Options {
    std::vector<std::string> configs;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    unsigned jobs = 1;
};

/// Loads every config before anything runs; the first bad one aborts.
std::vector<ex::ExperimentConfig> load_all(const Options& o) {
    std::vector<ex::ExperimentConfig> cfgs;
    for (const auto& path : o.configs) {
        auto c = ex::load_config(path);
        if (o.seed) c.seed = *o.seed;
        if (o.out) c.output_dir = o.configs.size() == 1 ? *o.out : (fs::path(*o.out) / fs::path(path).stem()).string();
        c.validate();
        cfgs.push_back(std::move(c));
    }
    return cfgs;
}

void report(const ex::RunManifest& m) {
    const std::string name = m.config["experiment"].get<std::string>();
    const std::string dir = m.config["output_dir"].get<std::string>();
    const char* status = m.status == ex::RunStatus::pass ? "pass" : m.status == ex::RunStatus::fail ? "FAIL" : "ERROR";
    std::printf("%s %s -> %s\n", status, name.c_str(), dir.c_str());
    for (const auto& c : m.checks) {
        std::printf("  %-4s %s = %.6g (threshold %.6g)%s%s\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.value,
                    c.threshold, c.detail.empty() ? "" : ", ", c.detail.c_str());
    }
    if (!m.error.empty()) std::printf("  error: %s\n", m.error.c_str());
}

int run(const Options& o) {
    std::vector<ex::ExperimentConfig> cfgs;
    try {
        cfgs = load_all(o);
    } catch (const ex::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return exit_config;
    }
    std::vector<ex::RunManifest> out(cfgs.size());
    // Several runs share the workers; a single run gets them all.
    const unsigned inner = cfgs.size() == 1 ? o.jobs : 1;
    kdvg::parallel_for(cfgs.size(), o.jobs, [&](std::size_t i) { out[i] = ex::run(cfgs[i], inner); });
    int code = 0;
    for (const auto& m : out) {
        report(m);
        code = std::max(code, m.exit_code());
    }
    return code;
}

int validate(const Options& o) {
    try {
        for (const auto& c : load_all(o)) {
            std::printf("valid %s\n", std::string(ex::to_string(c.experiment)).c_str());
        }
    } catch (const ex::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return exit_config;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gevrey-radius experiments for the KdV equation"};
    app.require_subcommand(1);
    Options o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("configs", o.configs, "JSON config files")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "override the config seed");
        sub->add_option("--out", o.out, "output directory (one subdirectory per config when several)");
        sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    };
    auto* run_cmd = app.add_subcommand("run", "run experiments and write data plus manifest.json");
    add_common(run_cmd);
    auto* val_cmd = app.add_subcommand("validate", "check configs without running");
    add_common(val_cmd);
    auto* list_cmd = app.add_subcommand("list-experiments", "print experiment ids");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }
    try {
        if (*list_cmd) {
            for (const auto& [id, name] : ex::experiment_names) std::printf("%s\n", std::string(name).c_str());
            return 0;
        }
        if (*val_cmd) return validate(o);
        return run(o);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_runtime;
    }
}
