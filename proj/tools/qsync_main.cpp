#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "qsync/errors.hpp"
#include "qsync/experiments.hpp"
#include "qsync/table.hpp"

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw qsync::ConfigError("config", "cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

qsync::ExperimentConfig load_config(const std::string& config_path, const std::string& preset) {
    if (config_path.empty() == preset.empty())
        throw qsync::ConfigError("cli", "give exactly one of a config file or --preset");
    if (!preset.empty()) return qsync::preset_config(preset);
    return qsync::parse_config(read_file(config_path));
}

std::size_t point_count(const qsync::ExperimentConfig& c) {
    std::size_t n = 1;
    for (const auto& ax : c.sweep) n *= static_cast<std::size_t>(ax.points);
    return n * std::max<std::size_t>(1, c.variants.size());
}

int default_workers() {
    const char* env = std::getenv("QSYNC_WORKERS");
    if (!env) return 0;
    try {
        return std::max(0, std::stoi(env));
    } catch (const std::exception&) {
        return 0;
    }
}

int run_command(const std::string& config_path, const std::string& preset,
                const std::string& out_dir, int workers, bool plot) {
    const qsync::ExperimentConfig cfg = load_config(config_path, preset);
    const qsync::ResultTable table = qsync::run_experiment(cfg, workers);

    fs::create_directories(out_dir);
    const fs::path stem = fs::path(out_dir) / cfg.output;
    const std::string csv_path = stem.string() + ".csv";
    const std::string meta_path = stem.string() + ".meta.json";
    qsync::write_csv(table, csv_path);
    qsync::write_metadata(table, meta_path);
    std::printf("wrote %s\n", csv_path.c_str());
    std::printf("wrote %s\n", meta_path.c_str());

    if (plot) {
        const bool map_kind = cfg.kind == qsync::ExperimentKind::ExistenceMap ||
                              cfg.kind == qsync::ExperimentKind::RmaxMap;
        const std::string svg_path = stem.string() + ".svg";
        try {
            if (map_kind && !table.variant_labels.empty())
                throw std::invalid_argument("heatmaps do not support variant groups");
            qsync::emit_plot(table,
                             map_kind ? qsync::PlotKind::heatmap : qsync::PlotKind::line,
                             svg_path);
            std::printf("wrote %s\n", svg_path.c_str());
        } catch (const std::invalid_argument& e) {
            std::fprintf(stderr, "plot skipped: %s\n", e.what());
        }
    }

    if (table.failed) {
        std::fprintf(stderr, "solver failure, results truncated: %s\n", table.failure.c_str());
        return 3;
    }
    return 0;
}

int validate_command(const std::string& config_path, const std::string& preset) {
    const qsync::ExperimentConfig cfg = load_config(config_path, preset);
    const nlohmann::json echo = qsync::config_json(cfg);
    std::printf("ok: %s, %zu points, output stem '%s'\n",
                echo["experiment"].get<std::string>().c_str(), point_count(cfg),
                cfg.output.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-qudit synchronization sweeps and circuit-level checks"};
    app.require_subcommand(1);

    std::string config_path, preset, out_dir = ".";
    int workers = default_workers();
    bool plot = false;

    CLI::App* run = app.add_subcommand("run", "Run an experiment and write csv + metadata");
    run->add_option("config", config_path, "JSON experiment config");
    run->add_option("--preset", preset, "named built-in experiment");
    run->add_option("--out", out_dir, "output directory")->capture_default_str();
    run->add_option("--workers", workers,
                    "worker threads, 0 = hardware count (env QSYNC_WORKERS)");
    run->add_flag("--plot", plot, "also write an svg plot");

    CLI::App* presets = app.add_subcommand("presets", "List built-in experiments");

    CLI::App* validate = app.add_subcommand("validate", "Parse a config and report its shape");
    validate->add_option("config", config_path, "JSON experiment config");
    validate->add_option("--preset", preset, "named built-in experiment");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (presets->parsed()) {
            for (const auto& [name, description] : qsync::list_presets())
                std::printf("%s: %s\n", name.c_str(), description.c_str());
            return 0;
        }
        if (validate->parsed()) return validate_command(config_path, preset);
        return run_command(config_path, preset, out_dir, workers, plot);
    } catch (const qsync::ConfigError& e) {
        std::fprintf(stderr, "config error at %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
