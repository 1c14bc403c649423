#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "mlas/config.hpp"
#include "mlas/harness.hpp"

namespace mlas::cli {

namespace fs = std::filesystem;

namespace {

struct CommandSpec {
    std::string config_path;
    std::string output_dir = ".";
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<int> trial_index;
    std::string methods;
    bool resume = false;
};

/// Explicit flags are applied after --set so they win.
std::vector<std::string> collect_overrides(const CommandSpec& spec) {
    std::vector<std::string> out = spec.overrides;
    if (spec.seed) out.push_back("master_seed=" + std::to_string(*spec.seed));
    if (spec.trials) out.push_back("num_trials=" + std::to_string(*spec.trials));
    if (!spec.methods.empty()) {
        std::string list = "[";
        std::istringstream ss(spec.methods);
        std::string m;
        bool first = true;
        while (std::getline(ss, m, ',')) {
            if (m.empty()) continue;
            list += (first ? "\"" : ",\"") + m + "\"";
            first = false;
        }
        out.push_back("methods=" + list + "]");
    }
    return out;
}

ExperimentConfig load(const CommandSpec& spec) {
    if (spec.config_path.empty()) throw ConfigError("--config is required");
    if (!fs::exists(spec.config_path)) throw ConfigError("config file not found: " + spec.config_path);
    return load_experiment(spec.config_path, collect_overrides(spec));
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir);
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    return os;
}

void print_summary(std::ostream& out, const MetricsSummary& summary) {
    out << std::left << std::setw(9) << "snr_db" << std::setw(20) << "method" << std::setw(10) << "hit_rate"
        << std::setw(12) << "rmse_m" << "n_common\n";
    for (const auto& r : summary.rows) {
        out << std::left << std::setw(9) << format_double(r.snr_db) << std::setw(20) << to_string(r.method)
            << std::setw(10) << std::fixed << std::setprecision(4) << r.hit_rate << std::setw(12)
            << std::setprecision(4) << r.rmse << r.n_common << '\n';
        out.unsetf(std::ios::floatfield);
    }
}

int cmd_map(const CommandSpec& spec, std::ostream& out) {
    const ExperimentConfig config = load(spec);
    ensure_dir(spec.output_dir);
    const int trial = spec.trial_index.value_or(0);
    const TrialDetail detail = run_trial_detailed(config, config.snr_db, trial);
    const fs::path dir(spec.output_dir);
    const std::string tag = std::to_string(trial);

    {
        auto os = open_out(dir / "truth.csv");
        os << "target,x,y\n";
        for (std::size_t k = 0; k < detail.scene.targets.size(); ++k) {
            os << k << ',' << format_double(detail.scene.targets[k].x()) << ','
               << format_double(detail.scene.targets[k].y()) << '\n';
        }
    }
    if (detail.mlas_map) {
        auto os = open_out(dir / ("map_" + tag + "_mlas.csv"));
        write_map_csv(os, *detail.mlas_map);
    }
    if (detail.music_map) {
        auto os = open_out(dir / ("map_" + tag + "_music-combination.csv"));
        write_map_csv(os, *detail.music_map);
    }
    if (detail.mlas_detections) {
        auto os = open_out(dir / ("detections_" + tag + "_mlas.csv"));
        write_detections_csv(os, *detail.mlas_detections);
    }
    if (detail.music_detections) {
        auto os = open_out(dir / ("detections_" + tag + "_music-combination.csv"));
        write_detections_csv(os, *detail.music_detections);
    }
    if (detail.soft_fusion) {
        auto os = open_out(dir / ("detections_" + tag + "_soft-fusion.csv"));
        os << "rank,x,y,value,refined_flag\n";
        for (std::size_t k = 0; k < detail.soft_fusion->positions.size(); ++k) {
            os << k << ',' << format_double(detail.soft_fusion->positions[k].x()) << ','
               << format_double(detail.soft_fusion->positions[k].y()) << ",nan,0\n";
        }
    }
    {
        nlohmann::json payload = nlohmann::json::array();
        for (const auto& ctx : detail.contexts) payload.push_back(context_to_json(ctx));
        auto os = open_out(dir / ("contexts_" + tag + ".json"));
        os << payload.dump(1) << '\n';
    }

    out << "trial " << trial << " at " << format_double(config.snr_db) << " dB, K = " << detail.scene.num_targets()
        << '\n';
    for (const auto& o : detail.result.outcomes) {
        int hits = 0;
        for (const auto& m : o.matches) hits += m.hit ? 1 : 0;
        out << "  " << std::left << std::setw(20) << to_string(o.method) << hits << "/" << o.matches.size()
            << " hits" << (o.flagged ? " (flagged)" : "") << '\n';
    }
    return kOk;
}

int cmd_sweep(const CommandSpec& spec, std::ostream& out, std::ostream& err) {
    const ExperimentConfig config = load(spec);
    ensure_dir(spec.output_dir);
    SweepOptions opts;
    opts.output_dir = spec.output_dir;
    opts.resume = spec.resume;
    opts.progress = &err;
    const MetricsSummary summary = run_sweep(config, opts);
    print_summary(out, summary);
    return kOk;
}

int cmd_compare(const CommandSpec& spec, std::ostream& out) {
    const fs::path path = fs::path(spec.output_dir) / "summary.csv";
    std::ifstream in(path);
    if (!in) throw std::runtime_error("no sweep output at " + path.string());
    const MetricsSummary summary = read_summary_csv(in);

    std::vector<double> snrs;
    for (const auto& r : summary.rows)
        if (std::find(snrs.begin(), snrs.end(), r.snr_db) == snrs.end()) snrs.push_back(r.snr_db);

    out << std::left << std::setw(9) << "snr_db" << std::setw(20) << "method" << std::setw(12) << "hit_rate"
        << std::setw(14) << "rmse_m" << "n_common\n";
    for (double snr : snrs) {
        std::vector<const MethodMetrics*> rows;
        for (const auto& r : summary.rows)
            if (r.snr_db == snr) rows.push_back(&r);
        double best_hit = -1.0;
        double best_rmse = std::numeric_limits<double>::infinity();
        for (const auto* r : rows) {
            best_hit = std::max(best_hit, r->hit_rate);
            if (std::isfinite(r->rmse)) best_rmse = std::min(best_rmse, r->rmse);
        }
        const bool flag = rows.size() > 1;
        for (const auto* r : rows) {
            std::ostringstream hit, rmse;
            hit << std::fixed << std::setprecision(4) << r->hit_rate
                << (flag && r->hit_rate == best_hit ? "*" : "");
            rmse << std::fixed << std::setprecision(4) << r->rmse
                 << (flag && std::isfinite(r->rmse) && r->rmse == best_rmse ? "*" : "");
            out << std::left << std::setw(9) << format_double(snr) << std::setw(20) << to_string(r->method)
                << std::setw(12) << hit.str() << std::setw(14) << rmse.str() << r->n_common << '\n';
        }
    }
    if (snrs.size() && summary.rows.size() > snrs.size()) out << "* best method per metric at that SNR\n";
    return kOk;
}

int cmd_validate(const CommandSpec& spec, std::ostream& out) {
    const ExperimentConfig config = load(spec);
    out << "config ok: " << config.pairs.size() << " radar pairs, K = "
        << (config.fixed_targets.empty() ? config.num_targets : static_cast<int>(config.fixed_targets.size()))
        << ", " << config.snr_grid_db.size() << " SNR points, " << config.num_trials << " trials\n";
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multistatic angle-based multitarget localization simulator"};
    app.require_subcommand(1);
    CommandSpec spec;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", spec.config_path, "Experiment configuration (JSON)")->required();
        sub->add_option("--set", spec.overrides, "Override a config entry: dotted.key=value (repeatable)");
        sub->add_option("--seed", spec.seed, "Master seed");
        sub->add_option("--methods", spec.methods, "Comma-separated subset of mlas,music-combination,soft-fusion");
    };

    CLI::App* map = app.add_subcommand("map", "Run one trial and dump maps and detections");
    add_common(map);
    map->add_option("--out", spec.output_dir, "Output directory");
    map->add_option("--trial", spec.trial_index, "Trial index (default 0)");

    CLI::App* sweep = app.add_subcommand("sweep", "Monte-Carlo SNR sweep");
    add_common(sweep);
    sweep->add_option("--out", spec.output_dir, "Output directory");
    sweep->add_option("--trials", spec.trials, "Trials per SNR point");
    sweep->add_flag("--resume", spec.resume, "Continue from an existing trials.csv");

    CLI::App* compare = app.add_subcommand("compare", "Tabulate a finished sweep");
    compare->add_option("--out", spec.output_dir, "Sweep output directory")->required();

    CLI::App* validate = app.add_subcommand("validate-config", "Check a configuration file");
    add_common(validate);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (map->parsed()) return cmd_map(spec, out);
        if (sweep->parsed()) return cmd_sweep(spec, out, err);
        if (compare->parsed()) return cmd_compare(spec, out);
        if (validate->parsed()) return cmd_validate(spec, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kUsageError;
}

}  // namespace mlas::cli
