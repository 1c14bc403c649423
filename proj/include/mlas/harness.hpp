#ifndef MLAS_HARNESS_HPP
#define MLAS_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlas/baselines.hpp"
#include "mlas/channel.hpp"
#include "mlas/detection.hpp"
#include "mlas/likelihood.hpp"
#include "mlas/subspace.hpp"

namespace mlas {

enum class Method {
    Mlas,
    MusicCombination,
    SoftFusion,
};

std::string to_string(Method m);
Method parse_method(const std::string& s);

enum class MatchingMode {
    Greedy,
    Optimal,
};

/// Distinct: refine grid maxima in order and skip those that climb onto an
/// accepted peak. Grid: keep the K highest grid maxima, then refine.
enum class PeakSelection {
    Distinct,
    Grid,
};

enum class NoiseVarianceMode {
    Known,
    Estimated,
};

struct TargetRegion {
    double x_min = -4.0;
    double x_max = 4.0;
    double y_min = 3.0;
    double y_max = 11.0;
    double min_separation = 1.0;
};

struct ExperimentConfig {
    std::vector<RadarPairGeometry> pairs;
    /// One entry per pair.
    std::vector<OfdmParams> ofdm;
    /// Fixed targets; when empty, `num_targets` are drawn in `region` per trial.
    std::vector<Vec2> fixed_targets;
    TargetRegion region;
    int num_targets = 3;
    CoefficientModel coefficients;
    std::vector<double> snr_grid_db{-10.0, 0.0, 10.0, 20.0};
    /// Single-scenario SNR used by the map command.
    double snr_db = 20.0;
    int num_trials = 500;
    std::uint64_t master_seed = 1;
    GridSpec grid;
    AngleGridSpec music_grid;
    double hit_radius = 2.0;
    std::vector<Method> methods{Method::Mlas, Method::MusicCombination, Method::SoftFusion};
    NoiseVarianceMode noise_variance_mode = NoiseVarianceMode::Known;
    SpectrumScale music_combination_scale = SpectrumScale::Linear;
    MatchingMode matching = MatchingMode::Greedy;
    PeakSelection peak_selection = PeakSelection::Distinct;
    RefineOptions refine;
    /// Worker threads for sweeps; 0 = hardware concurrency.
    int threads = 0;

    /// Throws std::invalid_argument describing the first violated constraint.
    void validate() const;
    bool has_method(Method m) const;
};

struct TargetMatch {
    bool hit = false;
    /// Distance to the matched estimate (meters); NaN for a miss.
    double error = 0.0;
    int estimate_index = -1;
};

/**
 * Associates estimates to true targets. Greedy mode repeatedly pairs the
 * globally closest (truth, estimate) within `hit_radius`; optimal mode
 * enumerates assignments maximizing hits, then minimizing total error.
 */
std::vector<TargetMatch> match_detections(std::span<const Vec2> truth, std::span<const Vec2> estimates,
                                          double hit_radius, MatchingMode mode = MatchingMode::Greedy);

struct MethodOutcome {
    Method method = Method::Mlas;
    std::vector<Vec2> estimates;
    std::vector<TargetMatch> matches;
    /// A degenerate input or failed stage produced this outcome.
    bool flagged = false;
};

struct TrialResult {
    int trial = 0;
    double snr_db = 0.0;
    std::vector<Vec2> truth;
    std::vector<MethodOutcome> outcomes;

    const MethodOutcome* outcome(Method m) const;
};

/// Everything computed in one trial, for map dumps and inspection.
struct TrialDetail {
    Scene scene;
    double noise_variance = 0.0;
    std::vector<PerPairContext> contexts;
    std::optional<LikelihoodMap> mlas_map;
    std::optional<LikelihoodMap> music_map;
    std::optional<DetectionSet> mlas_detections;
    std::optional<DetectionSet> music_detections;
    std::optional<BaselineResult> soft_fusion;
    TrialResult result;
};

/// Target positions for a trial: fixed targets, or a seeded uniform draw in
/// the region with the configured minimum separation.
std::vector<Vec2> draw_targets(const ExperimentConfig& config, int trial_index);

/// Per-pair contexts from a synthesized scene (coefficients, noise, MUSIC).
std::vector<PerPairContext> build_contexts(const ExperimentConfig& config, const Scene& scene, double snr_db,
                                           int trial_index, double* noise_variance = nullptr);

/// One Monte-Carlo realization; deterministic in (config, snr_db, trial_index).
TrialDetail run_trial_detailed(const ExperimentConfig& config, double snr_db, int trial_index);
TrialResult run_trial(const ExperimentConfig& config, double snr_db, int trial_index);

struct MethodMetrics {
    double snr_db = 0.0;
    Method method = Method::Mlas;
    long hits = 0;
    long targets = 0;
    double hit_rate = 0.0;
    /// NaN when no target was hit by all methods.
    double rmse = 0.0;
    long n_common = 0;
};

struct MetricsSummary {
    std::vector<MethodMetrics> rows;

    const MethodMetrics* find(double snr_db, Method m) const;
};

/// Per (snr, method) hit rate and common-hit RMSE. Results are processed in
/// (snr, trial) order so the reduction does not depend on input order.
MetricsSummary summarize(std::span<const TrialResult> trials, std::span<const Method> methods);

struct SweepOptions {
    std::filesystem::path output_dir;
    bool resume = false;
    /// Trials evaluated between log flushes.
    int chunk_size = 16;
    /// Optional progress sink.
    std::ostream* progress = nullptr;
};

/**
 * Runs num_trials x snr_grid_db, appending rows to <out>/trials.csv in
 * (snr, trial) order and writing <out>/summary.csv at the end. With resume,
 * completed (snr, trial) entries already in trials.csv are reused.
 */
MetricsSummary run_sweep(const ExperimentConfig& config, const SweepOptions& options);

// CSV plumbing shared by the sweep and the CLI.
std::string trials_csv_header();
void write_trial_rows(std::ostream& os, const TrialResult& trial);
/// Parses trials.csv content; throws std::runtime_error naming the bad line.
std::vector<TrialResult> read_trials_csv(std::istream& is);

std::string summary_csv_header();
void write_summary_csv(std::ostream& os, const MetricsSummary& summary);
/// Throws std::runtime_error naming the bad line.
MetricsSummary read_summary_csv(std::istream& is);

/// Lossless decimal rendering used in every CSV output.
std::string format_double(double v);

}  // namespace mlas

#endif  // MLAS_HARNESS_HPP
