// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "mlas/baselines.hpp"
#include "mlas/config.hpp"
#include "mlas/detection.hpp"
#include "mlas/harness.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace mlas;

namespace {

namespace fs = std::filesystem;

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

ExperimentConfig default_config(const std::vector<std::string>& overrides = {}) {
    return load_experiment(testing::source_path("configs/default.json"), overrides);
}

// 1. Steering and geometry invariants.
Outcome steering_geometry_invariants() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> angle(-1.5, 1.5);
    long checks = 0;
    long failures = 0;
    for (int m : {1, 2, 4, 8}) {
        for (int n : {1, 3, 4, 8}) {
            const auto pairs = testing::two_pairs(m, n);
            for (int i = 0; i < 500; ++i) {
                const CVector a = joint_steering(pairs[0], angle(rng), angle(rng));
                for (Eigen::Index e = 0; e < a.size(); ++e) {
                    ++checks;
                    if (std::abs(std::abs(a[e]) - 1.0) > 1e-12) ++failures;
                }
                ++checks;
                if (std::abs(a.norm() - std::sqrt(static_cast<double>(m * n))) > 1e-12) ++failures;
            }
        }
    }
    double worst = 0.0;
    std::uniform_real_distribution<double> ux(-4.5, 4.5), uy(2.5, 12.0);
    for (const auto& pair : testing::two_pairs()) {
        for (int i = 0; i < 5000; ++i) {
            const Vec2 t(ux(rng), uy(rng));
            const RayIntersection r = locate_from_angles(pair, angles_for_target(pair, t));
            const double err = r.infinite ? INFINITY : (r.point - t).norm();
            worst = std::max(worst, err);
            ++checks;
            if (!(err < 1e-9)) ++failures;
        }
    }
    const double secs = seconds_since(t0);
    return {failures == 0 && secs < 10.0, std::to_string(checks) + " checks, " + std::to_string(failures) +
                                              " failures, worst round trip " + fmt(worst) + " m, " + fmt(secs) +
                                              " s"};
}

// 2. Projection trace against the explicit-inverse formula.
Outcome projection_trace_oracle() {
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<int> un(2, 16);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const int n = un(rng);
        const int k = std::uniform_int_distribution<int>(1, std::min(4, n))(rng);
        const CMatrix a = testing::random_complex(n, k, rng);
        const CMatrix r = testing::random_hermitian(n, rng);
        const double expected = oracle::explicit_projection_trace(a, r);
        worst = std::max(worst, std::abs(projection_trace(a, r) - expected) / std::abs(expected));
    }
    return {worst < 1e-10, "200 instances, worst relative error " + fmt(worst, 3)};
}

// 3. At K = 1 the per-target likelihood is the full likelihood.
Outcome decoupling_identity() {
    std::mt19937_64 rng(303);
    const auto pair = testing::two_pairs(4, 4)[0];
    std::uniform_real_distribution<double> ux(-4.5, 4.5), uy(2.5, 12.0);
    double worst = 0.0;
    int evaluated = 0;
    for (int s = 0; s < 10; ++s) {
        const Vec2 target(ux(rng), uy(rng));
        const CMatrix r = testing::random_hermitian(16, rng);
        const PerPairContext ctx = testing::exact_context(pair, {target}, r, 0.37, 512);
        for (int i = 0; i < 100; ++i) {
            const Vec2 p(ux(rng), uy(rng));
            const AnglePair ap = angles_for_target(pair, p);
            const double full = oracle::full_likelihood(ctx, std::span<const AnglePair>(&ap, 1));
            worst = std::max(worst, std::abs(per_target_likelihood(ctx, 0, p) - full) / std::abs(full));
            ++evaluated;
        }
    }
    return {worst < 1e-12, std::to_string(evaluated) + " points, worst relative difference " + fmt(worst, 3)};
}

// 4. Alternating summation against a joint two-target ML grid search.
Outcome brute_force_ml_equivalence() {
    const auto t0 = Clock::now();
    const auto pairs = testing::two_pairs(4, 4);
    GridSpec grid;
    AngleGridSpec music;
    music.spacing_rad = deg_to_rad(0.5);
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> ux(-4.0, 4.0), uy(3.0, 11.0);
    const double min_sep = deg_to_rad(20.0);
    int agree = 0;
    double worst = 0.0;
    for (int scene = 0; scene < 20; ++scene) {
        std::vector<Vec2> targets;
        while (true) {
            targets = {Vec2(ux(rng), uy(rng)), Vec2(ux(rng), uy(rng))};
            bool ok = true;
            for (const auto& pair : pairs) {
                const AnglePair a = angles_for_target(pair, targets[0]);
                const AnglePair b = angles_for_target(pair, targets[1]);
                ok = ok && std::abs(a.aod - b.aod) >= min_sep && std::abs(a.aoa - b.aoa) >= min_sep;
            }
            if (ok) break;
        }
        std::vector<PerPairContext> contexts;
        for (const auto& pair : pairs) {
            const CMatrix r = testing::noiseless_covariance(pair, targets, 4000 + 10 * scene + pair.id);
            contexts.emplace_back(pair, r, 1.0, 256, pre_estimate(r, 2, pair, music));
        }
        const LikelihoodMap map = combined_map(contexts, grid);
        const DetectionSet det = detect_peaks(map, 2, CombinedLikelihoodObjective(contexts));
        const oracle::JointMlResult ml = oracle::joint_ml_two_targets(contexts, grid);
        const auto cheb = [](const Vec2& a, const Vec2& b) { return (a - b).cwiseAbs().maxCoeff(); };
        const Vec2 p0 = det.peaks[0].position;
        const Vec2 p1 = det.peaks[1].position;
        const double straight = std::max(cheb(p0, ml.first), cheb(p1, ml.second));
        const double swapped = std::max(cheb(p0, ml.second), cheb(p1, ml.first));
        const double d = std::min(straight, swapped);
        worst = std::max(worst, d);
        if (d <= grid.spacing + 1e-9) ++agree;
    }
    const double secs = seconds_since(t0);
    return {agree == 20 && secs < 300.0, std::to_string(agree) + "/20 scenes within one cell, worst offset " +
                                             fmt(worst) + " m, " + fmt(secs) + " s"};
}

// 5. Noiseless MUSIC pre-estimates match the geometry.
Outcome music_consistency() {
    const ExperimentConfig cfg = default_config();
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> ux(cfg.region.x_min, cfg.region.x_max);
    std::uniform_real_distribution<double> uy(cfg.region.y_min, cfg.region.y_max);
    const double tol = deg_to_rad(0.5);
    int good = 0;
    double worst = 0.0;
    for (int scene = 0; scene < 50; ++scene) {
        const int k = 1 + scene % 2;
        std::vector<Vec2> targets;
        while (static_cast<int>(targets.size()) < k) {
            const Vec2 c(ux(rng), uy(rng));
            if (targets.empty() || (targets[0] - c).norm() >= cfg.region.min_separation) targets.push_back(c);
        }
        bool scene_ok = true;
        for (const auto& pair : cfg.pairs) {
            const CMatrix r = testing::noiseless_covariance(pair, targets, 5000 + 10 * scene + pair.id, 1024);
            const PreEstimate pre = pre_estimate(r, k, pair, cfg.music_grid);
            std::vector<bool> used(pre.angle_pairs.size(), false);
            for (const auto& t : targets) {
                const AnglePair truth = angles_for_target(pair, t);
                double best = INFINITY;
                std::size_t best_e = 0;
                for (std::size_t e = 0; e < pre.angle_pairs.size(); ++e) {
                    if (used[e]) continue;
                    const double d = std::max(std::abs(pre.angle_pairs[e].aod - truth.aod),
                                              std::abs(pre.angle_pairs[e].aoa - truth.aoa));
                    if (d < best) {
                        best = d;
                        best_e = e;
                    }
                }
                if (std::isfinite(best)) used[best_e] = true;
                worst = std::max(worst, best);
                scene_ok = scene_ok && best <= tol;
            }
        }
        if (scene_ok) ++good;
    }
    return {good == 50, std::to_string(good) + "/50 scenes within 0.5 deg, worst " + fmt(rad_to_deg(worst)) +
                            " deg"};
}

// 6. High-SNR consistency.
Outcome high_snr_consistency() {
    const auto t0 = Clock::now();
    const ExperimentConfig cfg = default_config({"methods=[\"mlas\"]"});
    long hits = 0;
    long targets = 0;
    double sq = 0.0;
    for (int t = 0; t < 200; ++t) {
        const TrialResult r = run_trial(cfg, 60.0, t);
        for (const auto& m : r.outcomes[0].matches) {
            ++targets;
            if (!m.hit) continue;
            ++hits;
            sq += m.error * m.error;
        }
    }
    const double rate = static_cast<double>(hits) / targets;
    const double rmse = hits ? std::sqrt(sq / hits) : NAN;
    return {rate >= 0.99 && rmse < 0.05, "hit rate " + fmt(rate) + ", RMSE " + fmt(rmse) + " m over 200 trials, " +
                                             fmt(seconds_since(t0)) + " s"};
}

// 7. Trend reproduction over the SNR sweep.
std::pair<Outcome, Outcome> trend_reproduction() {
    const auto t0 = Clock::now();
    const ExperimentConfig cfg = default_config();
    const fs::path dir = fs::temp_directory_path() / "mlas_acceptance_sweep";
    fs::remove_all(dir);
    SweepOptions opts;
    opts.output_dir = dir;
    const MetricsSummary s = run_sweep(cfg, opts);
    const double secs = seconds_since(t0);
    fs::remove_all(dir);

    std::cout << "  snr_db  method             hit_rate  rmse_m\n";
    for (const auto& r : s.rows) {
        std::printf("  %6g  %-17s  %.4f    %.4f\n", r.snr_db, to_string(r.method).c_str(), r.hit_rate, r.rmse);
    }

    std::vector<double> snrs = cfg.snr_grid_db;
    std::sort(snrs.begin(), snrs.end());
    int inversions = 0;
    bool inversion_within_ci = true;
    std::string rates;
    for (std::size_t i = 0; i < snrs.size(); ++i) {
        const MethodMetrics* cur = s.find(snrs[i], Method::Mlas);
        rates += (i ? " " : "") + fmt(cur->hit_rate);
        if (i == 0) continue;
        const MethodMetrics* prev = s.find(snrs[i - 1], Method::Mlas);
        if (cur->hit_rate < prev->hit_rate) {
            ++inversions;
            const double hw = oracle::binomial_difference_halfwidth(prev->hit_rate, cur->hit_rate, cur->targets);
            inversion_within_ci = inversion_within_ci && (prev->hit_rate - cur->hit_rate) <= hw;
        }
    }
    const bool a = inversions == 0 || (inversions == 1 && inversion_within_ci);

    bool b = true;
    std::string ratios;
    for (double snr : snrs) {
        const MethodMetrics* m = s.find(snr, Method::Mlas);
        const MethodMetrics* c = s.find(snr, Method::MusicCombination);
        const double ratio = m->rmse / c->rmse;
        ratios += (ratios.empty() ? "" : " ") + fmt(ratio, 3);
        b = b && std::isfinite(ratio) && ratio <= 1.05;
    }
    const bool fast = secs < 1800.0;
    return {{a && fast, "mlas hit rates " + rates + ", " + std::to_string(inversions) + " inversion(s), " +
                            fmt(secs, 5) + " s"},
            {b && fast, "mlas/music-combination RMSE ratios " + ratios}};
}

// 8. Fusion consumes only the serialized per-pair payload.
Outcome fusion_boundary() {
    const ExperimentConfig cfg = default_config();
    int identical = 0;
    constexpr int kTrials = 3;
    for (int t = 0; t < kTrials; ++t) {
        const TrialDetail detail = run_trial_detailed(cfg, 10.0, t);
        std::vector<PerPairContext> rebuilt;
        for (const auto& ctx : detail.contexts) {
            const std::string wire = context_to_json(ctx).dump();
            rebuilt.push_back(context_from_json(nlohmann::json::parse(wire)));
        }
        const LikelihoodMap a = combined_map(rebuilt, cfg.grid);
        const LikelihoodMap b = music_combination_map(rebuilt, cfg.grid, cfg.music_combination_scale);
        const bool same_mlas = a.values.size() == detail.mlas_map->values.size() &&
                               std::equal(a.values.data(), a.values.data() + a.values.size(),
                                          detail.mlas_map->values.data());
        const bool same_music = b.values.size() == detail.music_map->values.size() &&
                                std::equal(b.values.data(), b.values.data() + b.values.size(),
                                           detail.music_map->values.data());
        const DetectionSet d = detect_peaks(a, static_cast<int>(detail.scene.targets.size()),
                                            CombinedLikelihoodObjective(rebuilt), cfg.refine);
        const bool same_peaks = d.positions() == detail.mlas_detections->positions();
        if (same_mlas && same_music && same_peaks) ++identical;
    }
    return {identical == kTrials,
            std::to_string(identical) + "/" + std::to_string(kTrials) + " trials rebuilt bit-identically"};
}

// 9. Determinism of CSV rows.
Outcome determinism() {
    const ExperimentConfig cfg = default_config();
    int same = 0;
    int total = 0;
    for (double snr : {-10.0, 20.0}) {
        for (int t : {0, 17}) {
            std::ostringstream a, b;
            write_trial_rows(a, run_trial(cfg, snr, t));
            write_trial_rows(b, run_trial(cfg, snr, t));
            ++total;
            if (a.str() == b.str()) ++same;
        }
    }
    // Thread count must not change the sweep output.
    const auto tiny = [](int threads) {
        return load_experiment(testing::source_path("configs/examples/tiny.json"),
                               {"num_trials=6", "threads=" + std::to_string(threads)});
    };
    std::string outputs[2];
    for (int i = 0; i < 2; ++i) {
        const fs::path dir = fs::temp_directory_path() / ("mlas_acceptance_det_" + std::to_string(i));
        fs::remove_all(dir);
        SweepOptions opts;
        opts.output_dir = dir;
        opts.chunk_size = 2;
        run_sweep(tiny(i + 1), opts);
        std::ifstream in(dir / "trials.csv");
        std::stringstream ss;
        ss << in.rdbuf();
        outputs[i] = ss.str();
        fs::remove_all(dir);
    }
    ++total;
    if (outputs[0] == outputs[1] && !outputs[0].empty()) ++same;
    return {same == total, std::to_string(same) + "/" + std::to_string(total) + " reruns byte-identical"};
}

// 10. Degenerate inputs never crash and are flagged.
Outcome degenerate_inputs() {
    std::vector<std::string> problems;
    auto guard = [&](const std::string& name, const std::function<bool()>& body) {
        try {
            if (!body()) problems.push_back(name + " not flagged");
        } catch (const std::exception& e) {
            problems.push_back(name + " threw: " + e.what());
        }
    };
    const auto pairs = testing::two_pairs(4, 4);
    GridSpec grid;

    guard("pure-noise covariance", [&] {
        std::vector<PerPairContext> ctx;
        bool flagged = true;
        for (const auto& pair : pairs) {
            PreEstimate pre = pre_estimate(CMatrix::Identity(16, 16), 2, pair);
            flagged = flagged && pre.low_quality;
            ctx.emplace_back(pair, CMatrix::Identity(16, 16), 1.0, 64, std::move(pre));
        }
        const LikelihoodMap m = combined_map(ctx, grid);
        const DetectionSet d = detect_peaks(m, 2, CombinedLikelihoodObjective(ctx));
        const LikelihoodMap music = music_combination_map(ctx, grid);
        const DetectionSet dm = detect_peaks(music, 2, MusicCombinationObjective(ctx, SpectrumScale::Linear));
        return flagged && d.size() == 2 && dm.size() == 2;
    });

    guard("colliding pre-estimates", [&] {
        const Vec2 target(0.5, 6.0);
        std::vector<PerPairContext> ctx;
        for (const auto& pair : pairs) {
            const CMatrix r = testing::noiseless_covariance(pair, {target, Vec2(-2.0, 8.0)}, 9000 + pair.id);
            ctx.push_back(testing::exact_context(pair, {target, target}, r));
        }
        const LikelihoodMap m = combined_map(ctx, grid);
        const bool finite = std::all_of(m.values.data(), m.values.data() + m.values.size(),
                                        [](double v) { return !std::isnan(v) && v != INFINITY; });
        const DetectionSet d = detect_peaks(m, 2, CombinedLikelihoodObjective(ctx));
        return finite && d.size() == 2;
    });

    guard("near-parallel soft-fusion rays", [&] {
        const auto mono = testing::make_pair(0, {0.0, 0.0}, {0.0, 1.0}, {0.05, 0.0}, {0.0, 1.0});
        PreEstimate pre;
        pre.angle_pairs = {{0.2, 0.2}, {-0.3, -0.301}};
        pre.spectrum_values = {1.0, 1.0};
        std::vector<PerPairContext> ctx{PerPairContext(mono, CMatrix::Identity(16, 16), 1.0, 64, pre)};
        const std::vector<Vec2> truth{{1.0, 6.0}, {-2.0, 5.0}};
        const BaselineResult r = soft_fusion_estimate(ctx, truth);
        return std::all_of(r.flagged.begin(), r.flagged.end(), [](bool f) { return f; });
    });

    guard("trial at -100 dB", [&] {
        const ExperimentConfig cfg = default_config();
        const TrialResult r = run_trial(cfg, -100.0, 0);
        bool complete = r.outcomes.size() == cfg.methods.size();
        for (const auto& o : r.outcomes) complete = complete && o.matches.size() == r.truth.size();
        return complete;
    });

    guard("target outside a field of view", [&] {
        ExperimentConfig cfg = default_config();
        cfg.fixed_targets = {{0.0, -3.0}};
        const TrialResult r = run_trial(cfg, 20.0, 0);
        return std::all_of(r.outcomes.begin(), r.outcomes.end(), [](const MethodOutcome& o) { return o.flagged; });
    });

    std::string detail = problems.empty() ? "5 cases handled" : "";
    for (const auto& p : problems) detail += (detail.empty() ? "" : "; ") + p;
    return {problems.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    const auto wanted = [&](int n) { return selected.empty() || selected.count(n) > 0; };

    int failed = 0;
    const auto report = [&](const std::string& id, const std::string& name, const Outcome& o) {
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << "  " << name << ": " << o.detail
                  << std::endl;
        if (!o.pass) ++failed;
    };
    const auto run = [&](int n, const std::string& name, const std::function<Outcome()>& f) {
        if (!wanted(n)) return;
        try {
            report(std::to_string(n), name, f());
        } catch (const std::exception& e) {
            report(std::to_string(n), name, {false, std::string("exception: ") + e.what()});
        }
    };

    run(1, "steering/geometry invariants", steering_geometry_invariants);
    run(2, "projection-trace oracle", projection_trace_oracle);
    run(3, "decoupling identity", decoupling_identity);
    run(4, "brute-force ML equivalence", brute_force_ml_equivalence);
    run(5, "MUSIC consistency", music_consistency);
    run(6, "high-SNR consistency", high_snr_consistency);
    if (wanted(7)) {
        try {
            const auto [a, b] = trend_reproduction();
            report("7a", "mlas hit rate non-decreasing in SNR", a);
            report("7b", "mlas RMSE <= music-combination RMSE", b);
        } catch (const std::exception& e) {
            report("7", "trend reproduction", {false, std::string("exception: ") + e.what()});
        }
    }
    run(8, "fusion-boundary contract", fusion_boundary);
    run(9, "determinism", determinism);
    run(10, "degenerate-input suite", degenerate_inputs);
    return failed == 0 ? 0 : 1;
}
