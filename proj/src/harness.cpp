#include "mlas/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <iterator>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace mlas {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

DetectionSet select_peaks(const LikelihoodMap& map, int k, const PeakObjective& objective,
                          const ExperimentConfig& config) {
    if (config.peak_selection == PeakSelection::Distinct) return detect_peaks(map, k, objective, config.refine);
    return refine_peaks(find_peaks(map, k), objective, config.grid.spacing, config.refine);
}

std::uint64_t snr_key(double snr_db) { return std::bit_cast<std::uint64_t>(snr_db); }

void all_misses(MethodOutcome& o, std::size_t k) {
    o.matches.assign(k, TargetMatch{false, kNaN, -1});
    o.flagged = true;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && s.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

long parse_long(const std::string& s) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
    return v;
}

}  // namespace

std::string to_string(Method m) {
    switch (m) {
        case Method::Mlas:
            return "mlas";
        case Method::MusicCombination:
            return "music-combination";
        case Method::SoftFusion:
            return "soft-fusion";
    }
    return "unknown";
}

Method parse_method(const std::string& s) {
    if (s == "mlas") return Method::Mlas;
    if (s == "music-combination") return Method::MusicCombination;
    if (s == "soft-fusion") return Method::SoftFusion;
    throw std::invalid_argument("unknown method '" + s + "'");
}

void ExperimentConfig::validate() const {
    if (pairs.empty()) throw std::invalid_argument("config needs at least one radar pair");
    if (ofdm.size() != pairs.size()) throw std::invalid_argument("config needs OFDM parameters for every pair");
    for (const auto& o : ofdm) o.validate();
    coefficients.validate();
    grid.validate();
    if (num_trials < 1) throw std::invalid_argument("num_trials must be >= 1");
    if (!(hit_radius > 0.0)) throw std::invalid_argument("hit_radius must be > 0");
    if (snr_grid_db.empty()) throw std::invalid_argument("snr_grid_db must not be empty");
    if (methods.empty()) throw std::invalid_argument("at least one method is required");
    if (!(music_grid.spacing_rad > 0.0)) throw std::invalid_argument("music grid spacing must be > 0");
    if (threads < 0) throw std::invalid_argument("threads must be >= 0");

    const int k = fixed_targets.empty() ? num_targets : static_cast<int>(fixed_targets.size());
    if (k < 1) throw std::invalid_argument("at least one target is required");
    for (const auto& p : pairs) {
        if (k >= p.dimension()) {
            throw std::invalid_argument("K must be smaller than M_p * N_p for pair " + std::to_string(p.id));
        }
    }

    Scene probe{pairs, fixed_targets};
    if (fixed_targets.empty()) {
        if (!(region.x_max > region.x_min) || !(region.y_max > region.y_min)) {
            throw std::invalid_argument("target region bounds are inverted");
        }
        if (!(region.min_separation >= 0.0)) throw std::invalid_argument("min_separation must be >= 0");
        // The region is convex and every field of view is a half-plane, so the corners suffice.
        probe.targets = {{region.x_min, region.y_min}, {region.x_min, region.y_max},
                         {region.x_max, region.y_min}, {region.x_max, region.y_max}};
    }
    try {
        probe.validate();
    } catch (const GeometryError& e) {
        throw std::invalid_argument(std::string("target placement: ") + e.what());
    }
    // Map nodes must be in view of every array as well.
    Scene grid_probe{pairs, {{grid.x_min, grid.y_min}, {grid.x_min, grid.y_max},
                             {grid.x_max, grid.y_min}, {grid.x_max, grid.y_max}}};
    try {
        grid_probe.validate();
    } catch (const GeometryError& e) {
        throw std::invalid_argument(std::string("map grid: ") + e.what());
    }
}

bool ExperimentConfig::has_method(Method m) const {
    return std::find(methods.begin(), methods.end(), m) != methods.end();
}

std::vector<TargetMatch> match_detections(std::span<const Vec2> truth, std::span<const Vec2> estimates,
                                          double hit_radius, MatchingMode mode) {
    const std::size_t nt = truth.size();
    const std::size_t ne = estimates.size();
    std::vector<TargetMatch> out(nt, TargetMatch{false, kNaN, -1});

    auto dist = [&](std::size_t t, std::size_t e) {
        const double d = (truth[t] - estimates[e]).norm();
        return std::isfinite(d) ? d : std::numeric_limits<double>::infinity();
    };

    if (mode == MatchingMode::Greedy) {
        struct Candidate {
            double d;
            std::size_t t;
            std::size_t e;
        };
        std::vector<Candidate> cands;
        for (std::size_t t = 0; t < nt; ++t)
            for (std::size_t e = 0; e < ne; ++e) {
                const double d = dist(t, e);
                if (d <= hit_radius) cands.push_back({d, t, e});
            }
        std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
            if (a.d != b.d) return a.d < b.d;
            if (a.t != b.t) return a.t < b.t;
            return a.e < b.e;
        });
        std::vector<bool> used_t(nt, false), used_e(ne, false);
        for (const auto& c : cands) {
            if (used_t[c.t] || used_e[c.e]) continue;
            used_t[c.t] = used_e[c.e] = true;
            out[c.t] = {true, c.d, static_cast<int>(c.e)};
        }
        return out;
    }

    // Exhaustive search: maximize hits, then minimize total error.
    std::vector<int> current(nt, -1), best(nt, -1);
    std::vector<bool> used(ne, false);
    int best_hits = -1;
    double best_err = std::numeric_limits<double>::infinity();
    std::function<void(std::size_t, int, double)> recurse = [&](std::size_t t, int hits, double err) {
        if (t == nt) {
            if (hits > best_hits || (hits == best_hits && err < best_err)) {
                best_hits = hits;
                best_err = err;
                best = current;
            }
            return;
        }
        current[t] = -1;
        recurse(t + 1, hits, err);
        for (std::size_t e = 0; e < ne; ++e) {
            if (used[e]) continue;
            const double d = dist(t, e);
            if (d > hit_radius) continue;
            used[e] = true;
            current[t] = static_cast<int>(e);
            recurse(t + 1, hits + 1, err + d);
            used[e] = false;
        }
        current[t] = -1;
    };
    recurse(0, 0, 0.0);
    for (std::size_t t = 0; t < nt; ++t) {
        if (best[t] >= 0) out[t] = {true, dist(t, static_cast<std::size_t>(best[t])), best[t]};
    }
    return out;
}

const MethodOutcome* TrialResult::outcome(Method m) const {
    for (const auto& o : outcomes)
        if (o.method == m) return &o;
    return nullptr;
}

const MethodMetrics* MetricsSummary::find(double snr_db, Method m) const {
    for (const auto& r : rows)
        if (r.snr_db == snr_db && r.method == m) return &r;
    return nullptr;
}

std::vector<Vec2> draw_targets(const ExperimentConfig& config, int trial_index) {
    if (!config.fixed_targets.empty()) return config.fixed_targets;
    auto rng = make_stream(config.master_seed, "targets", {static_cast<std::uint64_t>(trial_index)});
    std::uniform_real_distribution<double> ux(config.region.x_min, config.region.x_max);
    std::uniform_real_distribution<double> uy(config.region.y_min, config.region.y_max);
    std::vector<Vec2> targets;
    constexpr int kMaxAttempts = 100000;
    int attempts = 0;
    while (static_cast<int>(targets.size()) < config.num_targets) {
        if (++attempts > kMaxAttempts) {
            throw std::invalid_argument("cannot place targets with the requested minimum separation");
        }
        const double x = ux(rng);
        const double y = uy(rng);
        const Vec2 c(x, y);
        const bool ok = std::all_of(targets.begin(), targets.end(), [&](const Vec2& t) {
            return (t - c).norm() >= config.region.min_separation;
        });
        if (ok) targets.push_back(c);
    }
    return targets;
}

std::vector<PerPairContext> build_contexts(const ExperimentConfig& config, const Scene& scene, double snr_db,
                                           int trial_index, double* noise_variance) {
    const auto trial = static_cast<std::uint64_t>(trial_index);
    std::vector<CMatrix> alphas;
    alphas.reserve(scene.pairs.size());
    for (std::size_t p = 0; p < scene.pairs.size(); ++p) {
        auto rng = make_stream(config.master_seed, "coefficients", {trial, static_cast<std::uint64_t>(p)});
        alphas.push_back(path_coefficients(scene, scene.pairs[p], config.ofdm[p], config.coefficients, rng));
    }
    const double sigma2 = calibrate_noise_for_snr(alphas, snr_db);
    if (noise_variance) *noise_variance = sigma2;

    const int k = scene.num_targets();
    std::vector<PerPairContext> contexts;
    contexts.reserve(scene.pairs.size());
    for (std::size_t p = 0; p < scene.pairs.size(); ++p) {
        auto rng = make_stream(config.master_seed, "noise",
                               {trial, static_cast<std::uint64_t>(p), snr_key(snr_db)});
        RadarPairObservation obs = synthesize_observation(scene, scene.pairs[p], alphas[p], sigma2, rng);
        const NoiseSubspace subspace = noise_subspace(obs.covariance, k);
        PreEstimate pre = pre_estimate(subspace, scene.pairs[p], config.music_grid);
        const double var = config.noise_variance_mode == NoiseVarianceMode::Known
                               ? sigma2
                               : estimate_noise_variance(obs.covariance, k);
        contexts.emplace_back(scene.pairs[p], std::move(obs.covariance), var, config.ofdm[p].num_subcarriers,
                              std::move(pre));
    }
    return contexts;
}

TrialDetail run_trial_detailed(const ExperimentConfig& config, double snr_db, int trial_index) {
    TrialDetail detail;
    detail.scene.pairs = config.pairs;
    detail.scene.targets = draw_targets(config, trial_index);
    const std::size_t k = detail.scene.targets.size();
    const int kk = static_cast<int>(k);

    TrialResult& res = detail.result;
    res.trial = trial_index;
    res.snr_db = snr_db;
    res.truth = detail.scene.targets;

    bool contexts_ok = true;
    try {
        detail.scene.validate();
        detail.contexts = build_contexts(config, detail.scene, snr_db, trial_index, &detail.noise_variance);
    } catch (const std::exception&) {
        contexts_ok = false;
    }
    bool low_quality = false;
    for (const auto& c : detail.contexts) low_quality = low_quality || c.pre_estimates().low_quality;

    for (Method m : config.methods) {
        MethodOutcome o;
        o.method = m;
        if (!contexts_ok) {
            all_misses(o, k);
            res.outcomes.push_back(std::move(o));
            continue;
        }
        try {
            switch (m) {
                case Method::Mlas: {
                    detail.mlas_map = combined_map(detail.contexts, config.grid);
                    detail.mlas_detections = select_peaks(*detail.mlas_map, kk,
                                                          CombinedLikelihoodObjective(detail.contexts), config);
                    o.estimates = detail.mlas_detections->positions();
                    o.flagged = low_quality || std::any_of(detail.mlas_detections->peaks.begin(),
                                                           detail.mlas_detections->peaks.end(),
                                                           [](const Detection& d) { return d.fill; });
                    break;
                }
                case Method::MusicCombination: {
                    detail.music_map =
                        music_combination_map(detail.contexts, config.grid, config.music_combination_scale);
                    detail.music_detections = select_peaks(
                        *detail.music_map, kk,
                        MusicCombinationObjective(detail.contexts, config.music_combination_scale), config);
                    o.estimates = detail.music_detections->positions();
                    o.flagged = low_quality || std::any_of(detail.music_detections->peaks.begin(),
                                                           detail.music_detections->peaks.end(),
                                                           [](const Detection& d) { return d.fill; });
                    break;
                }
                case Method::SoftFusion: {
                    detail.soft_fusion = soft_fusion_estimate(detail.contexts, res.truth);
                    o.estimates = detail.soft_fusion->positions;
                    o.flagged = low_quality || std::any_of(detail.soft_fusion->flagged.begin(),
                                                           detail.soft_fusion->flagged.end(),
                                                           [](bool f) { return f; });
                    break;
                }
            }
            o.matches = match_detections(res.truth, o.estimates, config.hit_radius, config.matching);
        } catch (const std::exception&) {
            o.estimates.clear();
            all_misses(o, k);
        }
        res.outcomes.push_back(std::move(o));
    }
    return detail;
}

TrialResult run_trial(const ExperimentConfig& config, double snr_db, int trial_index) {
    return run_trial_detailed(config, snr_db, trial_index).result;
}

MetricsSummary summarize(std::span<const TrialResult> trials, std::span<const Method> methods) {
    std::vector<const TrialResult*> ordered;
    ordered.reserve(trials.size());
    for (const auto& t : trials) ordered.push_back(&t);
    std::sort(ordered.begin(), ordered.end(), [](const TrialResult* a, const TrialResult* b) {
        if (a->snr_db != b->snr_db) return a->snr_db < b->snr_db;
        return a->trial < b->trial;
    });

    MetricsSummary summary;
    std::size_t i = 0;
    while (i < ordered.size()) {
        const double snr = ordered[i]->snr_db;
        std::size_t end = i;
        while (end < ordered.size() && ordered[end]->snr_db == snr) ++end;

        std::vector<MethodMetrics> rows(methods.size());
        std::vector<double> sq(methods.size(), 0.0);
        for (std::size_t m = 0; m < methods.size(); ++m) {
            rows[m].snr_db = snr;
            rows[m].method = methods[m];
        }
        for (std::size_t t = i; t < end; ++t) {
            const TrialResult& tr = *ordered[t];
            std::vector<const MethodOutcome*> outs;
            for (Method m : methods) outs.push_back(tr.outcome(m));
            for (std::size_t k = 0; k < tr.truth.size(); ++k) {
                bool common = true;
                for (std::size_t m = 0; m < methods.size(); ++m) {
                    rows[m].targets += 1;
                    const bool hit = outs[m] && k < outs[m]->matches.size() && outs[m]->matches[k].hit;
                    if (hit) rows[m].hits += 1;
                    common = common && hit;
                }
                if (!common) continue;
                for (std::size_t m = 0; m < methods.size(); ++m) {
                    const double e = outs[m]->matches[k].error;
                    sq[m] += e * e;
                    rows[m].n_common += 1;
                }
            }
        }
        for (std::size_t m = 0; m < methods.size(); ++m) {
            rows[m].hit_rate = rows[m].targets ? static_cast<double>(rows[m].hits) / rows[m].targets : 0.0;
            rows[m].rmse = rows[m].n_common ? std::sqrt(sq[m] / rows[m].n_common) : kNaN;
            summary.rows.push_back(rows[m]);
        }
        i = end;
    }
    return summary;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("cannot format number");
    return std::string(buf, ptr);
}

std::string trials_csv_header() {
    return "snr_db,trial,method,target,truth_x,truth_y,est_x,est_y,hit,error,matched_estimate,flagged";
}

void write_trial_rows(std::ostream& os, const TrialResult& trial) {
    const double nan = kNaN;
    for (const auto& o : trial.outcomes) {
        for (std::size_t k = 0; k < trial.truth.size(); ++k) {
            const TargetMatch m = k < o.matches.size() ? o.matches[k] : TargetMatch{false, nan, -1};
            const bool valid = m.hit && m.estimate_index >= 0 &&
                               static_cast<std::size_t>(m.estimate_index) < o.estimates.size();
            const Vec2 est = valid ? o.estimates[static_cast<std::size_t>(m.estimate_index)] : Vec2(nan, nan);
            os << format_double(trial.snr_db) << ',' << trial.trial << ',' << to_string(o.method) << ',' << k << ','
               << format_double(trial.truth[k].x()) << ',' << format_double(trial.truth[k].y()) << ','
               << format_double(est.x()) << ',' << format_double(est.y()) << ',' << (m.hit ? 1 : 0) << ','
               << format_double(m.hit ? m.error : nan) << ',' << m.estimate_index << ',' << (o.flagged ? 1 : 0)
               << '\n';
        }
    }
}

std::vector<TrialResult> read_trials_csv(std::istream& is) {
    std::vector<TrialResult> out;
    std::map<std::pair<std::uint64_t, int>, std::size_t> index;
    std::string line;
    long line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line_no == 1) {
            if (line != trials_csv_header()) throw std::runtime_error("trials.csv line 1: unexpected header");
            continue;
        }
        if (line.empty()) continue;
        try {
            const auto f = split_csv_line(line);
            if (f.size() != 12) throw std::invalid_argument("expected 12 fields");
            const double snr = parse_double(f[0]);
            const int trial = static_cast<int>(parse_long(f[1]));
            const Method method = parse_method(f[2]);
            const auto k = static_cast<std::size_t>(parse_long(f[3]));
            auto key = std::make_pair(snr_key(snr), trial);
            auto it = index.find(key);
            if (it == index.end()) {
                it = index.emplace(key, out.size()).first;
                out.push_back(TrialResult{trial, snr, {}, {}});
            }
            TrialResult& tr = out[it->second];
            if (k >= tr.truth.size()) tr.truth.resize(k + 1, Vec2::Zero());
            tr.truth[k] = Vec2(parse_double(f[4]), parse_double(f[5]));
            MethodOutcome* o = nullptr;
            for (auto& oc : tr.outcomes)
                if (oc.method == method) o = &oc;
            if (!o) {
                tr.outcomes.push_back(MethodOutcome{method, {}, {}, false});
                o = &tr.outcomes.back();
            }
            if (k >= o->matches.size()) o->matches.resize(k + 1, TargetMatch{false, kNaN, -1});
            const long hit = parse_long(f[8]);
            if (hit != 0 && hit != 1) throw std::invalid_argument("hit must be 0 or 1");
            const long idx = parse_long(f[10]);
            o->matches[k] = TargetMatch{hit == 1, parse_double(f[9]), static_cast<int>(idx)};
            if (hit == 1) {
                if (idx < 0) throw std::invalid_argument("hit without a matched estimate");
                const auto e = static_cast<std::size_t>(idx);
                if (e >= o->estimates.size()) o->estimates.resize(e + 1, Vec2(kNaN, kNaN));
                o->estimates[e] = Vec2(parse_double(f[6]), parse_double(f[7]));
            }
            o->flagged = parse_long(f[11]) != 0;
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("trials.csv line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::string summary_csv_header() { return "snr_db,method,hit_rate,rmse,n_common"; }

void write_summary_csv(std::ostream& os, const MetricsSummary& summary) {
    os << summary_csv_header() << '\n';
    for (const auto& r : summary.rows) {
        os << format_double(r.snr_db) << ',' << to_string(r.method) << ',' << format_double(r.hit_rate) << ','
           << format_double(r.rmse) << ',' << r.n_common << '\n';
    }
}

MetricsSummary read_summary_csv(std::istream& is) {
    MetricsSummary s;
    std::string line;
    long line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line_no == 1) {
            if (line != summary_csv_header()) throw std::runtime_error("summary.csv line 1: unexpected header");
            continue;
        }
        if (line.empty()) continue;
        try {
            const auto f = split_csv_line(line);
            if (f.size() != 5) throw std::invalid_argument("expected 5 fields");
            MethodMetrics m;
            m.snr_db = parse_double(f[0]);
            m.method = parse_method(f[1]);
            m.hit_rate = parse_double(f[2]);
            m.rmse = parse_double(f[3]);
            m.n_common = parse_long(f[4]);
            if (!(m.hit_rate >= 0.0 && m.hit_rate <= 1.0)) throw std::invalid_argument("hit_rate outside [0, 1]");
            s.rows.push_back(m);
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("summary.csv line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (line_no == 0) throw std::runtime_error("summary.csv is empty");
    return s;
}

namespace {

struct PlannedTrial {
    double snr_db;
    int trial;
};

bool trial_complete(const TrialResult& t, const ExperimentConfig& config, std::size_t k) {
    if (t.truth.size() != k) return false;
    for (Method m : config.methods) {
        const MethodOutcome* o = t.outcome(m);
        if (!o || o->matches.size() != k) return false;
    }
    return t.outcomes.size() == config.methods.size();
}

// Byte length of the header plus the rows of the first `count` trials.
std::uintmax_t prefix_bytes(const std::filesystem::path& path, std::size_t rows) {
    std::ifstream in(path, std::ios::binary);
    std::string line;
    std::uintmax_t bytes = 0;
    for (std::size_t i = 0; i < rows + 1 && std::getline(in, line); ++i) bytes += line.size() + 1;
    return bytes;
}

}  // namespace

MetricsSummary run_sweep(const ExperimentConfig& config, const SweepOptions& options) {
    config.validate();
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(options.output_dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + options.output_dir.string());

    const fs::path trials_path = options.output_dir / "trials.csv";
    const std::size_t k = config.fixed_targets.empty() ? static_cast<std::size_t>(config.num_targets)
                                                      : config.fixed_targets.size();

    std::vector<PlannedTrial> plan;
    for (double snr : config.snr_grid_db)
        for (int t = 0; t < config.num_trials; ++t) plan.push_back({snr, t});

    std::vector<TrialResult> results;
    results.reserve(plan.size());
    std::size_t done = 0;

    if (options.resume && fs::exists(trials_path)) {
        std::vector<TrialResult> previous;
        {
            std::ifstream in(trials_path, std::ios::binary);
            std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            // A torn final line from an interrupted write is dropped.
            if (!content.empty() && content.back() != '\n') content.erase(content.rfind('\n') + 1);
            std::istringstream complete(content);
            previous = read_trials_csv(complete);
        }
        while (done < previous.size() && done < plan.size() && trial_complete(previous[done], config, k) &&
               previous[done].snr_db == plan[done].snr_db && previous[done].trial == plan[done].trial) {
            results.push_back(previous[done]);
            ++done;
        }
        const std::size_t rows_per_trial = k * config.methods.size();
        fs::resize_file(trials_path, prefix_bytes(trials_path, done * rows_per_trial), ec);
        if (ec) throw std::runtime_error("cannot truncate " + trials_path.string());
        if (done == 0) {
            std::ofstream(trials_path, std::ios::trunc) << trials_csv_header() << '\n';
        }
    } else {
        std::ofstream out(trials_path, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + trials_path.string());
        out << trials_csv_header() << '\n';
    }

    std::ofstream log(trials_path, std::ios::app);
    if (!log) throw std::runtime_error("cannot append to " + trials_path.string());

    unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::thread::hardware_concurrency();
    workers = std::max(1u, workers);
    const std::size_t chunk = static_cast<std::size_t>(std::max(1, options.chunk_size)) * workers;

    while (done < plan.size()) {
        const std::size_t end = std::min(plan.size(), done + chunk);
        std::vector<TrialResult> batch(end - done);
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto work = [&] {
            for (std::size_t i = next++; i < batch.size(); i = next++) {
                try {
                    const auto& p = plan[done + i];
                    batch[i] = run_trial(config, p.snr_db, p.trial);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        };
        if (workers == 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
            for (auto& th : pool) th.join();
        }
        if (failure) std::rethrow_exception(failure);
        for (auto& tr : batch) {
            write_trial_rows(log, tr);
            results.push_back(std::move(tr));
        }
        log.flush();
        if (!log) throw std::runtime_error("write to " + trials_path.string() + " failed");
        done = end;
        if (options.progress) *options.progress << "completed " << done << "/" << plan.size() << " trials\n";
    }

    const MetricsSummary summary = summarize(results, config.methods);
    const fs::path summary_path = options.output_dir / "summary.csv";
    std::ofstream sout(summary_path, std::ios::trunc);
    if (!sout) throw std::runtime_error("cannot write " + summary_path.string());
    write_summary_csv(sout, summary);
    if (!sout) throw std::runtime_error("write to " + summary_path.string() + " failed");
    return summary;
}

}  // namespace mlas
