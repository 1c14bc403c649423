#include "mlas/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mlas {

using nlohmann::json;

namespace {

const std::set<std::string> kTopLevelKeys{
    "pairs",       "ofdm",           "targets",     "target_region", "coefficients",
    "snr_grid_db", "snr_db",         "num_trials",  "master_seed",   "grid",
    "music",       "hit_radius_m",   "methods",     "noise_variance", "music_combination_scale",
    "matching",    "threads",        "refine",      "description",   "peak_selection"};

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

Vec2 vec2_from(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ConfigError(where + " must be a [x, y] pair of numbers");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

json vec2_to(const Vec2& v) { return json::array({v.x(), v.y()}); }

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("key '") + key + "' has the wrong type");
    }
}

ArraySpec array_from(const json& j, const std::string& where) {
    check_keys(j, {"origin", "boresight", "num_elements"}, where);
    if (!j.contains("origin") || !j.contains("boresight") || !j.contains("num_elements")) {
        throw ConfigError(where + " needs origin, boresight and num_elements");
    }
    try {
        const Vec2 origin = vec2_from(j["origin"], where + ".origin");
        const Vec2 boresight = vec2_from(j["boresight"], where + ".boresight");
        const int n = j["num_elements"].get<int>();
        // Unit vectors are kept bit-exact so serialized geometry round-trips.
        if (std::abs(boresight.norm() - 1.0) <= 1e-12) return ArraySpec(origin, boresight, n);
        return ArraySpec::facing(origin, boresight, n);
    } catch (const GeometryError& e) {
        throw ConfigError(where + ": " + e.what());
    } catch (const json::exception&) {
        throw ConfigError(where + ".num_elements must be an integer");
    }
}

json array_to(const ArraySpec& a) {
    return json{{"origin", vec2_to(a.origin())}, {"boresight", vec2_to(a.boresight())},
                {"num_elements", a.num_elements()}};
}

OfdmParams ofdm_from(const json& j, OfdmParams base, const std::string& where) {
    check_keys(j, {"num_subcarriers", "subcarrier_spacing_hz", "carrier_wavelength_m", "carrier_frequency_hz"},
               where);
    base.num_subcarriers = get_or(j, "num_subcarriers", base.num_subcarriers);
    base.subcarrier_spacing_hz = get_or(j, "subcarrier_spacing_hz", base.subcarrier_spacing_hz);
    if (j.contains("carrier_frequency_hz") && j.contains("carrier_wavelength_m")) {
        throw ConfigError(where + ": give either carrier_frequency_hz or carrier_wavelength_m");
    }
    if (j.contains("carrier_frequency_hz")) {
        const double f = get_or(j, "carrier_frequency_hz", 0.0);
        if (!(f > 0.0)) throw ConfigError(where + ".carrier_frequency_hz must be > 0");
        base.carrier_wavelength_m = kSpeedOfLight / f;
    }
    base.carrier_wavelength_m = get_or(j, "carrier_wavelength_m", base.carrier_wavelength_m);
    return base;
}

json ofdm_to(const OfdmParams& o) {
    return json{{"num_subcarriers", o.num_subcarriers},
                {"subcarrier_spacing_hz", o.subcarrier_spacing_hz},
                {"carrier_wavelength_m", o.carrier_wavelength_m}};
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream ss(path);
    while (std::getline(ss, part, '.')) {
        if (part.empty()) throw ConfigError("empty segment in override key '" + path + "'");
        parts.push_back(part);
    }
    if (parts.empty()) throw ConfigError("override key is empty");
    return parts;
}

bool is_index(const std::string& s) {
    return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
}

}  // namespace

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse '" + path.string() + "': " + e.what());
    }
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    const auto parts = split_path(assignment.substr(0, eq));
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;
    }
    json* node = &doc;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto& p = parts[i];
        const bool last = i + 1 == parts.size();
        if (node->is_array() && is_index(p)) {
            const auto idx = static_cast<std::size_t>(std::stoul(p));
            if (idx >= node->size()) throw ConfigError("override index " + p + " is out of range");
            node = &(*node)[idx];
        } else {
            if (!node->is_object()) {
                if (!node->is_null()) throw ConfigError("override path '" + assignment + "' crosses a non-object");
                *node = json::object();
            }
            node = &(*node)[p];
        }
        if (last) *node = value;
    }
}

json pair_geometry_to_json(const RadarPairGeometry& pair) {
    return json{{"id", pair.id}, {"stx", array_to(pair.stx)}, {"srx", array_to(pair.srx)}};
}

RadarPairGeometry pair_geometry_from_json(const json& j) {
    check_keys(j, {"id", "stx", "srx", "ofdm"}, "pair");
    if (!j.contains("stx") || !j.contains("srx")) throw ConfigError("pair needs stx and srx arrays");
    const int id = get_or(j, "id", 0);
    return RadarPairGeometry{id, array_from(j["stx"], "pair " + std::to_string(id) + ".stx"),
                             array_from(j["srx"], "pair " + std::to_string(id) + ".srx")};
}

ExperimentConfig experiment_from_json(const json& doc) {
    check_keys(doc, kTopLevelKeys, "config");
    ExperimentConfig cfg;
    try {
        const OfdmParams base = doc.contains("ofdm") ? ofdm_from(doc["ofdm"], OfdmParams{}, "ofdm") : OfdmParams{};
        if (!doc.contains("pairs") || !doc["pairs"].is_array() || doc["pairs"].empty()) {
            throw ConfigError("config needs a non-empty 'pairs' array");
        }
        int auto_id = 0;
        for (const auto& pj : doc["pairs"]) {
            json with_id = pj;
            if (!with_id.contains("id")) with_id["id"] = auto_id;
            cfg.pairs.push_back(pair_geometry_from_json(with_id));
            cfg.ofdm.push_back(pj.contains("ofdm") ? ofdm_from(pj["ofdm"], base, "pair.ofdm") : base);
            ++auto_id;
        }

        if (doc.contains("targets") && doc.contains("target_region")) {
            throw ConfigError("give either 'targets' or 'target_region', not both");
        }
        if (doc.contains("targets")) {
            if (!doc["targets"].is_array() || doc["targets"].empty()) {
                throw ConfigError("'targets' must be a non-empty list of [x, y]");
            }
            for (const auto& t : doc["targets"]) cfg.fixed_targets.push_back(vec2_from(t, "target"));
            cfg.num_targets = static_cast<int>(cfg.fixed_targets.size());
        } else if (doc.contains("target_region")) {
            const auto& r = doc["target_region"];
            check_keys(r, {"x_min", "x_max", "y_min", "y_max", "count", "min_separation"}, "target_region");
            cfg.region.x_min = get_or(r, "x_min", cfg.region.x_min);
            cfg.region.x_max = get_or(r, "x_max", cfg.region.x_max);
            cfg.region.y_min = get_or(r, "y_min", cfg.region.y_min);
            cfg.region.y_max = get_or(r, "y_max", cfg.region.y_max);
            cfg.region.min_separation = get_or(r, "min_separation", cfg.region.min_separation);
            cfg.num_targets = get_or(r, "count", cfg.num_targets);
        } else {
            throw ConfigError("config needs 'targets' or 'target_region'");
        }

        if (doc.contains("coefficients")) {
            const auto& c = doc["coefficients"];
            check_keys(c, {"model", "reference_amplitude"}, "coefficients");
            cfg.coefficients.variant = parse_coefficient_variant(
                get_or(c, "model", to_string(cfg.coefficients.variant)));
            cfg.coefficients.reference_amplitude = get_or(c, "reference_amplitude", cfg.coefficients.reference_amplitude);
        }
        cfg.snr_grid_db = get_or(doc, "snr_grid_db", cfg.snr_grid_db);
        cfg.snr_db = get_or(doc, "snr_db", cfg.snr_db);
        cfg.num_trials = get_or(doc, "num_trials", cfg.num_trials);
        cfg.master_seed = get_or(doc, "master_seed", cfg.master_seed);
        cfg.hit_radius = get_or(doc, "hit_radius_m", cfg.hit_radius);
        cfg.threads = get_or(doc, "threads", cfg.threads);

        // Default map: the target area with a 1 m margin.
        if (cfg.fixed_targets.empty()) {
            cfg.grid.x_min = cfg.region.x_min - 1.0;
            cfg.grid.x_max = cfg.region.x_max + 1.0;
            cfg.grid.y_min = cfg.region.y_min - 1.0;
            cfg.grid.y_max = cfg.region.y_max + 1.0;
        } else {
            Vec2 lo = cfg.fixed_targets.front();
            Vec2 hi = lo;
            for (const auto& t : cfg.fixed_targets) {
                lo = lo.cwiseMin(t);
                hi = hi.cwiseMax(t);
            }
            cfg.grid.x_min = lo.x() - 2.0;
            cfg.grid.x_max = hi.x() + 2.0;
            cfg.grid.y_min = lo.y() - 2.0;
            cfg.grid.y_max = hi.y() + 2.0;
        }
        if (doc.contains("grid")) {
            const auto& g = doc["grid"];
            check_keys(g, {"x_min", "x_max", "y_min", "y_max", "spacing"}, "grid");
            cfg.grid.x_min = get_or(g, "x_min", cfg.grid.x_min);
            cfg.grid.x_max = get_or(g, "x_max", cfg.grid.x_max);
            cfg.grid.y_min = get_or(g, "y_min", cfg.grid.y_min);
            cfg.grid.y_max = get_or(g, "y_max", cfg.grid.y_max);
            cfg.grid.spacing = get_or(g, "spacing", cfg.grid.spacing);
        }
        if (doc.contains("music")) {
            const auto& m = doc["music"];
            check_keys(m, {"grid_spacing_deg", "refine_min_step_rad", "refine_max_iterations"}, "music");
            cfg.music_grid.spacing_rad = deg_to_rad(get_or(m, "grid_spacing_deg", rad_to_deg(cfg.music_grid.spacing_rad)));
            cfg.music_grid.refine_initial_step_rad = 0.5 * cfg.music_grid.spacing_rad;
            cfg.music_grid.refine_min_step_rad = get_or(m, "refine_min_step_rad", cfg.music_grid.refine_min_step_rad);
            cfg.music_grid.refine_max_iterations =
                get_or(m, "refine_max_iterations", cfg.music_grid.refine_max_iterations);
        }
        if (doc.contains("refine")) {
            const auto& r = doc["refine"];
            check_keys(r, {"initial_step_m", "min_step_m", "max_iterations"}, "refine");
            cfg.refine.initial_step = get_or(r, "initial_step_m", cfg.refine.initial_step);
            cfg.refine.min_step = get_or(r, "min_step_m", cfg.refine.min_step);
            cfg.refine.max_iterations = get_or(r, "max_iterations", cfg.refine.max_iterations);
        }
        if (doc.contains("methods")) {
            cfg.methods.clear();
            for (const auto& m : get_or(doc, "methods", std::vector<std::string>{})) cfg.methods.push_back(parse_method(m));
            std::set<Method> unique(cfg.methods.begin(), cfg.methods.end());
            if (unique.size() != cfg.methods.size()) throw ConfigError("methods must not repeat");
        }
        const std::string nv = get_or(doc, "noise_variance", std::string("known"));
        if (nv == "known") {
            cfg.noise_variance_mode = NoiseVarianceMode::Known;
        } else if (nv == "estimated") {
            cfg.noise_variance_mode = NoiseVarianceMode::Estimated;
        } else {
            throw ConfigError("noise_variance must be 'known' or 'estimated'");
        }
        cfg.music_combination_scale =
            parse_spectrum_scale(get_or(doc, "music_combination_scale", std::string("linear")));
        const std::string matching = get_or(doc, "matching", std::string("greedy"));
        if (matching == "greedy") {
            cfg.matching = MatchingMode::Greedy;
        } else if (matching == "optimal") {
            cfg.matching = MatchingMode::Optimal;
        } else {
            throw ConfigError("matching must be 'greedy' or 'optimal'");
        }
        const std::string selection = get_or(doc, "peak_selection", std::string("distinct"));
        if (selection == "distinct") {
            cfg.peak_selection = PeakSelection::Distinct;
        } else if (selection == "grid") {
            cfg.peak_selection = PeakSelection::Grid;
        } else {
            throw ConfigError("peak_selection must be 'distinct' or 'grid'");
        }
        cfg.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

json experiment_to_json(const ExperimentConfig& cfg) {
    json doc;
    doc["pairs"] = json::array();
    for (std::size_t p = 0; p < cfg.pairs.size(); ++p) {
        json pj = pair_geometry_to_json(cfg.pairs[p]);
        pj["ofdm"] = ofdm_to(cfg.ofdm[p]);
        doc["pairs"].push_back(pj);
    }
    if (!cfg.fixed_targets.empty()) {
        doc["targets"] = json::array();
        for (const auto& t : cfg.fixed_targets) doc["targets"].push_back(vec2_to(t));
    } else {
        doc["target_region"] = {{"x_min", cfg.region.x_min}, {"x_max", cfg.region.x_max},
                                {"y_min", cfg.region.y_min}, {"y_max", cfg.region.y_max},
                                {"count", cfg.num_targets},  {"min_separation", cfg.region.min_separation}};
    }
    doc["coefficients"] = {{"model", to_string(cfg.coefficients.variant)},
                           {"reference_amplitude", cfg.coefficients.reference_amplitude}};
    doc["snr_grid_db"] = cfg.snr_grid_db;
    doc["snr_db"] = cfg.snr_db;
    doc["num_trials"] = cfg.num_trials;
    doc["master_seed"] = cfg.master_seed;
    doc["grid"] = {{"x_min", cfg.grid.x_min}, {"x_max", cfg.grid.x_max}, {"y_min", cfg.grid.y_min},
                   {"y_max", cfg.grid.y_max}, {"spacing", cfg.grid.spacing}};
    doc["music"] = {{"grid_spacing_deg", rad_to_deg(cfg.music_grid.spacing_rad)},
                    {"refine_min_step_rad", cfg.music_grid.refine_min_step_rad},
                    {"refine_max_iterations", cfg.music_grid.refine_max_iterations}};
    doc["refine"] = {{"initial_step_m", cfg.refine.initial_step},
                     {"min_step_m", cfg.refine.min_step},
                     {"max_iterations", cfg.refine.max_iterations}};
    doc["hit_radius_m"] = cfg.hit_radius;
    doc["methods"] = json::array();
    for (Method m : cfg.methods) doc["methods"].push_back(to_string(m));
    doc["noise_variance"] = cfg.noise_variance_mode == NoiseVarianceMode::Known ? "known" : "estimated";
    doc["music_combination_scale"] = to_string(cfg.music_combination_scale);
    doc["matching"] = cfg.matching == MatchingMode::Greedy ? "greedy" : "optimal";
    doc["peak_selection"] = cfg.peak_selection == PeakSelection::Distinct ? "distinct" : "grid";
    doc["threads"] = cfg.threads;
    return doc;
}

ExperimentConfig load_experiment(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    json doc = read_json_file(path);
    for (const auto& o : overrides) apply_override(doc, o);
    return experiment_from_json(doc);
}

json context_to_json(const PerPairContext& ctx) {
    const CMatrix& r = ctx.covariance();
    json re = json::array();
    json im = json::array();
    for (Eigen::Index c = 0; c < r.cols(); ++c) {
        for (Eigen::Index i = 0; i < r.rows(); ++i) {
            re.push_back(r(i, c).real());
            im.push_back(r(i, c).imag());
        }
    }
    json pre;
    pre["angle_pairs"] = json::array();
    for (const auto& ap : ctx.pre_estimates().angle_pairs) pre["angle_pairs"].push_back({ap.aod, ap.aoa});
    pre["spectrum_values"] = ctx.pre_estimates().spectrum_values;
    pre["low_quality"] = ctx.pre_estimates().low_quality;
    return json{{"geometry", pair_geometry_to_json(ctx.geometry())},
                {"covariance", {{"dimension", r.rows()}, {"re", re}, {"im", im}}},
                {"noise_variance", ctx.noise_variance()},
                {"num_subcarriers", ctx.num_subcarriers()},
                {"pre_estimate", pre}};
}

PerPairContext context_from_json(const json& j) {
    try {
        RadarPairGeometry geometry = pair_geometry_from_json(j.at("geometry"));
        const auto& cj = j.at("covariance");
        const auto n = cj.at("dimension").get<Eigen::Index>();
        const auto re = cj.at("re").get<std::vector<double>>();
        const auto im = cj.at("im").get<std::vector<double>>();
        if (re.size() != static_cast<std::size_t>(n * n) || im.size() != re.size()) {
            throw ConfigError("covariance payload has the wrong size");
        }
        CMatrix r(n, n);
        std::size_t idx = 0;
        for (Eigen::Index c = 0; c < n; ++c)
            for (Eigen::Index i = 0; i < n; ++i, ++idx) r(i, c) = {re[idx], im[idx]};
        PreEstimate pre;
        for (const auto& ap : j.at("pre_estimate").at("angle_pairs")) {
            pre.angle_pairs.push_back({ap.at(0).get<double>(), ap.at(1).get<double>()});
        }
        pre.spectrum_values = j.at("pre_estimate").at("spectrum_values").get<std::vector<double>>();
        pre.low_quality = j.at("pre_estimate").at("low_quality").get<bool>();
        return PerPairContext(std::move(geometry), std::move(r), j.at("noise_variance").get<double>(),
                              j.at("num_subcarriers").get<int>(), std::move(pre));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed radar pair context: ") + e.what());
    }
}

}  // namespace mlas
