#include "mlas/detection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <ostream>

namespace mlas {

namespace {

struct Cell {
    int i;
    int j;
    double value;
};

// Descending value; equal values ordered by x then y.
bool cell_order(const Cell& a, const Cell& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
}

// Border cells lack a full neighbourhood and never qualify.
bool strict_local_max(const Eigen::MatrixXd& v, int i, int j) {
    if (i < 1 || j < 1 || i + 1 >= v.rows() || j + 1 >= v.cols()) return false;
    const double c = v(i, j);
    for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
            if (di == 0 && dj == 0) continue;
            const int ii = i + di;
            const int jj = j + dj;
            const double n = v(ii, jj);
            if (!std::isfinite(n)) continue;
            if (!(c > n)) return false;
        }
    }
    return true;
}

}  // namespace

std::vector<Vec2> DetectionSet::positions() const {
    std::vector<Vec2> out;
    out.reserve(peaks.size());
    for (const auto& p : peaks) out.push_back(p.position);
    return out;
}

namespace {

struct Scan {
    std::vector<Cell> finite;
    std::vector<Cell> maxima;
};

Scan scan_map(const LikelihoodMap& map, int k) {
    if (k < 1) throw std::invalid_argument("find_peaks needs K >= 1");
    const auto& v = map.values;
    Scan s;
    for (int i = 0; i < v.rows(); ++i) {
        for (int j = 0; j < v.cols(); ++j) {
            if (!std::isfinite(v(i, j))) continue;
            s.finite.push_back({i, j, v(i, j)});
            if (strict_local_max(v, i, j)) s.maxima.push_back({i, j, v(i, j)});
        }
    }
    if (s.finite.empty()) throw DetectionError("likelihood map has no finite cell");
    if (static_cast<int>(s.finite.size()) < k) throw DetectionError("likelihood map has fewer than K finite cells");
    std::sort(s.maxima.begin(), s.maxima.end(), cell_order);
    std::sort(s.finite.begin(), s.finite.end(), cell_order);
    return s;
}

Detection make_detection(const LikelihoodMap& map, const Cell& c, bool fill) {
    Detection d;
    d.position = map.grid.point(c.i, c.j);
    d.value = c.value;
    d.cell_i = c.i;
    d.cell_j = c.j;
    d.fill = fill;
    return d;
}

// Fill cells, returned in the order they were chosen.
std::vector<Detection> fill_cells(const LikelihoodMap& map, const Scan& s, const std::vector<Detection>& taken,
                                  int missing) {
    std::vector<Detection> added;
    auto within = [&](const Cell& c, int sep) {
        auto near = [&](const Detection& d) {
            return std::max(std::abs(d.cell_i - c.i), std::abs(d.cell_j - c.j)) < sep;
        };
        return std::any_of(taken.begin(), taken.end(), near) || std::any_of(added.begin(), added.end(), near);
    };
    for (int sep : {kFillSeparationCells, 1}) {
        for (const auto& c : s.finite) {
            if (static_cast<int>(added.size()) >= missing) break;
            if (!within(c, sep)) added.push_back(make_detection(map, c, true));
        }
    }
    return added;
}

AscentOptions ascent_options(const RefineOptions& options) {
    AscentOptions a;
    a.initial_step = options.initial_step;
    a.min_step = options.min_step;
    a.max_iterations = options.max_iterations;
    a.gradient_step = options.gradient_step;
    return a;
}

void sort_by_value(DetectionSet& set) {
    std::stable_sort(set.peaks.begin(), set.peaks.end(),
                     [](const Detection& a, const Detection& b) { return a.value > b.value; });
}

}  // namespace

DetectionSet find_peaks(const LikelihoodMap& map, int k) {
    const Scan s = scan_map(map, k);
    DetectionSet out;
    for (const auto& c : s.maxima) {
        if (out.size() >= k) break;
        out.peaks.push_back(make_detection(map, c, false));
    }
    if (out.size() < k) {
        for (auto& d : fill_cells(map, s, out.peaks, k - out.size())) out.peaks.push_back(d);
    }
    return out;
}

ScalarField CombinedLikelihoodObjective::field_from(const Vec2& seed) const {
    return frozen_combined_field(contexts_, active_targets(contexts_, seed));
}

namespace {

struct Ascended {
    Vec2 end;
    double value;
    bool finite;
};

Ascended ascend(const Detection& d, const PeakObjective& objective, const AscentOptions& ascent) {
    const AscentResult r = gradient_ascent(objective.field_from(d.position), d.position, ascent);
    return {r.position, r.value, std::isfinite(r.value) && r.position.allFinite()};
}

void apply(Detection& d, const Ascended& a, double max_shift) {
    if (!a.finite || (a.end - d.position).norm() > max_shift) {
        d.reverted = true;
        d.refined = false;
        return;
    }
    d.position = a.end;
    d.value = std::max(d.value, a.value);
    d.refined = true;
}

}  // namespace

DetectionSet refine_peaks(const DetectionSet& detections, const PeakObjective& objective, double grid_spacing,
                          const RefineOptions& options) {
    const double max_shift = grid_spacing * std::sqrt(2.0) + 1e-12;
    const AscentOptions ascent = ascent_options(options);
    DetectionSet out = detections;
    for (auto& d : out.peaks) apply(d, ascend(d, objective, ascent), max_shift);
    sort_by_value(out);
    return out;
}

DetectionSet detect_peaks(const LikelihoodMap& map, int k, const PeakObjective& objective,
                          const RefineOptions& options) {
    const Scan s = scan_map(map, k);
    const double spacing = map.grid.spacing;
    const double max_shift = spacing * std::sqrt(2.0) + 1e-12;
    const AscentOptions ascent = ascent_options(options);

    DetectionSet out;
    for (const auto& c : s.maxima) {
        if (out.size() >= k) break;
        Detection d = make_detection(map, c, false);
        const Ascended a = ascend(d, objective, ascent);
        if (a.finite) {
            const bool duplicate = std::any_of(out.peaks.begin(), out.peaks.end(), [&](const Detection& p) {
                return (p.position - a.end).norm() < spacing;
            });
            if (duplicate) continue;
        }
        const bool on_map = a.end.x() >= map.grid.x_min && a.end.x() <= map.grid.x_max &&
                            a.end.y() >= map.grid.y_min && a.end.y() <= map.grid.y_max;
        apply(d, a, on_map ? std::numeric_limits<double>::infinity() : max_shift);
        out.peaks.push_back(d);
    }
    if (out.size() < k) {
        for (auto& d : fill_cells(map, s, out.peaks, k - out.size())) {
            apply(d, ascend(d, objective, ascent), max_shift);
            out.peaks.push_back(d);
        }
    }
    sort_by_value(out);
    return out;
}

DetectionSet refine_peaks(const DetectionSet& detections, std::span<const PerPairContext> contexts,
                          double grid_spacing, const RefineOptions& options) {
    return refine_peaks(detections, CombinedLikelihoodObjective(contexts), grid_spacing, options);
}

void write_detections_csv(std::ostream& os, const DetectionSet& detections) {
    os << "rank,x,y,value,refined_flag\n" << std::setprecision(17);
    for (std::size_t r = 0; r < detections.peaks.size(); ++r) {
        const auto& d = detections.peaks[r];
        os << r << ',' << d.position.x() << ',' << d.position.y() << ',' << d.value << ','
           << (d.refined ? 1 : 0) << '\n';
    }
}

}  // namespace mlas
