#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mlas/detection.hpp"
#include "test_util.hpp"

using namespace mlas;
using mlas::testing::exact_context;
using mlas::testing::noiseless_covariance;

namespace {

struct Bump {
    Vec2 center;
    double height;
    double width;
};

double bumps_at(const std::vector<Bump>& bumps, const Vec2& p) {
    double v = 0.0;
    for (const auto& b : bumps) v += b.height * std::exp(-(p - b.center).squaredNorm() / (2.0 * b.width * b.width));
    return v;
}

GridSpec unit_grid() {
    GridSpec g;
    g.x_min = 0.0;
    g.x_max = 10.0;
    g.y_min = 0.0;
    g.y_max = 10.0;
    g.spacing = 0.25;
    return g;
}

LikelihoodMap sample(const std::vector<Bump>& bumps, const GridSpec& grid = unit_grid()) {
    LikelihoodMap map;
    map.grid = grid;
    map.values.resize(grid.nx(), grid.ny());
    for (int i = 0; i < grid.nx(); ++i)
        for (int j = 0; j < grid.ny(); ++j) map.values(i, j) = bumps_at(bumps, grid.point(i, j));
    return map;
}

class BumpObjective : public PeakObjective {
public:
    explicit BumpObjective(std::vector<Bump> bumps) : bumps_(std::move(bumps)) {}
    ScalarField field_from(const Vec2&) const override {
        return [b = bumps_](const Vec2& p) { return bumps_at(b, p); };
    }

private:
    std::vector<Bump> bumps_;
};

bool has_cell(const DetectionSet& set, const Vec2& p) {
    for (const auto& d : set.peaks)
        if ((d.position - p).norm() < 1e-9) return true;
    return false;
}

}  // namespace

TEST(FindPeaks, SingleBump) {
    const LikelihoodMap map = sample({{{4.0, 6.0}, 1.0, 0.8}});
    const DetectionSet set = find_peaks(map, 1);
    ASSERT_EQ(set.size(), 1);
    EXPECT_TRUE(has_cell(set, {4.0, 6.0}));
    EXPECT_FALSE(set.peaks[0].fill);
}

TEST(FindPeaks, EqualBumpsTieBrokenByXThenY) {
    const LikelihoodMap map = sample({{{7.0, 3.0}, 1.0, 0.5}, {{3.0, 7.0}, 1.0, 0.5}});
    const DetectionSet set = find_peaks(map, 2);
    ASSERT_EQ(set.size(), 2);
    EXPECT_EQ(set.peaks[0].position, Vec2(3.0, 7.0));
    EXPECT_EQ(set.peaks[1].position, Vec2(7.0, 3.0));
}

TEST(FindPeaks, ThreeBumpCenters) {
    const std::vector<Bump> bumps{{{2.0, 2.0}, 3.0, 0.6}, {{8.0, 5.0}, 2.0, 0.7}, {{4.5, 8.5}, 1.0, 0.5}};
    const DetectionSet set = find_peaks(sample(bumps), 3);
    ASSERT_EQ(set.size(), 3);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(set.peaks[k].position, bumps[k].center);
}

TEST(FindPeaks, FillRuleKeepsSeparation) {
    const LikelihoodMap map = sample({{{5.0, 5.0}, 1.0, 1.0}});
    const DetectionSet set = find_peaks(map, 3);
    ASSERT_EQ(set.size(), 3);
    EXPECT_FALSE(set.peaks[0].fill);
    for (int a = 0; a < 3; ++a) {
        for (int b = a + 1; b < 3; ++b) {
            const int cheb = std::max(std::abs(set.peaks[a].cell_i - set.peaks[b].cell_i),
                                      std::abs(set.peaks[a].cell_j - set.peaks[b].cell_j));
            EXPECT_GE(cheb, kFillSeparationCells);
        }
    }
    EXPECT_TRUE(set.peaks[1].fill);
    EXPECT_TRUE(set.peaks[2].fill);
}

TEST(FindPeaks, BorderCellIsNotAMaximum) {
    const LikelihoodMap map = sample({{{0.0, 5.0}, 1.0, 0.5}, {{6.0, 6.0}, 0.5, 0.5}});
    const DetectionSet set = find_peaks(map, 1);
    EXPECT_EQ(set.peaks[0].position, Vec2(6.0, 6.0));
}

TEST(FindPeaks, ExcludedCellsIgnoredAndAllExcludedThrows) {
    LikelihoodMap map = sample({{{5.0, 5.0}, 1.0, 1.0}});
    map.values.row(0).setConstant(kExcluded);
    EXPECT_NO_THROW(find_peaks(map, 1));
    map.values.setConstant(kExcluded);
    EXPECT_THROW(find_peaks(map, 1), DetectionError);
    EXPECT_THROW(find_peaks(sample({}), 0), std::invalid_argument);
}

TEST(FindPeaks, FlatMapStillReturnsK) {
    LikelihoodMap map = sample({});
    const DetectionSet set = find_peaks(map, 2);
    EXPECT_EQ(set.size(), 2);
    for (const auto& d : set.peaks) EXPECT_TRUE(d.fill);
}

TEST(RefinePeaks, StationaryPeakStaysPut) {
    const std::vector<Bump> bumps{{{5.0, 5.0}, 1.0, 1.0}};
    const DetectionSet refined = refine_peaks(find_peaks(sample(bumps), 1), BumpObjective(bumps), 0.25);
    EXPECT_LT((refined.peaks[0].position - Vec2(5.0, 5.0)).norm(), 1e-4);
}

TEST(RefinePeaks, OffGridPeakRecoveredAndValueNeverDrops) {
    const std::vector<Bump> bumps{{{4.13, 6.07}, 2.0, 0.7}, {{7.4, 2.2}, 1.0, 0.6}};
    const DetectionSet seeds = find_peaks(sample(bumps), 2);
    const DetectionSet refined = refine_peaks(seeds, BumpObjective(bumps), 0.25);
    ASSERT_EQ(refined.size(), 2);
    EXPECT_LT((refined.peaks[0].position - bumps[0].center).norm(), 1e-3);
    EXPECT_LT((refined.peaks[1].position - bumps[1].center).norm(), 1e-3);
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_GE(refined.peaks[k].value, seeds.peaks[k].value);
        EXPECT_TRUE(refined.peaks[k].refined);
    }
}

TEST(RefinePeaks, FarMoveIsReverted) {
    // The map says (2, 2) but the objective peaks far away.
    const LikelihoodMap map = sample({{{2.0, 2.0}, 1.0, 0.5}});
    const std::vector<Bump> truth{{{6.0, 6.0}, 1.0, 3.0}};
    const DetectionSet refined = refine_peaks(find_peaks(map, 1), BumpObjective(truth), 0.25);
    EXPECT_TRUE(refined.peaks[0].reverted);
    EXPECT_EQ(refined.peaks[0].position, Vec2(2.0, 2.0));
}

TEST(RefinePeaks, GradientVanishesAtRefinedPeak) {
    const std::vector<Bump> bumps{{{3.3, 5.6}, 5.0, 0.8}};
    const BumpObjective obj(bumps);
    const DetectionSet refined = refine_peaks(find_peaks(sample(bumps), 1), obj, 0.25);
    const ValueGradient vg = finite_difference_gradient(obj.field_from({}), refined.peaks[0].position, 1e-5);
    EXPECT_LT(vg.gradient.norm() / 5.0, 1e-3);
}

TEST(RefinePeaks, NoiselessSingleTargetWithinCentimetre) {
    const Vec2 target(0.63, 6.41);
    std::vector<PerPairContext> ctx;
    for (const auto& pair : mlas::testing::two_pairs()) {
        ctx.push_back(exact_context(pair, {target}, noiseless_covariance(pair, {target}, 70 + pair.id)));
    }
    GridSpec grid;
    grid.x_min = -3.0;
    grid.x_max = 3.0;
    grid.y_min = 3.0;
    grid.y_max = 9.0;
    const LikelihoodMap map = combined_map(ctx, grid);
    const DetectionSet refined = refine_peaks(find_peaks(map, 1), ctx, grid.spacing);
    EXPECT_LT((refined.peaks[0].position - target).norm(), 0.01);
}

TEST(DetectPeaks, SkipsMaximaThatClimbOntoAcceptedPeak) {
    // A shoulder next to the main bump forms its own grid maximum but ascends to the main peak.
    const std::vector<Bump> map_bumps{{{5.0, 5.0}, 2.0, 0.6}, {{5.75, 5.0}, 1.9, 0.1}, {{2.0, 8.0}, 1.0, 0.5}};
    const std::vector<Bump> smooth{{{5.0, 5.0}, 2.0, 0.6}, {{2.0, 8.0}, 1.0, 0.5}};
    const LikelihoodMap map = sample(map_bumps);
    const DetectionSet grid_only = refine_peaks(find_peaks(map, 2), BumpObjective(smooth), 0.25);
    const DetectionSet distinct = detect_peaks(map, 2, BumpObjective(smooth));
    ASSERT_EQ(distinct.size(), 2);
    EXPECT_LT((distinct.peaks[0].position - Vec2(5.0, 5.0)).norm(), 1e-3);
    EXPECT_LT((distinct.peaks[1].position - Vec2(2.0, 8.0)).norm(), 1e-3);
    const bool grid_found_second = (grid_only.peaks[0].position - Vec2(2.0, 8.0)).norm() < 1e-3 ||
                                   (grid_only.peaks[1].position - Vec2(2.0, 8.0)).norm() < 1e-3;
    EXPECT_FALSE(grid_found_second);
}

TEST(DetectPeaks, FillsWhenMaximaRunOut) {
    const std::vector<Bump> bumps{{{5.0, 5.0}, 1.0, 1.0}};
    const DetectionSet set = detect_peaks(sample(bumps), 3, BumpObjective(bumps));
    ASSERT_EQ(set.size(), 3);
    for (std::size_t k = 0; k + 1 < 3; ++k) EXPECT_GE(set.peaks[k].value, set.peaks[k + 1].value);
}

TEST(WriteDetectionsCsv, Format) {
    DetectionSet set;
    Detection d;
    d.position = {1.5, 2.0};
    d.value = 3.0;
    d.refined = true;
    set.peaks.push_back(d);
    std::ostringstream os;
    write_detections_csv(os, set);
    EXPECT_EQ(os.str(), "rank,x,y,value,refined_flag\n0,1.5,2,3,1\n");
}
