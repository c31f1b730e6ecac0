#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support.hpp"
#include "waapo/errors.hpp"
#include "waapo/grid.hpp"

using namespace waapo;
using waapo::testing::random_grid;

namespace {

StateGrid slice_grid(const std::vector<std::vector<double>>& rows) {
    StateGrid g(GridShape(rows.size(), rows[0].size(), 1));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) g(i, j, 0) = rows[i][j];
    }
    return g;
}

// Written from the definition, independent of the library loops.
double tv_oracle(const std::vector<std::vector<double>>& v, bool wrap_lat, bool wrap_lon) {
    const std::size_t L = v.size(), M = v[0].size();
    double sum = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t j = 0; j < M; ++j) {
            if (i + 1 < L) sum += std::fabs(v[i + 1][j] - v[i][j]);
            else if (wrap_lat && L > 1) sum += std::fabs(v[0][j] - v[i][j]);
            if (j + 1 < M) sum += std::fabs(v[i][j + 1] - v[i][j]);
            else if (wrap_lon && M > 1) sum += std::fabs(v[i][0] - v[i][j]);
        }
    }
    return sum;
}

}  // namespace

TEST(GridShape, RejectsZeroDimensions) {
    EXPECT_THROW(GridShape(0, 4, 4), ArgumentError);
    EXPECT_THROW(GridShape(4, 0, 4), ArgumentError);
    EXPECT_THROW(GridShape(4, 4, 0), ArgumentError);
}

TEST(GridShape, FullResolutionIndexing) {
    const GridShape s(720, 1440, 20);
    EXPECT_EQ(s.size(), std::size_t{720} * 1440 * 20);
    EXPECT_EQ(s.index(719, 1439, 19), s.size() - 1);
    EXPECT_EQ(GridShape().lat, 1u);
}

TEST(GridShape, RejectsOverflow) {
    const std::size_t big = std::numeric_limits<std::size_t>::max() / 2;
    EXPECT_THROW(GridShape(big, 4, 4), ArgumentError);
}

TEST(StateGrid, ValueCountMustMatchShape) {
    EXPECT_THROW(StateGrid(GridShape(2, 2, 1), std::vector<double>(3)), ShapeError);
    EXPECT_THROW(StateGrid(GridShape(2, 2, 1)) + StateGrid(GridShape(2, 2, 2)), ShapeError);
}

TEST(FrobeniusNorm, Examples) {
    EXPECT_EQ(frobenius_norm(StateGrid(GridShape(3, 5, 2))), 0.0);
    EXPECT_EQ(frobenius_norm(StateGrid(GridShape(1, 1, 4), {3, 0, 4, 0})), 5.0);
    const GridShape s(4, 6, 3);
    EXPECT_NEAR(frobenius_norm(StateGrid(s, -2.5)), 2.5 * std::sqrt(72.0), 1e-12);
}

TEST(FrobeniusNorm, AbsoluteHomogeneity) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const StateGrid g = random_grid(GridShape(5, 7, 3), seed);
        const double a = (static_cast<double>(seed) - 10.0) * 0.37;
        EXPECT_NEAR(frobenius_norm(a * g), std::fabs(a) * frobenius_norm(g), 1e-12 * (1 + frobenius_norm(g)));
    }
}

TEST(ChannelInfNorm, Examples) {
    StateGrid g(GridShape(3, 3, 2));
    EXPECT_EQ(channel_inf_norm(g, 0), 0.0);
    g(1, 2, 1) = -7.5;
    g(0, 0, 1) = 3.0;
    g(2, 2, 0) = 100.0;  // other channel must not leak in
    EXPECT_EQ(channel_inf_norm(g, 1), 7.5);
    const StateGrid one(GridShape(1, 1, 1), 0.125);
    EXPECT_EQ(channel_inf_norm(one, 0), 0.125);
    EXPECT_THROW(channel_inf_norm(g, 2), RangeError);
}

TEST(ChannelInfNorm, ArgmaxTakesFirstTie) {
    StateGrid g(GridShape(2, 3, 1));
    g(0, 2, 0) = -4.0;
    g(1, 1, 0) = 4.0;
    EXPECT_EQ(channel_inf_argmax(g, 0), 2u);
}

TEST(ChannelInfNorm, BoundedByFrobeniusForSingleChannelSupport) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        StateGrid g = random_grid(GridShape(4, 5, 3), seed);
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (k % 3 != 1) g[k] = 0.0;
        }
        EXPECT_LE(channel_inf_norm(g, 1), frobenius_norm(g));
    }
}

TEST(TotalVariation, ConstantSliceIsZero) {
    EXPECT_EQ(total_variation(StateGrid(GridShape(4, 5, 1), 3.25), 0), 0.0);
}

TEST(TotalVariation, TwoByTwoExamples) {
    const StateGrid g = slice_grid({{0, 1}, {2, 3}});
    EXPECT_EQ(total_variation(g, 0, LonBoundary::clamped), 6.0);
    EXPECT_EQ(tv_oracle(waapo::testing::slice(g, 0), false, false), 6.0);
    // Longitude wraparound adds |0-1| + |2-3| on top of the clamped sum.
    EXPECT_EQ(total_variation(g, 0), 8.0);
    EXPECT_EQ(tv_oracle(waapo::testing::slice(g, 0), false, true), 8.0);
    // Wrapping the first axis instead adds |0-2| + |1-3|; 10 is what the
    // transposed slice gives under the longitude-periodic convention.
    EXPECT_EQ(tv_oracle(waapo::testing::slice(g, 0), true, false), 10.0);
    EXPECT_EQ(total_variation(slice_grid({{0, 2}, {1, 3}}), 0), 10.0);
}

TEST(TotalVariation, MatchesLoopOracle) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const StateGrid g = random_grid(GridShape(3 + seed % 4, 2 + seed % 5, 2), seed);
        for (std::size_t n = 0; n < 2; ++n) {
            const auto v = waapo::testing::slice(g, n);
            EXPECT_NEAR(total_variation(g, n), tv_oracle(v, false, true), 1e-12);
            EXPECT_NEAR(total_variation(g, n, LonBoundary::clamped), tv_oracle(v, false, false), 1e-12);
        }
    }
}

TEST(TotalVariation, InvariantUnderConstantShift) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const StateGrid g = random_grid(GridShape(6, 8, 1), seed);
        const StateGrid shifted = g + StateGrid(g.shape(), 17.0 - static_cast<double>(seed));
        EXPECT_NEAR(total_variation(shifted, 0), total_variation(g, 0), 1e-10);
    }
}

TEST(TotalVariation, ZeroOnlyForConstantSlices) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        StateGrid g(GridShape(5, 5, 1), 2.0);
        g[seed % 25] = 2.0 + 1e-9;
        EXPECT_GT(total_variation(g, 0), 0.0);
        EXPECT_GT(total_variation(g, 0, LonBoundary::clamped), 0.0);
    }
    EXPECT_THROW(total_variation(StateGrid(GridShape(2, 2, 1)), 1), RangeError);
}

TEST(TotalVariation, SubgradientMatchesFiniteDifferences) {
    const StateGrid g = random_grid(GridShape(4, 5, 2), 3);
    for (LonBoundary lon : {LonBoundary::periodic, LonBoundary::clamped}) {
        StateGrid grad(g.shape());
        accumulate_tv_subgradient(g, 1, 2.0, grad, lon);
        for (std::size_t k = 0; k < g.size(); ++k) {
            StateGrid up = g, down = g;
            up[k] += 1e-7;
            down[k] -= 1e-7;
            const double fd = 2.0 * (total_variation(up, 1, lon) - total_variation(down, 1, lon)) / 2e-7;
            EXPECT_NEAR(grad[k], fd, 1e-6) << "k=" << k;
        }
    }
}

TEST(TotalVariation, SubgradientSignOfZeroIsZero) {
    StateGrid grad(GridShape(3, 3, 1));
    accumulate_tv_subgradient(StateGrid(GridShape(3, 3, 1), 1.0), 0, 1.0, grad);
    EXPECT_EQ(frobenius_norm(grad), 0.0);
}

TEST(PatchMask, Examples) {
    const SpatialMask full = make_patch_mask(4, 5, 0, 0, 4, 5);
    EXPECT_EQ(full, SpatialMask(4, 5, 1.0));

    const SpatialMask m = make_patch_mask(4, 4, 0, 0, 2, 3);
    EXPECT_EQ(m.count_nonzero(), 6u);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(m(i, j), (i < 2 && j < 3) ? 1.0 : 0.0);
    }
    EXPECT_TRUE(m.is_binary());
}

TEST(PatchMask, FullResolutionGeometryCount) {
    // 1440 x 720 grid with the patch indices on the 1440-point axis first.
    const SpatialMask m = make_patch_mask(1440, 720, 1100, 300, 200, 300);
    EXPECT_EQ(m.count_nonzero(), 60000u);
    EXPECT_EQ(m.count_nonzero(), 200u * 300u);
    // Read against a 720-point first axis the same patch does not fit.
    EXPECT_THROW(make_patch_mask(720, 1440, 1100, 300, 200, 300), BoundsError);
}

TEST(PatchMask, RejectsOutOfBounds) {
    EXPECT_THROW(make_patch_mask(4, 4, 3, 0, 2, 1), BoundsError);
    EXPECT_THROW(make_patch_mask(4, 4, 0, 2, 1, 3), BoundsError);
    EXPECT_THROW(make_patch_mask(4, 4, 5, 0, 1, 1), BoundsError);
    EXPECT_THROW(make_patch_mask(4, 4, 0, 0, 0, 1), ArgumentError);
}

TEST(SmoothPatchMask, TaperZeroIsIdentity) {
    const SpatialMask m = make_patch_mask(6, 7, 2, 3, 2, 2);
    EXPECT_EQ(smooth_patch_mask(m, 0), m);
}

TEST(SmoothPatchMask, OneCellTaperOne) {
    const SpatialMask m = smooth_patch_mask(make_patch_mask(5, 5, 2, 2, 1, 1), 1);
    EXPECT_EQ(m(2, 2), 1.0);
    for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
            if (di == 0 && dj == 0) continue;
            EXPECT_NEAR(m(2 + di, 2 + dj), 0.5, 1e-15);
        }
    }
    EXPECT_EQ(m(0, 0), 0.0);
    EXPECT_EQ(m(4, 2), 0.0);
}

TEST(SmoothPatchMask, AllOnesUnchanged) {
    EXPECT_EQ(smooth_patch_mask(SpatialMask(4, 6, 1.0), 3), SpatialMask(4, 6, 1.0));
}

TEST(SpatialMask, RejectsValuesOutsideUnitInterval) {
    EXPECT_THROW(SpatialMask(1, 2, std::vector<double>{0.5, 1.5}), ArgumentError);
    EXPECT_THROW(SpatialMask(1, 2, std::vector<double>{-0.1, 1.0}), ArgumentError);
    EXPECT_THROW(SpatialMask(1, 2, std::vector<double>{std::nan(""), 1.0}), ArgumentError);
    EXPECT_THROW(SpatialMask(1, 2, std::vector<double>{1.0}), ShapeError);
}

TEST(SpatialMask, ApplyTwiceIsIdempotentForBinaryMasks) {
    const SpatialMask m = make_patch_mask(5, 6, 1, 2, 3, 3);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const StateGrid g = random_grid(GridShape(5, 6, 3), seed);
        const StateGrid once = apply_mask(g, m);
        EXPECT_TRUE(waapo::testing::bitwise_equal(apply_mask(once, m), once));
    }
}

TEST(ChannelSet, ValidatesAndDeduplicates) {
    EXPECT_THROW(ChannelSet(4, {4}), RangeError);
    const ChannelSet c(4, {3, 1, 3});
    EXPECT_EQ(c.members(), (std::vector<std::size_t>{1, 3}));
    EXPECT_TRUE(c.contains(3));
    EXPECT_FALSE(c.contains(0));
    EXPECT_EQ(ChannelSet::all(3).size(), 3u);
}
