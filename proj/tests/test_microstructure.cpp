#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fol/microstructure.hpp"

using namespace fol;

namespace {

Mesh grid11() { return build_mesh(11, 11, 1.0, 1.0); }

}  // namespace

TEST(GenerateSamples, DeterministicProperty) {
  const Mesh m = grid11();
  SamplerConfig cfg;
  cfg.seed = 1234;
  const auto a = generate_samples(m, cfg, 20);
  const auto b = generate_samples(m, cfg, 20);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].phase_mask, b[i].phase_mask);
    EXPECT_TRUE(a[i].values == b[i].values);  // bit-identical
  }
}

TEST(GenerateSamples, PhaseClosureProperty) {
  const Mesh m = grid11();
  SamplerConfig cfg;
  cfg.seed = 99;
  for (const auto& f : generate_samples(m, cfg, 50)) {
    ASSERT_EQ(f.values.size(), m.node_count());
    for (Eigen::Index i = 0; i < f.values.size(); ++i) {
      const bool inc = f.phase_mask[static_cast<std::size_t>(i)] != 0;
      EXPECT_EQ(f.values(i), inc ? cfg.k_inc : cfg.k_mat);
    }
  }
}

TEST(GenerateSamples, NoEllipsesGivesAllMatrix) {
  const Mesh m = grid11();
  SamplerConfig cfg;
  cfg.n_ellipses_range = {0, 0};
  const auto fields = generate_samples(m, cfg, 3);
  for (const auto& f : fields) {
    EXPECT_EQ(f.inclusion_count(), 0);
    EXPECT_DOUBLE_EQ(volume_fraction(f), 0.0);
  }
}

TEST(GenerateSamples, RejectsZeroCount) {
  EXPECT_THROW(generate_samples(grid11(), SamplerConfig{}, 0), ValidationError);
}

TEST(GenerateSamples, HistogramSanityAtTrainingScale) {
  // Qualitative diversity check: 4000 default-config samples cover volume
  // fractions from (almost) empty to at least one half.
  const Mesh m = grid11();
  SamplerConfig cfg;
  cfg.seed = 2024;
  double vf_min = 1.0, vf_max = 0.0;
  for (const auto& f : generate_samples(m, cfg, 4000)) {
    const double vf = volume_fraction(f);
    vf_min = std::min(vf_min, vf);
    vf_max = std::max(vf_max, vf);
  }
  EXPECT_LE(vf_min, 0.02);
  EXPECT_GE(vf_max, 0.5);
}

TEST(RasterizeEllipseRing, CircleMatchesBruteForce) {
  const Mesh m = grid11();
  const auto mask = rasterize_ellipse_ring(m, 0.5, 0.5, 0.25, 0.25, 0.0, 0.0);
  int count = 0;
  for (int i = 0; i < m.node_count(); ++i) {
    const double dx = m.node_coords[static_cast<std::size_t>(i)][0] - 0.5;
    const double dy = m.node_coords[static_cast<std::size_t>(i)][1] - 0.5;
    const bool inside = dx * dx + dy * dy <= 0.25 * 0.25;
    EXPECT_EQ(mask[static_cast<std::size_t>(i)] != 0, inside) << "node " << i;
    count += inside;
  }
  EXPECT_EQ(count, 21);  // grid offsets with dx^2+dy^2 <= 6.25 in units of 0.1
}

TEST(RasterizeEllipseRing, RingExcludesCenter) {
  const Mesh m = grid11();
  const auto mask = rasterize_ellipse_ring(m, 0.5, 0.5, 0.25, 0.25, 0.6, 0.0);
  const auto center = static_cast<std::size_t>(m.node_index(5, 5));
  EXPECT_EQ(mask[center], 0);  // elliptical radius 0 < inner scale
}

TEST(RasterizeEllipseRing, QuarterTurnSwapsAxes) {
  const Mesh m = grid11();
  const auto rotated =
      rasterize_ellipse_ring(m, 0.5, 0.5, 0.3, 0.1, 0.0, std::numbers::pi / 2);
  const auto swapped = rasterize_ellipse_ring(m, 0.5, 0.5, 0.1, 0.3, 0.0, 0.0);
  EXPECT_EQ(rotated, swapped);
}

TEST(RasterizeEllipseRing, RotatedEllipseHandChecked) {
  // a=0.3, b=0.1, rotation pi/4: (0.6,0.6) lies on the long axis (r^2 = 2/9),
  // (0.6,0.4) on the short axis (r^2 = 2).
  const Mesh m = grid11();
  const auto mask =
      rasterize_ellipse_ring(m, 0.5, 0.5, 0.3, 0.1, 0.0, std::numbers::pi / 4);
  EXPECT_EQ(mask[static_cast<std::size_t>(m.node_index(6, 6))], 1);
  EXPECT_EQ(mask[static_cast<std::size_t>(m.node_index(6, 4))], 0);
}

TEST(VolumeFraction, CountsNodes) {
  const Mesh m = grid11();
  std::vector<std::uint8_t> mask(121, 0);
  EXPECT_DOUBLE_EQ(volume_fraction(field_from_mask(mask, 1.0, 0.01)), 0.0);
  std::fill(mask.begin(), mask.end(), 1);
  EXPECT_DOUBLE_EQ(volume_fraction(field_from_mask(mask, 1.0, 0.01)), 1.0);
  std::fill(mask.begin(), mask.end(), 0);
  for (int i = 0; i < 12; ++i) mask[static_cast<std::size_t>(i)] = 1;
  EXPECT_NEAR(volume_fraction(field_from_mask(mask, 1.0, 0.01)), 12.0 / 121.0, 1e-15);
}

TEST(Dispersion, FewNodesGiveZero) {
  const Mesh m = grid11();
  std::vector<std::uint8_t> mask(121, 0);
  EXPECT_DOUBLE_EQ(dispersion(field_from_mask(mask, 1.0, 0.01), m), 0.0);
  mask[60] = 1;
  EXPECT_DOUBLE_EQ(dispersion(field_from_mask(mask, 1.0, 0.01), m), 0.0);
}

TEST(Dispersion, OppositeCornersGiveOne) {
  const Mesh m = grid11();
  std::vector<std::uint8_t> mask(121, 0);
  mask[static_cast<std::size_t>(m.node_index(0, 0))] = 1;
  mask[static_cast<std::size_t>(m.node_index(10, 10))] = 1;
  EXPECT_NEAR(dispersion(field_from_mask(mask, 1.0, 0.01), m), 1.0, 1e-12);
}

TEST(Dispersion, FourCornersGiveOne) {
  // Symmetric corner set: RMS distance from the centroid is the half-diagonal
  // regardless of traversal order.
  const Mesh m = grid11();
  std::vector<std::uint8_t> mask(121, 0);
  mask[static_cast<std::size_t>(m.node_index(0, 0))] = 1;
  mask[static_cast<std::size_t>(m.node_index(10, 0))] = 1;
  mask[static_cast<std::size_t>(m.node_index(0, 10))] = 1;
  mask[static_cast<std::size_t>(m.node_index(10, 10))] = 1;
  EXPECT_NEAR(dispersion(field_from_mask(mask, 1.0, 0.01), m), 1.0, 1e-12);
}

TEST(BuiltinTestSuite, EightFieldsWithInvariants) {
  const Mesh m = grid11();
  const auto suite = builtin_test_suite(m, 1.0, 0.01);
  ASSERT_EQ(suite.size(), 8u);
  ASSERT_EQ(builtin_test_suite_names().size(), 8u);
  for (const auto& f : suite) {
    ASSERT_EQ(f.values.size(), 121);
    for (Eigen::Index i = 0; i < f.values.size(); ++i) {
      const bool inc = f.phase_mask[static_cast<std::size_t>(i)] != 0;
      EXPECT_EQ(f.values(i), inc ? 0.01 : 1.0);
    }
  }
}

TEST(BuiltinTestSuite, PlusShapeVolumeFraction) {
  const Mesh m = grid11();
  const auto suite = builtin_test_suite(m, 1.0, 0.01);
  EXPECT_NEAR(volume_fraction(suite[4]), 21.0 / 121.0, 1e-15);
}

TEST(BuiltinTestSuite, SymmetricFieldsAreInvariantUnderTheirReflection) {
  const Mesh m = grid11();
  const auto suite = builtin_test_suite(m, 1.0, 0.01);
  auto at = [&](const ConductivityField& f, int ix, int iy) {
    return f.phase_mask[static_cast<std::size_t>(m.node_index(ix, iy))];
  };
  for (int iy = 0; iy < 11; ++iy) {
    for (int ix = 0; ix < 11; ++ix) {
      EXPECT_EQ(at(suite[4], ix, iy), at(suite[4], 10 - ix, iy));      // plus: x mirror
      EXPECT_EQ(at(suite[4], ix, iy), at(suite[4], ix, 10 - iy));      // plus: y mirror
      EXPECT_EQ(at(suite[5], ix, iy), at(suite[5], iy, ix));           // X: transpose
      EXPECT_EQ(at(suite[6], ix, iy), at(suite[6], 10 - ix, iy));      // frame: x mirror
      EXPECT_EQ(at(suite[6], ix, iy), at(suite[6], ix, 10 - iy));      // frame: y mirror
      EXPECT_EQ(at(suite[7], ix, iy), at(suite[7], iy, ix));           // band: transpose
    }
  }
}

TEST(BuiltinTestSuite, RequiresReferenceGrid) {
  EXPECT_THROW(builtin_test_suite(build_mesh(5, 5, 1.0, 1.0), 1.0, 0.01),
               ValidationError);
}

TEST(DownsampleImage, OnePixelPerNodeIsIdentity) {
  const Mesh m = grid11();
  GrayImage img;
  img.width = 11;
  img.height = 11;
  img.maxval = 255;
  img.pixels.assign(121, 255);
  // dark pixel = inclusion; paint a few
  img.pixels[0] = 0;                     // top-left pixel -> node (0, 10)
  img.pixels[10 * 11 + 10] = 0;          // bottom-right pixel -> node (10, 0)
  img.pixels[5 * 11 + 3] = 0;            // row 5, col 3 -> node (3, 5)
  const ConductivityField f = downsample_image(img, m, 1.0, 0.01);
  EXPECT_EQ(f.inclusion_count(), 3);
  EXPECT_EQ(f.phase_mask[static_cast<std::size_t>(m.node_index(0, 10))], 1);
  EXPECT_EQ(f.phase_mask[static_cast<std::size_t>(m.node_index(10, 0))], 1);
  EXPECT_EQ(f.phase_mask[static_cast<std::size_t>(m.node_index(3, 5))], 1);
}

TEST(DownsampleImage, UniformInclusionImage) {
  const Mesh m = grid11();
  GrayImage img;
  img.width = 64;
  img.height = 32;
  img.maxval = 255;
  img.pixels.assign(64 * 32, 0);
  const ConductivityField f = downsample_image(img, m, 1.0, 0.01);
  EXPECT_EQ(f.inclusion_count(), m.node_count());
}

TEST(DownsampleImage, BlockImageMatchesBruteForceTiles) {
  // 110x110 image with a 30x30 dark block in the top-left corner; compare
  // against an independent per-pixel nearest-node enumeration (ties to the
  // larger index, matching the documented rule).
  const Mesh m = grid11();
  GrayImage img;
  img.width = 110;
  img.height = 110;
  img.maxval = 255;
  img.pixels.assign(110 * 110, 255);
  for (int r = 0; r < 30; ++r)
    for (int c = 0; c < 30; ++c) img.pixels[static_cast<std::size_t>(r) * 110 + c] = 0;

  auto nearest = [](int pixel, int extent, int n) {
    int best = 0;
    long long best_dist = -1;
    for (int i = 0; i < n; ++i) {
      // |pixel*(n-1) - i*(extent-1)| in exact integer arithmetic
      const long long d = std::llabs(static_cast<long long>(pixel) * (n - 1) -
                                     static_cast<long long>(i) * (extent - 1));
      if (best_dist < 0 || d < best_dist || d == best_dist) {
        best_dist = d;
        best = i;
      }
    }
    return best;
  };
  std::vector<int> inc(121, 0), tot(121, 0);
  for (int r = 0; r < 110; ++r)
    for (int c = 0; c < 110; ++c) {
      const int iy = 10 - nearest(r, 110, 11);
      const int ix = nearest(c, 110, 11);
      const auto node = static_cast<std::size_t>(m.node_index(ix, iy));
      ++tot[node];
      inc[node] += img.pixels[static_cast<std::size_t>(r) * 110 + c] == 0;
    }

  const ConductivityField f = downsample_image(img, m, 1.0, 0.01);
  for (std::size_t i = 0; i < 121; ++i)
    EXPECT_EQ(f.phase_mask[i] != 0, 2 * inc[i] > tot[i]) << "node " << i;
  EXPECT_GT(f.inclusion_count(), 0);
  EXPECT_LT(f.inclusion_count(), 121);
}

TEST(DownsampleImage, RejectsImagesSmallerThanGrid) {
  const Mesh m = grid11();
  GrayImage img;
  img.width = 5;
  img.height = 20;
  img.pixels.assign(100, 0);
  EXPECT_THROW(downsample_image(img, m, 1.0, 0.01), ValidationError);
}
