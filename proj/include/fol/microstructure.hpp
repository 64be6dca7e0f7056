#pragma once
#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "fol/errors.hpp"
#include "fol/mesh.hpp"
#include "fol/rng.hpp"

namespace fol {

/// Nodal two-phase conductivity map: values[i] is k_inc exactly where
/// phase_mask[i] is set, k_mat elsewhere.
struct ConductivityField {
  Eigen::VectorXd values;
  std::vector<std::uint8_t> phase_mask;

  int inclusion_count() const {
    int c = 0;
    for (auto m : phase_mask) c += (m != 0);
    return c;
  }
};

/// Parameter ranges for the random ellipse-ring sampler. Defaults reproduce
/// the full variety of shapes (solid ellipses, rings, overlapping unions)
/// at the 100:1 phase contrast.
struct SamplerConfig {
  double k_mat = 1.0;
  double k_inc = 0.01;
  std::array<int, 2> n_ellipses_range{1, 3};
  std::array<double, 2> center_x_range{0.2, 0.8};
  std::array<double, 2> center_y_range{0.2, 0.8};
  std::array<double, 2> semi_axis_a_range{0.1, 0.45};
  std::array<double, 2> semi_axis_b_range{0.1, 0.35};
  std::array<double, 2> inner_scale_range{0.0, 0.7};
  std::array<double, 2> rotation_range{0.0, std::numbers::pi};
  std::uint64_t seed = 0;
  bool no_rings = false;  // ablation subset: every inner radius forced to 0

  void validate() const {
    if (!(k_mat > k_inc && k_inc > 0.0))
      throw ValidationError("SamplerConfig: require k_mat > k_inc > 0");
    if (n_ellipses_range[0] < 0 || n_ellipses_range[1] < n_ellipses_range[0])
      throw ValidationError("SamplerConfig: bad n_ellipses_range");
    auto ordered = [](const std::array<double, 2>& r) { return r[1] >= r[0]; };
    if (!ordered(center_x_range) || !ordered(center_y_range) ||
        !ordered(semi_axis_a_range) || !ordered(semi_axis_b_range) ||
        !ordered(inner_scale_range) || !ordered(rotation_range))
      throw ValidationError("SamplerConfig: empty parameter range");
    if (semi_axis_a_range[0] <= 0.0 || semi_axis_b_range[0] <= 0.0)
      throw ValidationError("SamplerConfig: semi-axes must be positive");
    if (inner_scale_range[0] < 0.0 || inner_scale_range[1] >= 1.0)
      throw ValidationError("SamplerConfig: inner scale must lie in [0,1)");
  }
};

struct SampleStats {
  double volume_fraction = 0.0;
  double dispersion = 0.0;
};

/// Marks the nodes whose elliptical radius r satisfies inner_scale <= r <= 1,
/// where r^2 = (x'/a)^2 + (y'/b)^2 and (x',y') is the node offset from
/// `center` rotated by -rotation.
inline void rasterize_ellipse_ring(const Mesh& mesh, double cx, double cy,
                                   double a, double b, double inner_scale,
                                   double rotation,
                                   std::vector<std::uint8_t>& mask) {
  if (!(a > 0.0 && b > 0.0)) throw ValidationError("rasterize_ellipse_ring: semi-axes must be positive");
  if (!(inner_scale >= 0.0 && inner_scale < 1.0))
    throw ValidationError("rasterize_ellipse_ring: inner scale must lie in [0,1)");
  const double c = std::cos(rotation);
  const double s = std::sin(rotation);
  const double inner2 = inner_scale * inner_scale;
  for (std::size_t i = 0; i < mesh.node_coords.size(); ++i) {
    const double dx = mesh.node_coords[i][0] - cx;
    const double dy = mesh.node_coords[i][1] - cy;
    const double xr = c * dx + s * dy;
    const double yr = -s * dx + c * dy;
    const double r2 = (xr / a) * (xr / a) + (yr / b) * (yr / b);
    if (r2 >= inner2 && r2 <= 1.0) mask[i] = 1;
  }
}

inline std::vector<std::uint8_t> rasterize_ellipse_ring(const Mesh& mesh, double cx,
                                                        double cy, double a, double b,
                                                        double inner_scale,
                                                        double rotation) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(mesh.node_count()), 0);
  rasterize_ellipse_ring(mesh, cx, cy, a, b, inner_scale, rotation, mask);
  return mask;
}

inline ConductivityField field_from_mask(std::vector<std::uint8_t> mask,
                                         double k_mat, double k_inc) {
  ConductivityField f;
  f.values.resize(static_cast<Eigen::Index>(mask.size()));
  for (std::size_t i = 0; i < mask.size(); ++i)
    f.values(static_cast<Eigen::Index>(i)) = mask[i] ? k_inc : k_mat;
  f.phase_mask = std::move(mask);
  return f;
}

/// One collocation field: a union of randomly drawn ellipse rings. The draw
/// order per ellipse is fixed (cx, cy, a, b, inner, rotation) so the
/// `no_rings` variant produces the same shapes minus the holes.
inline ConductivityField generate_sample(const Mesh& mesh, const SamplerConfig& cfg,
                                         std::uint64_t sample_index) {
  SplitMix64 rng = derive_stream(cfg.seed, sample_index);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(mesh.node_count()), 0);
  const int n = rng.uniform_int(cfg.n_ellipses_range[0], cfg.n_ellipses_range[1]);
  for (int e = 0; e < n; ++e) {
    const double cx = rng.uniform(cfg.center_x_range[0], cfg.center_x_range[1]);
    const double cy = rng.uniform(cfg.center_y_range[0], cfg.center_y_range[1]);
    const double a = rng.uniform(cfg.semi_axis_a_range[0], cfg.semi_axis_a_range[1]);
    const double b = rng.uniform(cfg.semi_axis_b_range[0], cfg.semi_axis_b_range[1]);
    double inner = rng.uniform(cfg.inner_scale_range[0], cfg.inner_scale_range[1]);
    if (cfg.no_rings) inner = 0.0;
    const double rot = rng.uniform(cfg.rotation_range[0], cfg.rotation_range[1]);
    rasterize_ellipse_ring(mesh, cx, cy, a, b, inner, rot, mask);
  }
  return field_from_mask(std::move(mask), cfg.k_mat, cfg.k_inc);
}

/// Deterministic for a fixed config seed; sample i only consumes the
/// (seed, i) stream, so any subset can be regenerated independently.
inline std::vector<ConductivityField> generate_samples(const Mesh& mesh,
                                                       const SamplerConfig& cfg,
                                                       int count) {
  if (count < 1) throw ValidationError("generate_samples: count must be >= 1");
  cfg.validate();
  std::vector<ConductivityField> out(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < count; ++i)
    out[static_cast<std::size_t>(i)] =
        generate_sample(mesh, cfg, static_cast<std::uint64_t>(i));
  return out;
}

inline double volume_fraction(const ConductivityField& field) {
  if (field.phase_mask.empty()) return 0.0;
  return static_cast<double>(field.inclusion_count()) /
         static_cast<double>(field.phase_mask.size());
}

/// RMS distance of the inclusion nodes from their centroid, normalized by the
/// domain half-diagonal; 0 for fewer than 2 inclusion nodes.
inline double dispersion(const ConductivityField& field, const Mesh& mesh) {
  double cx = 0.0, cy = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < field.phase_mask.size(); ++i) {
    if (!field.phase_mask[i]) continue;
    cx += mesh.node_coords[i][0];
    cy += mesh.node_coords[i][1];
    ++n;
  }
  if (n < 2) return 0.0;
  cx /= n;
  cy /= n;
  double ms = 0.0;
  for (std::size_t i = 0; i < field.phase_mask.size(); ++i) {
    if (!field.phase_mask[i]) continue;
    const double dx = mesh.node_coords[i][0] - cx;
    const double dy = mesh.node_coords[i][1] - cy;
    ms += dx * dx + dy * dy;
  }
  const double rms = std::sqrt(ms / n);
  const double half_diag = 0.5 * std::hypot(mesh.lx, mesh.ly);
  return rms / half_diag;
}

inline SampleStats sample_stats(const ConductivityField& field, const Mesh& mesh) {
  return {volume_fraction(field), dispersion(field, mesh)};
}

/// The 8 held-out test morphologies: 4 random ellipse/ring fields from fixed
/// seeds plus 4 symmetric shapes (plus, X, square frame, diagonal band) that
/// cannot occur in the training distribution.
inline std::vector<ConductivityField> builtin_test_suite(const Mesh& mesh,
                                                         double k_mat, double k_inc) {
  if (mesh.nx != 11 || mesh.ny != 11)
    throw ValidationError("builtin_test_suite: defined for the 11x11 grid");

  std::vector<ConductivityField> suite;
  SamplerConfig cfg;
  cfg.k_mat = k_mat;
  cfg.k_inc = k_inc;
  cfg.seed = 0x70e57ULL;
  for (std::uint64_t i = 0; i < 4; ++i) suite.push_back(generate_sample(mesh, cfg, i));

  const int mid = mesh.nx / 2;
  auto make = [&](auto&& pred) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(mesh.node_count()), 0);
    for (int iy = 0; iy < mesh.ny; ++iy)
      for (int ix = 0; ix < mesh.nx; ++ix)
        if (pred(ix, iy)) mask[static_cast<std::size_t>(mesh.node_index(ix, iy))] = 1;
    suite.push_back(field_from_mask(std::move(mask), k_mat, k_inc));
  };
  make([&](int ix, int iy) { return ix == mid || iy == mid; });                       // plus
  make([&](int ix, int iy) { return ix == iy || ix + iy == mesh.nx - 1; });           // X
  make([&](int ix, int iy) {                                                          // square frame
    return std::max(std::abs(ix - mid), std::abs(iy - mid)) == 3;
  });
  make([&](int ix, int iy) { return std::abs(ix - iy) <= 1; });                       // diagonal band
  return suite;
}

inline std::vector<std::string> builtin_test_suite_names() {
  return {"random_0", "random_1", "random_2", "random_3",
          "plus", "cross_x", "square_frame", "diagonal_band"};
}

/// Grayscale phase-label image; a pixel is inclusion phase when its value is
/// in the dark half of the range (2*value <= maxval).
struct GrayImage {
  int width = 0;
  int height = 0;
  int maxval = 255;
  std::vector<std::uint8_t> pixels;  // row-major, top row first

  bool inclusion_at(int row, int col) const {
    return 2 * static_cast<int>(pixels[static_cast<std::size_t>(row) * width + col]) <= maxval;
  }
};

// Tile index of a pixel coordinate: nearest of the n grid nodes placed
// uniformly over [0, extent-1], half-way pixels going to the larger index.
// Exact integer arithmetic, shared with the test oracles.
inline int downsample_tile_index(int pixel, int extent, int n) {
  const long long num = 2LL * pixel * (n - 1) + (extent - 1);
  return static_cast<int>(num / (2LL * (extent - 1)));
}

/// Majority pooling of a high-resolution phase image onto the mesh grid: a
/// node becomes inclusion when more than half of the pixels in its tile are
/// inclusion. Exact ties resolve to matrix phase.
inline ConductivityField downsample_image(const GrayImage& image, const Mesh& mesh,
                                          double k_mat, double k_inc) {
  if (image.width < mesh.nx || image.height < mesh.ny)
    throw ValidationError("downsample_image: image smaller than the node grid");

  const std::size_t n_nodes = static_cast<std::size_t>(mesh.node_count());
  std::vector<int> inclusion(n_nodes, 0), total(n_nodes, 0);
  for (int r = 0; r < image.height; ++r) {
    // image row 0 is the top of the picture; node row 0 is y = 0 (bottom)
    const int iy = mesh.ny - 1 - downsample_tile_index(r, image.height, mesh.ny);
    for (int c = 0; c < image.width; ++c) {
      const int ix = downsample_tile_index(c, image.width, mesh.nx);
      const auto node = static_cast<std::size_t>(mesh.node_index(ix, iy));
      ++total[node];
      inclusion[node] += image.inclusion_at(r, c) ? 1 : 0;
    }
  }
  std::vector<std::uint8_t> mask(n_nodes, 0);
  for (std::size_t i = 0; i < n_nodes; ++i)
    mask[i] = (2 * inclusion[i] > total[i]) ? 1 : 0;
  return field_from_mask(std::move(mask), k_mat, k_inc);
}

}  // namespace fol
