#pragma once
#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fol/errors.hpp"
#include "fol/fem.hpp"
#include "fol/mesh.hpp"
#include "fol/microstructure.hpp"

namespace fol {

/// sqrt(sum (a_i - b_i)^2) / sqrt(sum b_i^2) * 100. n/a for a zero-norm
/// reference.
inline std::optional<double> rel_l2_error(const Eigen::VectorXd& a,
                                          const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw DataMismatchError("rel_l2_error: length mismatch");
  const double ref = b.norm();
  if (ref == 0.0) return std::nullopt;
  return (a - b).norm() / ref * 100.0;
}

/// |<a> - <b>| / |<b>| * 100 with <.> the mean over all grid nodes. n/a when
/// the reference mean is (numerically) zero, e.g. q_y on symmetric fields.
inline std::optional<double> homogenized_error(const Eigen::VectorXd& a,
                                               const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw DataMismatchError("homogenized_error: length mismatch");
  const double mean_b = b.mean();
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  if (std::abs(mean_b) <= 1e-12 * scale) return std::nullopt;
  return std::abs(a.mean() - mean_b) / std::abs(mean_b) * 100.0;
}

/// max_i |a_i - b_i| / max_i |b_i| * 100.
inline double max_pointwise_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw DataMismatchError("max_pointwise_error: length mismatch");
  const double ref = b.cwiseAbs().maxCoeff();
  if (ref == 0.0) throw ValidationError("max_pointwise_error: zero reference field");
  return (a - b).cwiseAbs().maxCoeff() / ref * 100.0;
}

/// Bilinear shape-function interpolation of a nodal field onto a uniform
/// resolution x resolution point grid (row-major, x fastest); exact at the
/// coarse nodes.
inline Eigen::VectorXd interpolate_fine(const Eigen::VectorXd& nodal, const Mesh& mesh,
                                        int resolution) {
  if (nodal.size() != mesh.node_count())
    throw DataMismatchError("interpolate_fine: field length mismatch");
  if (resolution < mesh.nx || resolution < mesh.ny)
    throw ValidationError("interpolate_fine: resolution below grid size");

  Eigen::VectorXd fine(static_cast<Eigen::Index>(resolution) * resolution);
  for (int iy = 0; iy < resolution; ++iy) {
    const double y = mesh.ly * iy / (resolution - 1);
    for (int ix = 0; ix < resolution; ++ix) {
      const double x = mesh.lx * ix / (resolution - 1);
      const MeshLocation loc = locate_point(mesh, x, y);
      const Vec4 n = shape_values(loc.xi, loc.eta);
      const auto& conn = mesh.elements[static_cast<std::size_t>(loc.element)];
      double value = 0.0;
      for (int i = 0; i < 4; ++i) value += n(i) * nodal(conn[i]);
      fine(static_cast<Eigen::Index>(iy) * resolution + ix) = value;
    }
  }
  return fine;
}

/// Anything that maps a conductivity field to a nodal temperature field:
/// a trained network, or the FEM solver itself when used as a fake model.
using Predictor = std::function<TemperatureField(const ConductivityField&)>;

struct SampleErrors {
  std::string sample;
  std::string model;
  std::optional<double> rel_l2_t;
  std::optional<double> rel_l2_qx;
  std::optional<double> rel_l2_qy;
  std::optional<double> homog_t;
  std::optional<double> homog_qx;
  std::optional<double> maxpt_t;
};

struct ErrorReport {
  std::vector<SampleErrors> rows;        // one per sample x model
  std::vector<SampleErrors> aggregates;  // sample = "mean" / "max", per model
  // Mean rel. L2 temperature error over the symmetric (out-of-distribution)
  // samples, per model; the basis of the physics-vs-data comparison.
  std::vector<std::pair<std::string, double>> symmetric_mean_rel_l2_t;

  const SampleErrors& aggregate(const std::string& model,
                                const std::string& which) const {
    for (const auto& row : aggregates)
      if (row.model == model && row.sample == which) return row;
    throw DataMismatchError("ErrorReport: no aggregate '" + which + "' for model '" +
                            model + "'");
  }
};

namespace detail {

// Mean/max over the entries that are not n/a; n/a when none are.
inline std::optional<double> mean_of(const std::vector<std::optional<double>>& v) {
  double sum = 0.0;
  int n = 0;
  for (const auto& x : v)
    if (x) {
      sum += *x;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / n;
}

inline std::optional<double> max_of(const std::vector<std::optional<double>>& v) {
  std::optional<double> best;
  for (const auto& x : v)
    if (x && (!best || *x > *best)) best = *x;
  return best;
}

}  // namespace detail

/// Per-sample and aggregate errors of each model against the FEM oracle.
/// Flux errors use the same center-point recovery as the FEM fields so the
/// comparison is like for like.
inline ErrorReport compare_report(
    const std::vector<std::pair<std::string, Predictor>>& models, const Mesh& mesh,
    const BoundaryConditions& bc, const std::vector<ConductivityField>& suite,
    const std::vector<std::string>& sample_names,
    const std::vector<int>& symmetric_samples = {}) {
  if (suite.size() != sample_names.size())
    throw DataMismatchError("compare_report: suite/name count mismatch");

  std::vector<TemperatureField> t_fem(suite.size());
  std::vector<FluxField> q_fem(suite.size());
  for (std::size_t i = 0; i < suite.size(); ++i) {
    t_fem[i] = solve(mesh, suite[i], bc);
    q_fem[i] = recover_flux(mesh, suite[i], t_fem[i]);
  }

  ErrorReport report;
  for (const auto& [name, predict] : models) {
    std::vector<SampleErrors> model_rows;
    for (std::size_t i = 0; i < suite.size(); ++i) {
      const TemperatureField t_nn = predict(suite[i]);
      if (t_nn.size() != mesh.node_count())
        throw DataMismatchError("compare_report: predictor grid mismatch");
      const FluxField q_nn = recover_flux(mesh, suite[i], t_nn);

      SampleErrors row;
      row.sample = sample_names[i];
      row.model = name;
      row.rel_l2_t = rel_l2_error(t_nn, t_fem[i]);
      row.rel_l2_qx = rel_l2_error(q_nn.nodal.col(0), q_fem[i].nodal.col(0));
      row.rel_l2_qy = rel_l2_error(q_nn.nodal.col(1), q_fem[i].nodal.col(1));
      row.homog_t = homogenized_error(t_nn, t_fem[i]);
      row.homog_qx = homogenized_error(q_nn.nodal.col(0), q_fem[i].nodal.col(0));
      row.maxpt_t = max_pointwise_error(t_nn, t_fem[i]);
      model_rows.push_back(std::move(row));
    }

    auto collect = [&](auto member) {
      std::vector<std::optional<double>> v;
      for (const auto& r : model_rows) v.push_back(r.*member);
      return v;
    };
    SampleErrors mean_row{"mean", name,
                          detail::mean_of(collect(&SampleErrors::rel_l2_t)),
                          detail::mean_of(collect(&SampleErrors::rel_l2_qx)),
                          detail::mean_of(collect(&SampleErrors::rel_l2_qy)),
                          detail::mean_of(collect(&SampleErrors::homog_t)),
                          detail::mean_of(collect(&SampleErrors::homog_qx)),
                          detail::mean_of(collect(&SampleErrors::maxpt_t))};
    SampleErrors max_row{"max", name,
                         detail::max_of(collect(&SampleErrors::rel_l2_t)),
                         detail::max_of(collect(&SampleErrors::rel_l2_qx)),
                         detail::max_of(collect(&SampleErrors::rel_l2_qy)),
                         detail::max_of(collect(&SampleErrors::homog_t)),
                         detail::max_of(collect(&SampleErrors::homog_qx)),
                         detail::max_of(collect(&SampleErrors::maxpt_t))};

    if (!symmetric_samples.empty()) {
      std::vector<std::optional<double>> sym;
      for (int s : symmetric_samples)
        sym.push_back(model_rows.at(static_cast<std::size_t>(s)).rel_l2_t);
      if (const auto m = detail::mean_of(sym))
        report.symmetric_mean_rel_l2_t.emplace_back(name, *m);
    }

    for (auto& r : model_rows) report.rows.push_back(std::move(r));
    report.aggregates.push_back(std::move(mean_row));
    report.aggregates.push_back(std::move(max_row));
  }
  return report;
}

}  // namespace fol
