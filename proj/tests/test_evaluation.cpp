#include <gtest/gtest.h>

#include "fol/evaluation.hpp"
#include "fol/rng.hpp"

using namespace fol;

TEST(RelL2Error, PinnedFormula) {
  Eigen::VectorXd b(3);
  b << 1.0, 2.0, 2.0;  // ||b|| = 3
  EXPECT_DOUBLE_EQ(*rel_l2_error(b, b), 0.0);

  Eigen::VectorXd a = b;
  a(0) += 3.0;  // ||a - b|| = 3
  EXPECT_NEAR(*rel_l2_error(a, b), 100.0, 1e-12);

  EXPECT_NEAR(*rel_l2_error(1.1 * b, b), 10.0, 1e-10);  // norm homogeneity

  EXPECT_FALSE(rel_l2_error(a, Eigen::VectorXd::Zero(3)).has_value());
}

TEST(HomogenizedError, PinnedFormula) {
  Eigen::VectorXd b = Eigen::VectorXd::Constant(121, 0.500);
  Eigen::VectorXd a = Eigen::VectorXd::Constant(121, 0.505);
  EXPECT_DOUBLE_EQ(*homogenized_error(b, b), 0.0);
  EXPECT_NEAR(*homogenized_error(a, b), 1.0, 1e-10);
}

TEST(HomogenizedError, ZeroMeanReferenceIsNotAValue) {
  // A symmetric q_y profile: mean is (numerically) zero, the metric is n/a.
  Eigen::VectorXd b(4), a(4);
  b << 0.5, -0.5, 0.25, -0.25;
  a << 0.4, -0.4, 0.3, -0.3;
  EXPECT_FALSE(homogenized_error(a, b).has_value());
  b(0) += 1e-17;  // roundoff-level asymmetry is still n/a
  EXPECT_FALSE(homogenized_error(a, b).has_value());
}

TEST(MaxPointwiseError, PinnedFormula) {
  Eigen::VectorXd b(3), a(3);
  b << 2.0, -1.0, 0.5;
  a << 2.5, -1.0, 0.5;
  EXPECT_NEAR(max_pointwise_error(a, b), 25.0, 1e-12);
}

TEST(InterpolateFine, IdentityAtGridResolution) {
  const Mesh m = build_mesh(11, 11, 1.0, 1.0);
  SplitMix64 rng(7);
  Eigen::VectorXd nodal(m.node_count());
  for (int i = 0; i < m.node_count(); ++i) nodal(i) = rng.uniform(0.0, 1.0);
  const Eigen::VectorXd fine = interpolate_fine(nodal, m, 11);
  EXPECT_LT((fine - nodal).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(InterpolateFine, ReproducesLinearFieldExactly) {
  const Mesh m = build_mesh(11, 11, 1.0, 1.0);
  Eigen::VectorXd nodal(m.node_count());
  for (int i = 0; i < m.node_count(); ++i)
    nodal(i) = 1.0 - m.node_coords[static_cast<std::size_t>(i)][0];
  const int res = 165;
  const Eigen::VectorXd fine = interpolate_fine(nodal, m, res);
  for (int iy = 0; iy < res; ++iy)
    for (int ix = 0; ix < res; ++ix)
      EXPECT_NEAR(fine(static_cast<Eigen::Index>(iy) * res + ix),
                  1.0 - static_cast<double>(ix) / (res - 1), 1e-12);
}

TEST(InterpolateFine, StaysWithinNodalRangeProperty) {
  const Mesh m = build_mesh(11, 11, 1.0, 1.0);
  SplitMix64 rng(11);
  Eigen::VectorXd nodal(m.node_count());
  for (int i = 0; i < m.node_count(); ++i) nodal(i) = rng.uniform(-2.0, 2.0);
  const Eigen::VectorXd fine = interpolate_fine(nodal, m, 57);
  EXPECT_GE(fine.minCoeff(), nodal.minCoeff() - 1e-12);
  EXPECT_LE(fine.maxCoeff(), nodal.maxCoeff() + 1e-12);
}

TEST(InterpolateFine, CommutesWithAffineMapsProperty) {
  const Mesh m = build_mesh(11, 11, 1.0, 1.0);
  SplitMix64 rng(13);
  Eigen::VectorXd nodal(m.node_count());
  for (int i = 0; i < m.node_count(); ++i) nodal(i) = rng.uniform(0.0, 1.0);
  const double alpha = 2.75, beta = -0.4;
  const Eigen::VectorXd lhs =
      interpolate_fine((alpha * nodal).array() + beta, m, 33);
  const Eigen::VectorXd rhs = (alpha * interpolate_fine(nodal, m, 33)).array() + beta;
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(InterpolateFine, RejectsCoarseResolution) {
  const Mesh m = build_mesh(11, 11, 1.0, 1.0);
  EXPECT_THROW(interpolate_fine(Eigen::VectorXd::Zero(121), m, 7), ValidationError);
}

TEST(CompareReport, FemAsFakeModelGivesZeroErrors) {
  const Mesh m = build_mesh(11, 11, 1.0, 1.0);
  const BoundaryConditions bc = default_boundary_conditions(m);
  const auto suite = builtin_test_suite(m, 1.0, 0.01);
  const auto names = builtin_test_suite_names();

  const Predictor fem_model = [&](const ConductivityField& k) {
    return solve(m, k, bc);
  };
  const ErrorReport report =
      compare_report({{"fem_copy", fem_model}}, m, bc, suite, names, {4, 5, 6, 7});
  ASSERT_EQ(report.rows.size(), 8u);
  for (const auto& row : report.rows) {
    EXPECT_LT(row.rel_l2_t.value(), 1e-8);
    EXPECT_LT(row.maxpt_t.value(), 1e-8);
    if (row.homog_t) EXPECT_LT(*row.homog_t, 1e-8);
  }
  EXPECT_LT(report.aggregate("fem_copy", "mean").rel_l2_t.value(), 1e-8);
  ASSERT_EQ(report.symmetric_mean_rel_l2_t.size(), 1u);
  EXPECT_LT(report.symmetric_mean_rel_l2_t[0].second, 1e-8);
}

TEST(CompareReport, RowCountIsSamplesTimesModels) {
  const Mesh m = build_mesh(11, 11, 1.0, 1.0);
  const BoundaryConditions bc = default_boundary_conditions(m);
  const auto suite = builtin_test_suite(m, 1.0, 0.01);
  const auto names = builtin_test_suite_names();
  const Predictor fem_model = [&](const ConductivityField& k) {
    return solve(m, k, bc);
  };
  const Predictor flat_model = [&](const ConductivityField&) {
    return TemperatureField(Eigen::VectorXd::Constant(m.node_count(), 0.5));
  };
  const ErrorReport report = compare_report(
      {{"a", fem_model}, {"b", flat_model}}, m, bc, suite, names);
  EXPECT_EQ(report.rows.size(), 16u);
  EXPECT_EQ(report.aggregates.size(), 4u);  // mean+max per model
  EXPECT_GT(report.aggregate("b", "mean").rel_l2_t.value(), 1.0);
}

TEST(CompareReport, RejectsGridMismatch) {
  const Mesh m = build_mesh(11, 11, 1.0, 1.0);
  const BoundaryConditions bc = default_boundary_conditions(m);
  const auto suite = builtin_test_suite(m, 1.0, 0.01);
  const Predictor bad_model = [](const ConductivityField&) {
    return TemperatureField(Eigen::VectorXd::Zero(9));
  };
  EXPECT_THROW(compare_report({{"bad", bad_model}}, m, bc, suite,
                              builtin_test_suite_names()),
               DataMismatchError);
}
