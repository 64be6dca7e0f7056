#pragma once
#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "fol/errors.hpp"
#include "fol/fem.hpp"
#include "fol/mesh.hpp"
#include "fol/microstructure.hpp"
#include "fol/neural.hpp"
#include "fol/rng.hpp"

namespace fol {

enum class TrainingMode { kPhysics, kData };

inline const char* to_string(TrainingMode mode) {
  return mode == TrainingMode::kPhysics ? "physics" : "data";
}

inline TrainingMode parse_training_mode(const std::string& name) {
  if (name == "physics") return TrainingMode::kPhysics;
  if (name == "data") return TrainingMode::kData;
  throw ValidationError("unknown training mode '" + name + "'");
}

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainingConfig {
  TrainingMode mode = TrainingMode::kPhysics;
  int epochs = 5000;
  int batch_size = 100;
  AdamConfig adam;
  double lambda_b = 10.0;  // Dirichlet penalty weight
  std::uint64_t seed = 0;
  ActivationKind activation = ActivationKind::kTanh;
  NetworkMode arch = NetworkMode::kSeparate;
  int hidden_layers = 2;
  int hidden_width = 10;
  bool shuffle = true;
  int checkpoint_every = 1000;
};

struct EpochStats {
  double loss_energy = 0.0;
  double loss_dirichlet = 0.0;
  double loss_total = 0.0;
  double seconds = 0.0;
};

using TrainingHistory = std::vector<EpochStats>;

/// Everything the loss needs that depends only on mesh/quadrature/BCs, kept
/// per Gauss point: the shape row N_T and the 4x4 product B^T B, plus
/// lambda_e = (w_n/2) detJ. On the uniform mesh one set serves every element.
struct PrecomputedLossOperators {
  std::array<Vec4, 4> shape_rows;
  std::array<Eigen::Matrix4d, 4> btb;
  double lambda_e = 0.0;
  int node_count = 0;
  std::vector<std::array<int, 4>> elements;            // gather/scatter tables
  std::vector<std::pair<int, double>> dirichlet;
};

inline PrecomputedLossOperators precompute_loss_operators(const Mesh& mesh,
                                                          const GaussRule& rule,
                                                          const BoundaryConditions& bc) {
  PrecomputedLossOperators ops;
  const ElementOperators first = element_operators(mesh, 0, rule);
  const ElementOperators last = element_operators(mesh, mesh.element_count() - 1, rule);
  if (std::abs(first.det_j - last.det_j) > 1e-14 * first.det_j)
    throw ValidationError("precompute_loss_operators: mesh is not uniform");
  for (int n = 0; n < 4; ++n) {
    const auto idx = static_cast<std::size_t>(n);
    ops.shape_rows[idx] = first.shape_values[idx];
    ops.btb[idx] = first.b_matrices[idx].transpose() * first.b_matrices[idx];
  }
  ops.lambda_e = 0.5 * rule.weights[0] * first.det_j;
  ops.node_count = mesh.node_count();
  ops.elements = mesh.elements;
  ops.dirichlet = bc.dirichlet;
  return ops;
}

struct PhysicsLoss {
  double energy = 0.0;
  double dirichlet = 0.0;
  Eigen::VectorXd grad;

  double total() const { return energy + dirichlet; }
};

/// The training loss for one sample:
///   lambda_e sum_e T_e^T [ sum_n (N(xi_n).k_e) B^T B(xi_n) ] T_e
///   + lambda_b sum_i |T_i - T_i,db|
/// together with its exact (sub)gradient w.r.t. the nodal temperatures;
/// sign(0) is taken as 0.
inline PhysicsLoss physics_loss(const TemperatureField& t, const ConductivityField& k,
                                const PrecomputedLossOperators& ops, double lambda_b) {
  if (t.size() != ops.node_count || k.values.size() != ops.node_count)
    throw DataMismatchError("physics_loss: field length mismatch");

  PhysicsLoss loss;
  loss.grad = Eigen::VectorXd::Zero(ops.node_count);

  for (const auto& conn : ops.elements) {
    Vec4 t_e, k_e;
    for (int i = 0; i < 4; ++i) {
      t_e(i) = t(conn[i]);
      k_e(i) = k.values(conn[i]);
    }
    Eigen::Matrix4d k_hat = Eigen::Matrix4d::Zero();
    for (std::size_t n = 0; n < 4; ++n)
      k_hat.noalias() += ops.shape_rows[n].dot(k_e) * ops.btb[n];
    const Vec4 k_hat_t = k_hat * t_e;
    loss.energy += ops.lambda_e * t_e.dot(k_hat_t);
    for (int i = 0; i < 4; ++i) loss.grad(conn[i]) += 2.0 * ops.lambda_e * k_hat_t(i);
  }

  for (const auto& [node, target] : ops.dirichlet) {
    const double diff = t(node) - target;
    loss.dirichlet += lambda_b * std::abs(diff);
    if (diff > 0.0)
      loss.grad(node) += lambda_b;
    else if (diff < 0.0)
      loss.grad(node) -= lambda_b;
  }
  return loss;
}

struct DataLoss {
  double mse = 0.0;
  Eigen::VectorXd grad;
};

/// Supervised baseline loss: nodal mean squared error against the FEM label.
inline DataLoss data_loss(const TemperatureField& pred, const TemperatureField& label) {
  if (pred.size() != label.size())
    throw DataMismatchError("data_loss: prediction/label length mismatch");
  const Eigen::VectorXd diff = pred - label;
  DataLoss loss;
  const auto n = static_cast<double>(pred.size());
  loss.mse = diff.squaredNorm() / n;
  loss.grad = (2.0 / n) * diff;
  return loss;
}

struct AdamState {
  NetworkParams m;
  NetworkParams v;
  std::int64_t step = 0;
};

inline AdamState make_adam_state(const NetworkParams& params) {
  return {zeros_like(params), zeros_like(params), 0};
}

/// One Adam update with bias correction. Gradients must be finite.
inline void adam_step(NetworkParams& params, const NetworkParams& grads,
                      AdamState& state, const AdamConfig& cfg) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t s = 0; s < params.subnets.size(); ++s) {
    for (std::size_t l = 0; l < params.subnets[s].layers.size(); ++l) {
      auto update = [&](Eigen::Ref<Eigen::MatrixXd> theta,
                        const Eigen::Ref<const Eigen::MatrixXd>& g,
                        Eigen::Ref<Eigen::MatrixXd> m, Eigen::Ref<Eigen::MatrixXd> v) {
        if (!g.allFinite())
          throw NumericalError("adam_step: non-finite gradient at step " +
                               std::to_string(state.step));
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        theta -= (cfg.learning_rate / bc1) * m.cwiseQuotient(
                     ((v / bc2).cwiseSqrt().array() + cfg.epsilon).matrix());
      };
      update(params.subnets[s].layers[l].w, grads.subnets[s].layers[l].w,
             state.m.subnets[s].layers[l].w, state.v.subnets[s].layers[l].w);
      update(params.subnets[s].layers[l].b, grads.subnets[s].layers[l].b,
             state.m.subnets[s].layers[l].b, state.v.subnets[s].layers[l].b);
    }
  }
}

struct TrainResult {
  NetworkParams params;
  TrainingHistory history;
};

using CheckpointHook =
    std::function<void(int epoch, const NetworkParams&, const TrainingHistory&)>;

/// Mini-batch Adam over the collocation fields. Physics mode touches no
/// labels; data mode needs one FEM label per sample. Per-sample losses are
/// averaged over the batch, so lambda_b keeps its balance at any batch size.
/// The hook (if any) fires every `checkpoint_every` epochs and at the end.
inline TrainResult train(const std::vector<ConductivityField>& dataset,
                         const std::vector<TemperatureField>* labels,
                         const TrainingConfig& cfg, const Mesh& mesh,
                         const BoundaryConditions& bc,
                         const CheckpointHook& hook = {}) {
  const auto n_samples = static_cast<int>(dataset.size());
  if (n_samples == 0) throw ValidationError("train: empty dataset");
  if (cfg.batch_size < 1 || cfg.batch_size > n_samples)
    throw ValidationError("train: batch size must be in [1, dataset size]");
  if (cfg.lambda_b <= 0.0) throw ValidationError("train: lambda_b must be positive");
  if (cfg.mode == TrainingMode::kData) {
    if (labels == nullptr || static_cast<int>(labels->size()) != n_samples)
      throw DataMismatchError("train: data mode needs one label per sample");
  }

  const int n_nodes = mesh.node_count();
  Eigen::MatrixXd inputs(n_nodes, n_samples);
  for (int i = 0; i < n_samples; ++i) {
    if (dataset[static_cast<std::size_t>(i)].values.size() != n_nodes)
      throw DataMismatchError("train: sample " + std::to_string(i) +
                              " does not match the mesh");
    inputs.col(i) = dataset[static_cast<std::size_t>(i)].values;
  }

  Architecture arch{n_nodes, cfg.hidden_layers, cfg.hidden_width, cfg.arch,
                    cfg.activation};
  NetworkParams params = init_params(arch, cfg.seed);
  AdamState adam = make_adam_state(params);
  const PrecomputedLossOperators ops =
      precompute_loss_operators(mesh, gauss_2x2(), bc);

  std::vector<int> order(static_cast<std::size_t>(n_samples));
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 shuffle_rng = derive_stream(cfg.seed, 0x5aff1eULL);

  TrainingHistory history;
  history.reserve(static_cast<std::size_t>(cfg.epochs));
  ForwardCache cache;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t_start = std::chrono::steady_clock::now();
    if (cfg.shuffle) shuffle_in_place(order, shuffle_rng);

    double epoch_energy = 0.0, epoch_dirichlet = 0.0, epoch_total = 0.0;
    int n_batches = 0;

    for (int begin = 0; begin < n_samples; begin += cfg.batch_size) {
      const int b = std::min(cfg.batch_size, n_samples - begin);
      Eigen::MatrixXd x(n_nodes, b);
      for (int j = 0; j < b; ++j)
        x.col(j) = inputs.col(order[static_cast<std::size_t>(begin + j)]);

      const Eigen::MatrixXd out = forward_batch(params, x, &cache);

      Eigen::MatrixXd upstream(n_nodes, b);
      double batch_energy = 0.0, batch_dirichlet = 0.0, batch_total = 0.0;
      for (int j = 0; j < b; ++j) {
        const int sample = order[static_cast<std::size_t>(begin + j)];
        if (cfg.mode == TrainingMode::kPhysics) {
          const PhysicsLoss loss = physics_loss(
              out.col(j), dataset[static_cast<std::size_t>(sample)], ops, cfg.lambda_b);
          batch_energy += loss.energy;
          batch_dirichlet += loss.dirichlet;
          batch_total += loss.total();
          upstream.col(j) = loss.grad;
        } else {
          const DataLoss loss =
              data_loss(out.col(j), (*labels)[static_cast<std::size_t>(sample)]);
          batch_total += loss.mse;
          upstream.col(j) = loss.grad;
        }
      }
      const double inv_b = 1.0 / b;
      batch_energy *= inv_b;
      batch_dirichlet *= inv_b;
      batch_total *= inv_b;
      if (!std::isfinite(batch_total))
        throw NumericalError("train: non-finite batch loss at epoch " +
                             std::to_string(epoch));
      upstream *= inv_b;

      const NetworkParams grads = backprop_batch(params, x, cache, upstream);
      adam_step(params, grads, adam, cfg.adam);

      epoch_energy += batch_energy;
      epoch_dirichlet += batch_dirichlet;
      epoch_total += batch_total;
      ++n_batches;
    }

    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - t_start;
    history.push_back({epoch_energy / n_batches, epoch_dirichlet / n_batches,
                       epoch_total / n_batches, elapsed.count()});

    if (hook && cfg.checkpoint_every > 0 && epoch + 1 < cfg.epochs &&
        (epoch + 1) % cfg.checkpoint_every == 0)
      hook(epoch + 1, params, history);
  }
  if (hook) hook(cfg.epochs, params, history);
  return {std::move(params), std::move(history)};
}

/// Minimizes the energy term of the training loss over the nodal temperatures
/// with the Dirichlet values substituted exactly. The reduced problem is
/// quadratic, so this is a direct solve; by construction it must reproduce
/// the FEM solution for every conductivity field.
inline TemperatureField direct_minimize_field(const ConductivityField& k,
                                              const PrecomputedLossOperators& ops,
                                              const BoundaryConditions& bc) {
  if (k.values.size() != ops.node_count)
    throw DataMismatchError("direct_minimize_field: field length mismatch");
  Eigen::MatrixXd k_hat_global = Eigen::MatrixXd::Zero(ops.node_count, ops.node_count);
  for (const auto& conn : ops.elements) {
    Vec4 k_e;
    for (int i = 0; i < 4; ++i) k_e(i) = k.values(conn[i]);
    Eigen::Matrix4d k_hat = Eigen::Matrix4d::Zero();
    for (std::size_t n = 0; n < 4; ++n)
      k_hat.noalias() += ops.shape_rows[n].dot(k_e) * ops.btb[n];
    k_hat *= ops.lambda_e;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) k_hat_global(conn[i], conn[j]) += k_hat(i, j);
  }
  return detail::solve_dirichlet(k_hat_global,
                                 Eigen::VectorXd::Zero(ops.node_count), bc);
}

}  // namespace fol
