#pragma once
#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fol/errors.hpp"
#include "fol/rng.hpp"

namespace fol {

enum class ActivationKind { kTanh, kSwish, kSigmoid, kLinear };

inline const char* to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kTanh: return "tanh";
    case ActivationKind::kSwish: return "swish";
    case ActivationKind::kSigmoid: return "sigmoid";
    case ActivationKind::kLinear: return "linear";
  }
  return "?";
}

inline ActivationKind parse_activation(const std::string& name) {
  if (name == "tanh") return ActivationKind::kTanh;
  if (name == "swish") return ActivationKind::kSwish;
  if (name == "sigmoid") return ActivationKind::kSigmoid;
  if (name == "linear") return ActivationKind::kLinear;
  throw ValidationError("unknown activation '" + name + "'");
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double activation(ActivationKind kind, double x) {
  switch (kind) {
    case ActivationKind::kTanh: return std::tanh(x);
    case ActivationKind::kSwish: return x * sigmoid(x);
    case ActivationKind::kSigmoid: return sigmoid(x);
    case ActivationKind::kLinear: return x;
  }
  return x;
}

inline double activation_grad(ActivationKind kind, double x) {
  switch (kind) {
    case ActivationKind::kTanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActivationKind::kSwish: {
      const double s = sigmoid(x);
      return s * (1.0 + x * (1.0 - s));
    }
    case ActivationKind::kSigmoid: {
      const double s = sigmoid(x);
      return s * (1.0 - s);
    }
    case ActivationKind::kLinear: return 1.0;
  }
  return 1.0;
}

/// separate: one sub-network per output node, each seeing the full input.
/// monolithic: a single fully connected net with the same total neuron count
/// (hidden width = input_size * hidden_width).
enum class NetworkMode { kSeparate, kMonolithic };

inline const char* to_string(NetworkMode mode) {
  return mode == NetworkMode::kSeparate ? "separate" : "monolithic";
}

inline NetworkMode parse_network_mode(const std::string& name) {
  if (name == "separate") return NetworkMode::kSeparate;
  if (name == "monolithic") return NetworkMode::kMonolithic;
  throw ValidationError("unknown network mode '" + name + "'");
}

struct Layer {
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
};

struct Subnet {
  std::vector<Layer> layers;
};

struct Architecture {
  int input_size = 0;
  int hidden_layers = 2;  // L
  int hidden_width = 10;  // N_l, per sub-network
  NetworkMode mode = NetworkMode::kSeparate;
  ActivationKind activation = ActivationKind::kTanh;

  int subnet_count() const { return mode == NetworkMode::kSeparate ? input_size : 1; }
  int subnet_output_size() const { return mode == NetworkMode::kSeparate ? 1 : input_size; }
  int actual_hidden_width() const {
    return mode == NetworkMode::kSeparate ? hidden_width : hidden_width * input_size;
  }
  // Layer widths input -> hidden... -> output for one sub-network.
  std::vector<int> layer_sizes() const {
    std::vector<int> sizes{input_size};
    for (int l = 0; l < hidden_layers; ++l) sizes.push_back(actual_hidden_width());
    sizes.push_back(subnet_output_size());
    return sizes;
  }
  void validate() const {
    if (input_size < 1) throw ValidationError("Architecture: input_size must be >= 1");
    if (hidden_layers < 1 || hidden_width < 1)
      throw ValidationError("Architecture: need at least one hidden layer and neuron");
  }
};

struct NetworkParams {
  Architecture arch;
  std::vector<Subnet> subnets;

  std::int64_t parameter_count() const {
    std::int64_t n = 0;
    for (const auto& sub : subnets)
      for (const auto& layer : sub.layers) n += layer.w.size() + layer.b.size();
    return n;
  }
};

/// Same shapes as `params`, all zeros; gradient and Adam-moment buffers.
inline NetworkParams zeros_like(const NetworkParams& params) {
  NetworkParams z;
  z.arch = params.arch;
  z.subnets.resize(params.subnets.size());
  for (std::size_t s = 0; s < params.subnets.size(); ++s) {
    z.subnets[s].layers.resize(params.subnets[s].layers.size());
    for (std::size_t l = 0; l < params.subnets[s].layers.size(); ++l) {
      const auto& src = params.subnets[s].layers[l];
      z.subnets[s].layers[l].w = Eigen::MatrixXd::Zero(src.w.rows(), src.w.cols());
      z.subnets[s].layers[l].b = Eigen::VectorXd::Zero(src.b.size());
    }
  }
  return z;
}

inline double glorot_bound(int fan_in, int fan_out) {
  return std::sqrt(6.0 / (fan_in + fan_out));
}

/// Glorot-uniform weights, zero biases. Each (subnet, layer) pair draws from
/// its own stream, so the result is independent of initialization order.
inline NetworkParams init_params(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  const std::vector<int> sizes = arch.layer_sizes();
  NetworkParams params;
  params.arch = arch;
  params.subnets.resize(static_cast<std::size_t>(arch.subnet_count()));
  for (std::size_t s = 0; s < params.subnets.size(); ++s) {
    auto& layers = params.subnets[s].layers;
    layers.resize(sizes.size() - 1);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      const int fan_in = sizes[l];
      const int fan_out = sizes[l + 1];
      SplitMix64 rng = derive_stream(seed, s, l);
      const double bound = glorot_bound(fan_in, fan_out);
      layers[l].w.resize(fan_out, fan_in);
      for (Eigen::Index r = 0; r < layers[l].w.rows(); ++r)
        for (Eigen::Index c = 0; c < layers[l].w.cols(); ++c)
          layers[l].w(r, c) = rng.uniform(-bound, bound);
      layers[l].b = Eigen::VectorXd::Zero(fan_out);
    }
  }
  return params;
}

/// Pre- and post-activation values of every layer for a batch, kept for the
/// backward pass. post of the last layer is the network output (affine, no
/// activation).
struct ForwardCache {
  struct SubnetCache {
    std::vector<Eigen::MatrixXd> pre;
    std::vector<Eigen::MatrixXd> post;
  };
  std::vector<SubnetCache> subnets;
};

namespace detail {

inline void apply_activation(ActivationKind kind, const Eigen::MatrixXd& pre,
                             Eigen::MatrixXd& post) {
  post = pre.unaryExpr([kind](double x) { return activation(kind, x); });
}

inline void subnet_forward(const Subnet& sub, ActivationKind kind,
                           const Eigen::MatrixXd& input,
                           ForwardCache::SubnetCache& cache) {
  const std::size_t n_layers = sub.layers.size();
  cache.pre.resize(n_layers);
  cache.post.resize(n_layers);
  const Eigen::MatrixXd* z = &input;
  for (std::size_t l = 0; l < n_layers; ++l) {
    cache.pre[l].noalias() = sub.layers[l].w * (*z);
    cache.pre[l].colwise() += sub.layers[l].b;
    if (l + 1 < n_layers)
      apply_activation(kind, cache.pre[l], cache.post[l]);
    else
      cache.post[l] = cache.pre[l];  // affine output layer
    z = &cache.post[l];
  }
}

// Accumulates the summed-over-batch parameter gradients for one sub-network.
// `upstream` holds dL/d(output) per column/sample; scale it beforehand for a
// batch mean.
inline void subnet_backward(const Subnet& sub, ActivationKind kind,
                            const Eigen::MatrixXd& input,
                            const ForwardCache::SubnetCache& cache,
                            const Eigen::MatrixXd& upstream, Subnet& grad) {
  const std::size_t n_layers = sub.layers.size();
  Eigen::MatrixXd delta = upstream;
  for (std::size_t l = n_layers; l-- > 0;) {
    if (l + 1 < n_layers) {
      // through the activation of hidden layer l
      delta.array() *= cache.pre[l].unaryExpr([kind](double x) {
        return activation_grad(kind, x);
      }).array();
    }
    const Eigen::MatrixXd& z_prev = (l == 0) ? input : cache.post[l - 1];
    grad.layers[l].w.noalias() += delta * z_prev.transpose();
    grad.layers[l].b.noalias() += delta.rowwise().sum();
    if (l > 0) delta = sub.layers[l].w.transpose() * delta;
  }
}

}  // namespace detail

/// Batched forward pass: inputs are columns of `x` (input_size x B), outputs
/// are columns of the returned matrix (input_size x B = one temperature per
/// node). Pass a cache to keep intermediates for backprop_batch.
inline Eigen::MatrixXd forward_batch(const NetworkParams& params,
                                     const Eigen::MatrixXd& x,
                                     ForwardCache* cache = nullptr) {
  if (x.rows() != params.arch.input_size)
    throw DataMismatchError("forward: input size does not match architecture");
  if (!x.allFinite()) throw ValidationError("forward: non-finite input");

  ForwardCache local;
  ForwardCache& ws = cache ? *cache : local;
  ws.subnets.resize(params.subnets.size());

  Eigen::MatrixXd out(params.arch.input_size, x.cols());
  if (params.arch.mode == NetworkMode::kMonolithic) {
    detail::subnet_forward(params.subnets[0], params.arch.activation, x, ws.subnets[0]);
    out = ws.subnets[0].post.back();
  } else {
    const auto n_sub = static_cast<int>(params.subnets.size());
#pragma omp parallel for schedule(static)
    for (int s = 0; s < n_sub; ++s) {
      detail::subnet_forward(params.subnets[static_cast<std::size_t>(s)],
                             params.arch.activation, x,
                             ws.subnets[static_cast<std::size_t>(s)]);
      out.row(s) = ws.subnets[static_cast<std::size_t>(s)].post.back();
    }
  }
  return out;
}

inline Eigen::VectorXd forward(const NetworkParams& params, const Eigen::VectorXd& k) {
  return forward_batch(params, k);
}

/// Parameter gradients summed over the batch columns of `upstream`
/// (dL/dT per node per sample). In separate mode upstream row i feeds only
/// sub-network i. Scale upstream by 1/B beforehand to get batch means.
inline NetworkParams backprop_batch(const NetworkParams& params,
                                    const Eigen::MatrixXd& x,
                                    const ForwardCache& cache,
                                    const Eigen::MatrixXd& upstream) {
  if (upstream.rows() != params.arch.input_size || upstream.cols() != x.cols())
    throw DataMismatchError("backprop: upstream shape mismatch");
  if (!upstream.allFinite()) throw ValidationError("backprop: non-finite upstream gradient");

  NetworkParams grads = zeros_like(params);
  if (params.arch.mode == NetworkMode::kMonolithic) {
    detail::subnet_backward(params.subnets[0], params.arch.activation, x,
                            cache.subnets[0], upstream, grads.subnets[0]);
  } else {
    const auto n_sub = static_cast<int>(params.subnets.size());
#pragma omp parallel for schedule(static)
    for (int s = 0; s < n_sub; ++s) {
      const auto idx = static_cast<std::size_t>(s);
      detail::subnet_backward(params.subnets[idx], params.arch.activation, x,
                              cache.subnets[idx], upstream.row(s), grads.subnets[idx]);
    }
  }
  return grads;
}

inline NetworkParams backprop(const NetworkParams& params, const Eigen::VectorXd& k,
                              const Eigen::VectorXd& upstream) {
  ForwardCache cache;
  forward_batch(params, k, &cache);
  return backprop_batch(params, k, cache, upstream);
}

}  // namespace fol
