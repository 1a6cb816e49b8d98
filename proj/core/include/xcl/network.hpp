#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "xcl/matrix.hpp"
#include "xcl/rng.hpp"

namespace xcl {

enum class Activation { kReLU, kTanh };

/// Interpretation of the final layer.
///  - kLogits: the last layer_dims entry is the class count c; outputs are logits.
///  - kGaussian: the last entry is the target dimension d; the final layer
///    emits d + 1 values (mean vector, then a scalar log-variance).
enum class HeadKind { kLogits, kGaussian };

struct NetworkSpec {
  std::vector<std::size_t> layer_dims;  // input, hidden..., c or d
  Activation activation = Activation::kReLU;
  HeadKind head = HeadKind::kLogits;

  std::size_t input_dim() const { return layer_dims.front(); }
  /// c for logits, d for Gaussian.
  std::size_t head_size() const { return layer_dims.back(); }
  /// Width of the raw output row.
  std::size_t output_dim() const;

  /// Throws ConfigError when empty, shorter than (input, output) or containing a zero.
  void validate() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

struct DenseLayer {
  Matrix weight;  // out x in
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Parameter-shaped buffers; also used for gradients and momentum.
using LayerParams = std::vector<DenseLayer>;

class Network {
 public:
  Network(NetworkSpec spec, LayerParams layers);

  const NetworkSpec& spec() const noexcept { return spec_; }
  const LayerParams& layers() const noexcept { return layers_; }
  LayerParams& mutable_layers() noexcept { return layers_; }

  std::size_t input_dim() const { return spec_.input_dim(); }
  std::size_t output_dim() const { return spec_.output_dim(); }
  HeadKind head() const { return spec_.head; }
  std::size_t parameter_count() const;

  friend bool operator==(const Network&, const Network&) = default;

 private:
  NetworkSpec spec_;
  LayerParams layers_;
};

/// Weights ~ U(-b, b) with b = sqrt(1 / fan_in); biases zero.
Network init_network(const NetworkSpec& spec, Rng& rng);

/// All-zero buffers shaped like `net`'s parameters.
LayerParams zeros_like(const Network& net);

/// Raw outputs, one row per input row. For a Gaussian head each row is (mu, s).
/// Large batches are split into row blocks across eval_threads() threads;
/// rows are independent, so the result does not depend on the thread count.
Matrix forward(const Network& net, const Matrix& batch);

/// Cap on threads used by forward() (default 1). Training never uses it.
void set_eval_threads(std::size_t n);
std::size_t eval_threads() noexcept;

/// Activations retained for a subsequent backward pass.
struct ForwardCache {
  std::vector<Matrix> activations;  // activations[0] = input, back() = output
};

ForwardCache forward_cached(const Network& net, const Matrix& batch);

/// Gradient of sum_{rows} <output_row, upstream_row> with respect to every
/// parameter, i.e. the chain rule applied to an upstream gradient on the outputs.
LayerParams backward(const Network& net, const ForwardCache& cache, const Matrix& upstream);
LayerParams backward(const Network& net, const Matrix& batch, const Matrix& upstream);

/// Applies `fn(double& param, double& other)` over matching parameter pairs.
template <typename Fn>
void for_each_parameter_pair(LayerParams& a, LayerParams& b, Fn&& fn) {
  for (std::size_t l = 0; l < a.size(); ++l) {
    auto wa = a[l].weight.values();
    auto wb = b[l].weight.values();
    for (std::size_t i = 0; i < wa.size(); ++i) fn(wa[i], wb[i]);
    for (std::size_t i = 0; i < a[l].bias.size(); ++i) fn(a[l].bias[i], b[l].bias[i]);
  }
}

/// Flat copy of every parameter in layer order (weights then bias per layer).
std::vector<double> flatten(const LayerParams& params);

/// Text model file holding one or more networks (ensemble members).
void write_networks(std::ostream& out, std::span<const Network> nets);
std::vector<Network> read_networks(std::istream& in);

std::string to_string(Activation a);
std::string to_string(HeadKind h);
Activation parse_activation(const std::string& text);

}  // namespace xcl
