#include "xcl/network.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <thread>

#include "xcl/errors.hpp"
#include "xcl/text_io.hpp"

namespace xcl {

std::size_t NetworkSpec::output_dim() const {
  return head == HeadKind::kGaussian ? head_size() + 1 : head_size();
}

void NetworkSpec::validate() const {
  if (layer_dims.empty()) throw ConfigError("network spec has no layers");
  if (layer_dims.size() < 2) throw ConfigError("network spec needs at least input and output dims");
  for (std::size_t i = 0; i < layer_dims.size(); ++i) {
    if (layer_dims[i] == 0) {
      throw ConfigError("network layer " + std::to_string(i) + " has dimension 0");
    }
  }
}

Network::Network(NetworkSpec spec, LayerParams layers)
    : spec_(std::move(spec)), layers_(std::move(layers)) {
  spec_.validate();
  if (layers_.size() != spec_.layer_dims.size() - 1) {
    throw ShapeError("layer count does not match network spec");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::size_t in = spec_.layer_dims[l];
    const std::size_t out = l + 1 == layers_.size() ? spec_.output_dim() : spec_.layer_dims[l + 1];
    if (layers_[l].weight.rows() != out || layers_[l].weight.cols() != in ||
        layers_[l].bias.size() != out) {
      throw ShapeError("layer " + std::to_string(l) + " parameters do not match spec");
    }
  }
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

namespace {

LayerParams shaped_zeros(const NetworkSpec& spec) {
  LayerParams layers;
  const std::size_t count = spec.layer_dims.size() - 1;
  for (std::size_t l = 0; l < count; ++l) {
    const std::size_t in = spec.layer_dims[l];
    const std::size_t out = l + 1 == count ? spec.output_dim() : spec.layer_dims[l + 1];
    layers.push_back({Matrix(out, in), std::vector<double>(out, 0.0)});
  }
  return layers;
}

void apply_activation(Activation act, std::span<double> values) {
  switch (act) {
    case Activation::kReLU:
      for (auto& v : values) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::kTanh:
      for (auto& v : values) v = std::tanh(v);
      break;
  }
}

// Derivative expressed through the post-activation value.
double activation_slope(Activation act, double post) {
  switch (act) {
    case Activation::kReLU:
      return post > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh:
      return 1.0 - post * post;
  }
  return 0.0;
}

Matrix affine(const DenseLayer& layer, const Matrix& in) {
  const std::size_t out_dim = layer.weight.rows();
  const std::size_t in_dim = layer.weight.cols();
  Matrix out(in.rows(), out_dim);
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const auto x = in.row(r);
    auto y = out.row(r);
    for (std::size_t o = 0; o < out_dim; ++o) {
      const auto w = layer.weight.row(o);
      double acc = layer.bias[o];
      for (std::size_t i = 0; i < in_dim; ++i) acc += w[i] * x[i];
      y[o] = acc;
    }
  }
  return out;
}

}  // namespace

Network init_network(const NetworkSpec& spec, Rng& rng) {
  spec.validate();
  LayerParams layers = shaped_zeros(spec);
  for (auto& layer : layers) {
    const double bound = std::sqrt(1.0 / static_cast<double>(layer.weight.cols()));
    for (auto& w : layer.weight.values()) w = rng.uniform(-bound, bound);
  }
  return Network(spec, std::move(layers));
}

LayerParams zeros_like(const Network& net) { return shaped_zeros(net.spec()); }

ForwardCache forward_cached(const Network& net, const Matrix& batch) {
  if (batch.cols() != net.input_dim()) {
    throw ShapeError("batch has " + std::to_string(batch.cols()) + " features, network expects " +
                     std::to_string(net.input_dim()));
  }
  ForwardCache cache;
  cache.activations.reserve(net.layers().size() + 1);
  cache.activations.push_back(batch);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    Matrix next = affine(net.layers()[l], cache.activations.back());
    if (l + 1 < net.layers().size()) apply_activation(net.spec().activation, next.values());
    cache.activations.push_back(std::move(next));
  }
  return cache;
}

namespace {

std::atomic<std::size_t> g_eval_threads{1};
constexpr std::size_t kMinRowsPerThread = 256;

}  // namespace

void set_eval_threads(std::size_t n) { g_eval_threads.store(std::max<std::size_t>(n, 1)); }
std::size_t eval_threads() noexcept { return g_eval_threads.load(); }

Matrix forward(const Network& net, const Matrix& batch) {
  const std::size_t threads = std::min(eval_threads(), batch.rows() / kMinRowsPerThread);
  if (threads <= 1) {
    auto cache = forward_cached(net, batch);
    return std::move(cache.activations.back());
  }
  if (batch.cols() != net.input_dim()) {
    throw ShapeError("batch has " + std::to_string(batch.cols()) + " features, network expects " +
                     std::to_string(net.input_dim()));
  }
  Matrix out(batch.rows(), net.output_dim());
  const std::size_t block = (batch.rows() + threads - 1) / threads;
  std::vector<std::thread> workers;
  for (std::size_t begin = 0; begin < batch.rows(); begin += block) {
    const std::size_t end = std::min(batch.rows(), begin + block);
    workers.emplace_back([&net, &batch, &out, begin, end] {
      std::vector<std::size_t> rows(end - begin);
      std::iota(rows.begin(), rows.end(), begin);
      const Matrix part = forward_cached(net, batch.gather_rows(rows)).activations.back();
      for (std::size_t r = begin; r < end; ++r) {
        std::copy(part.row(r - begin).begin(), part.row(r - begin).end(), out.row(r).begin());
      }
    });
  }
  for (auto& w : workers) w.join();
  return out;
}

LayerParams backward(const Network& net, const ForwardCache& cache, const Matrix& upstream) {
  const Matrix& output = cache.activations.back();
  if (upstream.rows() != output.rows() || upstream.cols() != output.cols()) {
    throw ShapeError("upstream gradient shape does not match network output");
  }
  LayerParams grads = zeros_like(net);
  Matrix delta = upstream;
  for (std::size_t l = net.layers().size(); l-- > 0;) {
    const DenseLayer& layer = net.layers()[l];
    const Matrix& input = cache.activations[l];
    DenseLayer& g = grads[l];
    const std::size_t out_dim = layer.weight.rows();
    const std::size_t in_dim = layer.weight.cols();
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      const auto d = delta.row(r);
      const auto x = input.row(r);
      for (std::size_t o = 0; o < out_dim; ++o) {
        if (d[o] == 0.0) continue;
        auto gw = g.weight.row(o);
        for (std::size_t i = 0; i < in_dim; ++i) gw[i] += d[o] * x[i];
        g.bias[o] += d[o];
      }
    }
    if (l == 0) break;
    Matrix prev(delta.rows(), in_dim);
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      const auto d = delta.row(r);
      auto p = prev.row(r);
      for (std::size_t o = 0; o < out_dim; ++o) {
        if (d[o] == 0.0) continue;
        const auto w = layer.weight.row(o);
        for (std::size_t i = 0; i < in_dim; ++i) p[i] += d[o] * w[i];
      }
      const auto a = input.row(r);
      for (std::size_t i = 0; i < in_dim; ++i) p[i] *= activation_slope(net.spec().activation, a[i]);
    }
    delta = std::move(prev);
  }
  return grads;
}

LayerParams backward(const Network& net, const Matrix& batch, const Matrix& upstream) {
  return backward(net, forward_cached(net, batch), upstream);
}

std::vector<double> flatten(const LayerParams& params) {
  std::vector<double> flat;
  for (const auto& layer : params) {
    flat.insert(flat.end(), layer.weight.values().begin(), layer.weight.values().end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  return flat;
}

std::string to_string(Activation a) { return a == Activation::kReLU ? "relu" : "tanh"; }
std::string to_string(HeadKind h) { return h == HeadKind::kLogits ? "logits" : "gaussian"; }

Activation parse_activation(const std::string& text) {
  if (text == "relu") return Activation::kReLU;
  if (text == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation '" + text + "'");
}

namespace {

constexpr std::string_view kModelMagic = "xcl-model v1";

}  // namespace

void write_networks(std::ostream& out, std::span<const Network> nets) {
  out << kModelMagic << '\n' << "networks=" << nets.size() << '\n';
  for (const auto& net : nets) {
    const auto& spec = net.spec();
    out << "layer_dims=";
    for (std::size_t i = 0; i < spec.layer_dims.size(); ++i) {
      out << (i ? "," : "") << spec.layer_dims[i];
    }
    out << '\n'
        << "activation=" << to_string(spec.activation) << '\n'
        << "head=" << to_string(spec.head) << '\n';
    // One line per output unit: incoming weights followed by the bias.
    for (const auto& layer : net.layers()) {
      for (std::size_t o = 0; o < layer.weight.rows(); ++o) {
        std::vector<double> row(layer.weight.row(o).begin(), layer.weight.row(o).end());
        row.push_back(layer.bias[o]);
        text::write_row(out, row);
      }
    }
  }
}

std::vector<Network> read_networks(std::istream& in) {
  text::LineReader reader(in);
  if (reader.next("model header") != kModelMagic) {
    throw ParseError("not an xcl model file", reader.line_number());
  }
  const long long count = reader.parse_int(reader.expect_key("networks"));
  if (count < 1) throw ParseError("model file holds no networks", reader.line_number());
  std::vector<Network> nets;
  for (long long n = 0; n < count; ++n) {
    NetworkSpec spec;
    for (auto tok : text::split(reader.expect_key("layer_dims"), ',')) {
      const long long d = reader.parse_int(tok);
      if (d < 1) throw ParseError("layer dimension must be positive", reader.line_number());
      spec.layer_dims.push_back(static_cast<std::size_t>(d));
    }
    if (spec.layer_dims.size() < 2) throw ParseError("layer_dims needs two entries", reader.line_number());
    try {
      spec.activation = parse_activation(reader.expect_key("activation"));
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), reader.line_number());
    }
    const std::string head = reader.expect_key("head");
    if (head == "logits") {
      spec.head = HeadKind::kLogits;
    } else if (head == "gaussian") {
      spec.head = HeadKind::kGaussian;
    } else {
      throw ParseError("unknown head '" + head + "'", reader.line_number());
    }
    LayerParams layers = shaped_zeros(spec);
    for (auto& layer : layers) {
      for (std::size_t o = 0; o < layer.weight.rows(); ++o) {
        const auto row = reader.parse_row(reader.next("weight row"), layer.weight.cols() + 1);
        std::copy(row.begin(), row.end() - 1, layer.weight.row(o).begin());
        layer.bias[o] = row.back();
      }
    }
    nets.emplace_back(std::move(spec), std::move(layers));
  }
  return nets;
}

}  // namespace xcl
