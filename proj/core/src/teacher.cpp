#include "xcl/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "xcl/errors.hpp"
#include "xcl/text_io.hpp"

namespace xcl {

Teacher Teacher::single(Network net) { return Teacher({std::move(net)}); }

Teacher Teacher::ensemble(std::vector<Network> members, bool allow_gaussian) {
  if (members.empty()) throw ConfigError("ensemble teacher needs at least one member");
  const auto& first = members.front();
  for (const auto& m : members) {
    if (m.head() != first.head() || m.input_dim() != first.input_dim() ||
        m.spec().head_size() != first.spec().head_size()) {
      throw ConfigError("ensemble members differ in input dimension, head kind or head size");
    }
  }
  if (members.size() > 1 && first.head() == HeadKind::kGaussian && !allow_gaussian) {
    throw ConfigError("Gaussian-head ensembles must be enabled explicitly");
  }
  return Teacher(std::move(members));
}

CategoricalDist TeacherOutputs::distribution(std::size_t row) const {
  if (kind != HeadKind::kLogits) throw ConfigError("teacher outputs are not categorical");
  const auto p = values.row(row);
  const auto z = logits.row(row);
  return CategoricalDist::with_logits({p.begin(), p.end()}, {z.begin(), z.end()});
}

GaussianPred TeacherOutputs::gaussian(std::size_t row) const {
  if (kind != HeadKind::kGaussian) throw ConfigError("teacher outputs are not Gaussian");
  return GaussianPred::from_row(values.row(row));
}

namespace {

// Sum of the member values in sorted order: independent of member order.
double order_free_mean(std::vector<double>& parts) {
  std::ranges::sort(parts);
  double sum = 0.0;
  for (double v : parts) sum += v;
  return sum / static_cast<double>(parts.size());
}

}  // namespace

TeacherOutputs teacher_predict(const Teacher& teacher, const Matrix& batch) {
  if (batch.cols() != teacher.input_dim()) throw ShapeError("batch does not match teacher input dimension");
  const auto& members = teacher.members();
  std::vector<Matrix> raw;
  raw.reserve(members.size());
  for (const auto& m : members) raw.push_back(forward(m, batch));

  TeacherOutputs out;
  out.kind = teacher.head();
  const std::size_t n = batch.rows();
  if (out.kind == HeadKind::kGaussian) {
    if (members.size() == 1) {
      out.values = std::move(raw.front());
      return out;
    }
    out.values = Matrix(n, raw.front().cols());
    std::vector<double> parts(members.size());
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < out.values.cols(); ++j) {
        for (std::size_t m = 0; m < members.size(); ++m) parts[m] = raw[m](r, j);
        out.values(r, j) = order_free_mean(parts);
      }
    }
    return out;
  }

  const std::size_t c = teacher.head_size();
  out.values = Matrix(n, c);
  if (members.size() == 1) {
    out.logits = std::move(raw.front());
    for (std::size_t r = 0; r < n; ++r) {
      const auto p = softmax(out.logits.row(r));
      std::ranges::copy(p, out.values.row(r).begin());
    }
    return out;
  }
  out.logits = Matrix(n, c);
  std::vector<std::vector<double>> member_probs(members.size());
  std::vector<double> parts(members.size());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t m = 0; m < members.size(); ++m) member_probs[m] = softmax(raw[m].row(r));
    for (std::size_t j = 0; j < c; ++j) {
      for (std::size_t m = 0; m < members.size(); ++m) parts[m] = member_probs[m][j];
      const double p = order_free_mean(parts);
      out.values(r, j) = p;
      out.logits(r, j) = p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    }
  }
  return out;
}

void TransferSet::validate() const {
  if (outputs.rows() != inputs.rows()) throw ShapeError("transfer set: output rows do not match inputs");
  if (outputs.kind == HeadKind::kLogits) {
    if (outputs.logits.rows() != inputs.rows() || outputs.logits.cols() != outputs.values.cols()) {
      throw ShapeError("transfer set: logits do not match probabilities");
    }
    for (std::size_t r = 0; r < outputs.rows(); ++r) (void)outputs.distribution(r);
  } else {
    for (std::size_t r = 0; r < outputs.rows(); ++r) {
      if (!std::isfinite(outputs.values(r, outputs.values.cols() - 1))) {
        throw DataError("transfer set: non-finite log-variance");
      }
    }
  }
  if (has_ground_truth() && ground_truth.rows() != inputs.rows()) {
    throw ShapeError("transfer set: ground truth rows do not match inputs");
  }
}

TransferSet materialize_transfer_set(const Teacher& teacher, const TransferSampler& sampler, std::size_t n,
                                     Rng& rng, const Dataset* source) {
  if (n == 0) throw ConfigError("transfer set size must be positive");
  if (sampler.dim() != teacher.input_dim()) throw ShapeError("sampler dimension does not match teacher input");
  auto batch = sampler.sample(n, rng);
  TransferSet set;
  set.outputs = teacher_predict(teacher, batch.inputs);
  set.provenance = sampler.describe();
  const bool all_empirical = source != nullptr &&
                             std::ranges::all_of(batch.origin, [](std::ptrdiff_t o) { return o >= 0; });
  if (all_empirical) {
    if (source->is_classification()) {
      set.classes = source->num_classes();
      set.ground_truth = Matrix(n, 1);
      for (std::size_t r = 0; r < n; ++r) {
        set.ground_truth(r, 0) = static_cast<double>(source->labels().at(static_cast<std::size_t>(batch.origin[r])));
      }
    } else {
      std::vector<std::size_t> rows(batch.origin.begin(), batch.origin.end());
      set.ground_truth = source->targets().gather_rows(rows);
    }
  }
  set.inputs = std::move(batch.inputs);
  return set;
}

TrainingData distillation_data(const TransferSet& set, const LossSpec& spec) {
  TrainingData data;
  data.inputs = set.inputs;
  switch (spec.kind) {
    case LossKind::kKDCategorical:
      if (set.outputs.kind != HeadKind::kLogits) throw ConfigError("categorical KD needs a classification teacher");
      data.targets = set.outputs.logits;
      if (spec.kd_gt_weight > 0.0) {
        if (!set.has_ground_truth() || set.classes == 0) {
          throw ConfigError("kd_gt_weight > 0 needs ground-truth labels in the transfer set");
        }
        data.ground_truth = Matrix(set.size(), set.classes);
        for (std::size_t r = 0; r < set.size(); ++r) {
          data.ground_truth(r, static_cast<std::size_t>(set.ground_truth(r, 0))) = 1.0;
        }
      }
      break;
    case LossKind::kCrossEntropySoft:
      if (set.outputs.kind != HeadKind::kLogits) throw ConfigError("soft cross-entropy needs a classification teacher");
      data.targets = set.outputs.values;
      break;
    case LossKind::kGaussianKL:
      if (set.outputs.kind != HeadKind::kGaussian) throw ConfigError("Gaussian KL needs a regression teacher");
      data.targets = set.outputs.values;
      break;
    case LossKind::kGaussianNLL: {
      if (set.outputs.kind != HeadKind::kGaussian) throw ConfigError("Gaussian NLL distillation needs a regression teacher");
      const std::size_t d = set.outputs.values.cols() - 1;
      data.targets = Matrix(set.size(), d);
      for (std::size_t r = 0; r < set.size(); ++r) {
        std::copy_n(set.outputs.values.row(r).begin(), d, data.targets.row(r).begin());
      }
      break;
    }
  }
  return data;
}

namespace {

constexpr std::string_view kTransferMagic = "xcl-transfer-set v1";

}  // namespace

void save_transfer_set(std::ostream& out, const TransferSet& set) {
  set.validate();
  const bool categorical = set.outputs.kind == HeadKind::kLogits;
  const std::size_t width = categorical ? set.outputs.values.cols() : set.outputs.values.cols() - 1;
  std::string provenance = set.provenance;
  std::ranges::replace(provenance, '\n', ' ');
  out << kTransferMagic << '\n'
      << "rows=" << set.size() << '\n'
      << "features=" << set.inputs.cols() << '\n'
      << "output=" << (categorical ? "categorical" : "gaussian") << '\n'
      << "width=" << width << '\n';
  if (!set.has_ground_truth()) {
    out << "ground_truth=none\n";
  } else if (set.classes > 0) {
    out << "ground_truth=classes:" << set.classes << '\n';
  } else {
    out << "ground_truth=regression:" << set.ground_truth.cols() << '\n';
  }
  out << "provenance=" << provenance << '\n';
  // Row layout: features, then c probabilities and c cached logits
  // (categorical) or mu and s (gaussian), then the optional ground truth.
  std::vector<double> row;
  for (std::size_t r = 0; r < set.size(); ++r) {
    row.assign(set.inputs.row(r).begin(), set.inputs.row(r).end());
    row.insert(row.end(), set.outputs.values.row(r).begin(), set.outputs.values.row(r).end());
    if (categorical) row.insert(row.end(), set.outputs.logits.row(r).begin(), set.outputs.logits.row(r).end());
    if (set.has_ground_truth()) row.insert(row.end(), set.ground_truth.row(r).begin(), set.ground_truth.row(r).end());
    text::write_row(out, row);
  }
}

TransferSet load_transfer_set(std::istream& in) {
  text::LineReader reader(in);
  if (reader.next("transfer-set header") != kTransferMagic) {
    throw ParseError("not an xcl transfer-set file", reader.line_number());
  }
  const long long rows = reader.parse_int(reader.expect_key("rows"));
  const long long features = reader.parse_int(reader.expect_key("features"));
  const std::string output = reader.expect_key("output");
  const long long width = reader.parse_int(reader.expect_key("width"));
  const std::string gt = reader.expect_key("ground_truth");
  if (rows < 1 || features < 1 || width < 1) throw ParseError("header sizes must be positive", reader.line_number());
  if (output != "categorical" && output != "gaussian") {
    throw ParseError("unknown output kind '" + output + "'", reader.line_number());
  }
  TransferSet set;
  std::size_t gt_width = 0;
  if (gt.rfind("classes:", 0) == 0) {
    set.classes = static_cast<std::size_t>(reader.parse_int(std::string_view(gt).substr(8)));
    gt_width = 1;
  } else if (gt.rfind("regression:", 0) == 0) {
    gt_width = static_cast<std::size_t>(reader.parse_int(std::string_view(gt).substr(11)));
  } else if (gt != "none") {
    throw ParseError("unknown ground_truth spec '" + gt + "'", reader.line_number());
  }
  set.provenance = reader.expect_key("provenance");

  const bool categorical = output == "categorical";
  const auto n = static_cast<std::size_t>(rows);
  const auto d = static_cast<std::size_t>(features);
  const auto w = static_cast<std::size_t>(width);
  const std::size_t out_width = categorical ? w : w + 1;
  set.inputs = Matrix(n, d);
  set.outputs.kind = categorical ? HeadKind::kLogits : HeadKind::kGaussian;
  set.outputs.values = Matrix(n, out_width);
  if (categorical) set.outputs.logits = Matrix(n, w);
  if (gt_width > 0) set.ground_truth = Matrix(n, gt_width);
  const std::size_t total = d + out_width + (categorical ? w : 0) + gt_width;
  for (std::size_t r = 0; r < n; ++r) {
    const auto values = reader.parse_row(reader.next("transfer-set row"), total);
    auto it = values.begin();
    auto take = [&it](std::span<double> dst) {
      std::copy_n(it, dst.size(), dst.begin());
      it += static_cast<std::ptrdiff_t>(dst.size());
    };
    take(set.inputs.row(r));
    take(set.outputs.values.row(r));
    if (categorical) take(set.outputs.logits.row(r));
    if (gt_width > 0) take(set.ground_truth.row(r));
  }
  try {
    set.validate();
  } catch (const std::exception& e) {
    throw ParseError(e.what(), reader.line_number());
  }
  return set;
}

}  // namespace xcl
