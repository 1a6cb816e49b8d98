#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "xcl/datasets.hpp"
#include "xcl/losses.hpp"
#include "xcl/matrix.hpp"
#include "xcl/network.hpp"
#include "xcl/samplers.hpp"
#include "xcl/training.hpp"

namespace xcl {

/// A single network or a committee whose outputs are averaged.
class Teacher {
 public:
  static Teacher single(Network net);
  /// Members must agree on input dimension, head kind and head size.
  /// Gaussian-head committees average (mu, s) arithmetically; that is an
  /// extension and has to be requested with allow_gaussian = true.
  static Teacher ensemble(std::vector<Network> members, bool allow_gaussian = false);

  const std::vector<Network>& members() const noexcept { return members_; }
  bool is_ensemble() const noexcept { return members_.size() > 1; }
  HeadKind head() const { return members_.front().head(); }
  std::size_t input_dim() const { return members_.front().input_dim(); }
  std::size_t head_size() const { return members_.front().spec().head_size(); }

 private:
  explicit Teacher(std::vector<Network> members) : members_(std::move(members)) {}

  std::vector<Network> members_;
};

/// Teacher outputs for a batch.
///  - kLogits: `values` holds probabilities (n x c); `logits` holds the raw
///    logits of a single teacher or log of the averaged probabilities of a
///    committee, so that softmax(logits / T) is well defined.
///  - kGaussian: `values` holds (mu..., s) rows (n x d+1); `logits` is empty.
struct TeacherOutputs {
  HeadKind kind = HeadKind::kLogits;
  Matrix values;
  Matrix logits;

  std::size_t rows() const noexcept { return values.rows(); }
  CategoricalDist distribution(std::size_t row) const;
  GaussianPred gaussian(std::size_t row) const;

  friend bool operator==(const TeacherOutputs&, const TeacherOutputs&) = default;
};

/// Committee average of member predictions (probabilities for classification).
TeacherOutputs teacher_predict(const Teacher& teacher, const Matrix& batch);

/// Inputs labelled by a teacher, stored offline.
struct TransferSet {
  Matrix inputs;
  TeacherOutputs outputs;
  /// Optional ground truth: n x 1 class indices (classification) or n x m
  /// targets (regression); empty when the inputs are synthesised.
  Matrix ground_truth;
  std::size_t classes = 0;  // class count of the ground truth, if any
  std::string provenance;

  std::size_t size() const noexcept { return inputs.rows(); }
  bool has_ground_truth() const noexcept { return ground_truth.rows() > 0; }
  void validate() const;

  friend bool operator==(const TransferSet&, const TransferSet&) = default;
};

/// Draws n inputs from `sampler` and labels them with the teacher. When every
/// row was copied from `source` (empirical sampling) its labels are attached.
TransferSet materialize_transfer_set(const Teacher& teacher, const TransferSampler& sampler, std::size_t n,
                                     Rng& rng, const Dataset* source = nullptr);

/// Training targets for distilling from a transfer set with `spec`:
/// kKDCategorical uses cached logits, kGaussianKL the full (mu, s) rows and
/// kGaussianNLL the teacher means (prediction matching).
TrainingData distillation_data(const TransferSet& set, const LossSpec& spec);

void save_transfer_set(std::ostream& out, const TransferSet& set);
TransferSet load_transfer_set(std::istream& in);

}  // namespace xcl
