#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "xcl/datasets.hpp"
#include "xcl/network.hpp"
#include "xcl/rng.hpp"
#include "xcl/teacher.hpp"

namespace xcl {

/// Partition of a held-out set into high- and low-entropy halves.
struct SplitResult {
  std::vector<std::size_t> high;  // ascending indices
  std::vector<std::size_t> low;   // ascending indices
  double avg_entropy_high = 0.0;
  double avg_entropy_low = 0.0;
};

/// Sorts by entropy (descending, ties by ascending index); the first
/// ceil(n/2) go to `high`.
SplitResult split_by_entropy(std::span<const double> entropies);
/// Normalised entropy of each teacher prediction. Throws ConfigError for
/// regression teachers.
std::vector<double> teacher_entropies(const Teacher& teacher, const Matrix& inputs);
SplitResult split_by_entropy(const Teacher& teacher, const Dataset& heldout);

/// Indices whose teacher argmax (lowest index on ties) differs from the label.
std::vector<std::size_t> zero_accuracy_subset(const Teacher& teacher, const Dataset& heldout);

enum class ErrorKind { kEuclidean, kAngular };

/// Euclidean distance, or the angle between the vectors in degrees.
double error_metric(std::span<const double> pred_mu, std::span<const double> target, ErrorKind kind);

struct MetricsReport {
  double top1 = 0.0;
  double topk = 0.0;
  std::size_t k = 1;
  double mean_error = 0.0;      // regression only
  double avg_entropy = 0.0;     // mean normalised entropy of predictions (classification)
  double avg_truth_prob = 0.0;  // mean probability on the true class (classification)
};

/// Metrics of predictions against the dataset's ground truth. `outputs`
/// follows the TeacherOutputs layout (probabilities or (mu, s) rows).
MetricsReport evaluate_outputs(const TeacherOutputs& outputs, const Dataset& data, std::size_t k = 1,
                               ErrorKind error = ErrorKind::kEuclidean);
MetricsReport evaluate(const Network& model, const Dataset& data, std::size_t k = 1,
                       ErrorKind error = ErrorKind::kEuclidean);
MetricsReport evaluate(const Teacher& model, const Dataset& data, std::size_t k = 1,
                       ErrorKind error = ErrorKind::kEuclidean);

struct CurvePoint {
  double lambda = 0.0;
  double mean_sigma = 0.0;
};

/// Mean predicted sigma = exp(s / 2) over `pairs` mixed inputs per lambda.
/// The same random pairs are reused for every grid value.
std::vector<CurvePoint> uncertainty_vs_lambda(const Teacher& model, const Dataset& data,
                                              std::span<const double> lambda_grid, std::size_t pairs, Rng& rng);
std::vector<CurvePoint> uncertainty_vs_lambda(const Network& model, const Dataset& data,
                                              std::span<const double> lambda_grid, std::size_t pairs, Rng& rng);

}  // namespace xcl
