#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "eigenhearts/image.hpp"

namespace eigenhearts {

struct LabelPair {
  int truth = 0;
  int predicted = 0;

  friend bool operator==(const LabelPair&, const LabelPair&) = default;
};

/// Rows are true classes, columns predicted classes, both in roster order.
struct ConfusionMatrix {
  std::vector<ClassLabel> roster;
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const;
  std::size_t trace() const;
  std::vector<std::size_t> row_sums() const;
};

/// Mean and (n-1) standard deviation of per-run accuracies; std is 0 for a
/// single run.
struct RunAggregate {
  std::vector<double> accuracies;
  double mean = 0.0;
  double std = 0.0;
};

double accuracy(std::span<const LabelPair> pairs);

ConfusionMatrix confusion(std::span<const LabelPair> pairs, const std::vector<ClassLabel>& roster);

RunAggregate aggregate(std::span<const double> accuracies);

/// "0.97 ± 0.027": three significant figures.
std::string format_mean_std(const RunAggregate& agg, const std::string& separator = " ± ");

/// Majority vote over the frames of each sample; `sample_of[i]` names the
/// sample of pair i. Ties go to the lowest class id.
double sample_vote_accuracy(std::span<const LabelPair> pairs, std::span<const std::string> sample_of);

nlohmann::json to_json(const ConfusionMatrix& matrix);
nlohmann::json to_json(const RunAggregate& agg);

}  // namespace eigenhearts
