#include "eigenhearts/evaluator.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "eigenhearts/error.hpp"

namespace eigenhearts {

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : counts) {
    for (std::size_t c : row) n += c;
  }
  return n;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) n += counts[i][i];
  return n;
}

std::vector<std::size_t> ConfusionMatrix::row_sums() const {
  std::vector<std::size_t> sums;
  for (const auto& row : counts) {
    std::size_t s = 0;
    for (std::size_t c : row) s += c;
    sums.push_back(s);
  }
  return sums;
}

double accuracy(std::span<const LabelPair> pairs) {
  if (pairs.empty()) fail(ErrorKind::Capacity, "accuracy of an empty prediction list");
  std::size_t correct = 0;
  for (const auto& p : pairs) correct += p.truth == p.predicted ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

ConfusionMatrix confusion(std::span<const LabelPair> pairs, const std::vector<ClassLabel>& roster) {
  std::map<int, std::size_t> index;
  for (std::size_t i = 0; i < roster.size(); ++i) index[roster[i].id] = i;
  ConfusionMatrix m;
  m.roster = roster;
  m.counts.assign(roster.size(), std::vector<std::size_t>(roster.size(), 0));
  for (const auto& p : pairs) {
    auto t = index.find(p.truth);
    auto q = index.find(p.predicted);
    if (t == index.end() || q == index.end()) {
      fail(ErrorKind::Roster, "label " + std::to_string(t == index.end() ? p.truth : p.predicted) +
                                  " is not in the class roster");
    }
    ++m.counts[t->second][q->second];
  }
  return m;
}

RunAggregate aggregate(std::span<const double> accuracies) {
  if (accuracies.empty()) fail(ErrorKind::Capacity, "aggregate of zero runs");
  RunAggregate agg;
  agg.accuracies.assign(accuracies.begin(), accuracies.end());
  const double n = static_cast<double>(accuracies.size());
  double sum = 0.0;
  for (double a : accuracies) sum += a;
  agg.mean = sum / n;
  if (accuracies.size() > 1) {
    double squares = 0.0;
    for (double a : accuracies) squares += (a - agg.mean) * (a - agg.mean);
    agg.std = std::sqrt(squares / (n - 1.0));
  }
  return agg;
}

std::string format_mean_std(const RunAggregate& agg, const std::string& separator) {
  char mean[32];
  char std[32];
  std::snprintf(mean, sizeof mean, "%.3g", agg.mean);
  std::snprintf(std, sizeof std, "%.3g", agg.std);
  return std::string(mean) + separator + std;
}

double sample_vote_accuracy(std::span<const LabelPair> pairs, std::span<const std::string> sample_of) {
  if (pairs.size() != sample_of.size()) fail(ErrorKind::Format, "sample names do not align with predictions");
  if (pairs.empty()) fail(ErrorKind::Capacity, "vote accuracy of an empty prediction list");
  // Keyed by (true class, sample) since sample ids repeat across classes.
  std::map<std::pair<int, std::string>, std::map<int, std::size_t>> votes;
  for (std::size_t i = 0; i < pairs.size(); ++i) ++votes[{pairs[i].truth, sample_of[i]}][pairs[i].predicted];
  std::size_t correct = 0;
  for (const auto& [key, tally] : votes) {
    int winner = tally.begin()->first;
    std::size_t most = 0;
    for (const auto& [label, count] : tally) {
      if (count > most) {
        most = count;
        winner = label;
      }
    }
    correct += winner == key.first ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(votes.size());
}

nlohmann::json to_json(const ConfusionMatrix& matrix) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& label : matrix.roster) classes.push_back(label.code);
  return {{"classes", classes}, {"counts", matrix.counts}};
}

nlohmann::json to_json(const RunAggregate& agg) {
  return {{"run_count", agg.accuracies.size()},
          {"accuracies", agg.accuracies},
          {"mean", agg.mean},
          {"std", agg.std},
          {"text", format_mean_std(agg)}};
}

}  // namespace eigenhearts
