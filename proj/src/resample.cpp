#include "losflow/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "losflow/kernels.hpp"
#include "losflow/random.hpp"

namespace losflow {

namespace {

struct ClassSplit {
  std::vector<std::size_t> ss, ls;
};

ClassSplit split_by_class(std::span<const ClassLabel> labels) {
  ClassSplit s;
  for (std::size_t i = 0; i < labels.size(); ++i) (is_ls(labels[i]) ? s.ls : s.ss).push_back(i);
  if (s.ss.empty() || s.ls.empty()) throw DataError("resampling requires both classes to be present");
  return s;
}

}  // namespace

std::vector<std::size_t> undersample_indices(std::span<const ClassLabel> labels, std::uint64_t seed) {
  auto split = split_by_class(labels);
  auto& minority = split.ss.size() <= split.ls.size() ? split.ss : split.ls;
  auto& majority = split.ss.size() <= split.ls.size() ? split.ls : split.ss;
  Rng rng(seed);
  rng.shuffle(majority);
  majority.resize(minority.size());
  std::vector<std::size_t> keep = minority;
  keep.insert(keep.end(), majority.begin(), majority.end());
  std::sort(keep.begin(), keep.end());
  return keep;
}

EncounterTable undersample(const EncounterTable& table, std::span<const ClassLabel> labels, std::uint64_t seed) {
  if (labels.size() != table.size()) throw InvariantError("undersample: label count does not match rows");
  return table.select_rows(undersample_indices(labels, seed));
}

Dataset undersample(const Dataset& data, std::uint64_t seed) {
  return data.select(undersample_indices(data.labels, seed));
}

SmoteSamples smote_samples(const Matrix& features, std::span<const ClassLabel> labels, std::size_t k_neighbors,
                           std::uint64_t seed) {
  if (labels.size() != features.rows()) throw InvariantError("smote: label count does not match rows");
  if (k_neighbors == 0) throw DataError("smote: k_neighbors must be positive");
  const auto split = split_by_class(labels);
  SmoteSamples out;
  out.minority = split.ss.size() <= split.ls.size() ? ClassLabel::SS : ClassLabel::LS;
  const auto& minority = out.minority == ClassLabel::SS ? split.ss : split.ls;
  const auto& majority = out.minority == ClassLabel::SS ? split.ls : split.ss;
  if (minority.size() <= k_neighbors) {
    throw DataError("smote: minority class has " + std::to_string(minority.size()) + " rows, needs more than k=" +
                    std::to_string(k_neighbors));
  }
  out.synthetic = Matrix(0, features.cols());
  const std::size_t needed = majority.size() - minority.size();
  if (needed == 0) return out;

  // k nearest minority neighbors of every minority row, as positions in `minority`.
  const std::size_t m = minority.size();
  std::vector<std::vector<std::size_t>> neighbors(m);
  std::vector<std::pair<double, std::size_t>> dist(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto xi = features.row(minority[i]);
    for (std::size_t j = 0; j < m; ++j) {
      dist[j] = {j == i ? HUGE_VAL : kernels::squared_distance(xi, features.row(minority[j])), j};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_neighbors), dist.end());
    for (std::size_t t = 0; t < k_neighbors; ++t) neighbors[i].push_back(dist[t].second);
  }

  Rng rng(seed);
  std::vector<double> row(features.cols());
  for (std::size_t s = 0; s < needed; ++s) {
    const std::size_t bi = rng.index(m);
    const std::size_t ni = neighbors[bi][rng.index(k_neighbors)];
    const double lambda = rng.uniform();
    const auto base = features.row(minority[bi]);
    const auto nb = features.row(minority[ni]);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = base[c] + lambda * (nb[c] - base[c]);
    out.synthetic.append_row(row);
    out.origins.push_back({minority[bi], minority[ni], lambda});
  }
  return out;
}

Dataset smote(const Dataset& data, std::size_t k_neighbors, std::uint64_t seed) {
  auto samples = smote_samples(data.features, data.labels, k_neighbors, seed);
  Dataset out = data;
  for (std::size_t s = 0; s < samples.synthetic.rows(); ++s) {
    out.features.append_row(samples.synthetic.row(s));
    out.labels.push_back(samples.minority);
    if (!out.ids.empty()) out.ids.push_back("smote-" + std::to_string(s));
  }
  return out;
}

LabeledTable smote(const EncounterTable& table, std::span<const ClassLabel> labels, std::size_t k_neighbors,
                   std::uint64_t seed) {
  if (labels.size() != table.size()) throw InvariantError("smote: label count does not match rows");
  const Matrix features = table.to_matrix();
  auto samples = smote_samples(features, labels, k_neighbors, seed);
  LabeledTable out{table, std::vector<ClassLabel>(labels.begin(), labels.end())};
  for (std::size_t s = 0; s < samples.synthetic.rows(); ++s) {
    Encounter e = table.encounter(samples.origins[s].base);
    e.encounter_id = "smote-" + std::to_string(s);
    e.patient_hash.clear();
    const auto values = samples.synthetic.row(s);
    std::vector<FeatureValue> cells(values.begin(), values.end());
    out.table.append_row(std::move(e), std::move(cells));
    out.labels.push_back(samples.minority);
  }
  return out;
}

}  // namespace losflow
