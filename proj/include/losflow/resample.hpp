#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "losflow/dataset.hpp"
#include "losflow/table.hpp"

namespace losflow {

/// Rows kept by random undersampling: every minority row plus an equal number
/// of majority rows drawn without replacement. Returned in ascending order.
std::vector<std::size_t> undersample_indices(std::span<const ClassLabel> labels, std::uint64_t seed);

EncounterTable undersample(const EncounterTable& table, std::span<const ClassLabel> labels, std::uint64_t seed);
Dataset undersample(const Dataset& data, std::uint64_t seed);

/// Provenance of one synthetic SMOTE row: base + lambda * (neighbor - base).
struct SmoteOrigin {
  std::size_t base = 0;      // row index in the input
  std::size_t neighbor = 0;  // row index in the input
  double lambda = 0.0;
};

struct SmoteSamples {
  ClassLabel minority = ClassLabel::SS;
  Matrix synthetic;
  std::vector<SmoteOrigin> origins;
};

/// Synthesizes minority rows until both classes have the majority's count.
/// Neighbors are the k nearest minority rows by Euclidean distance (self
/// excluded, ties broken by row index).
SmoteSamples smote_samples(const Matrix& features, std::span<const ClassLabel> labels, std::size_t k_neighbors,
                           std::uint64_t seed);

/// Input rows followed by the synthetic rows.
Dataset smote(const Dataset& data, std::size_t k_neighbors, std::uint64_t seed);

struct LabeledTable {
  EncounterTable table;
  std::vector<ClassLabel> labels;
};

/// Table form. Every feature must be numeric and complete. Synthetic
/// encounters are named "smote-<n>" and copy the base row's timestamps and LOS.
LabeledTable smote(const EncounterTable& table, std::span<const ClassLabel> labels, std::size_t k_neighbors,
                   std::uint64_t seed);

}  // namespace losflow
