#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "greedyqn/linalg.hpp"
#include "greedyqn/objective.hpp"

namespace greedyqn {

/// Dense labelled samples; labels in {-1, +1}.
struct Dataset {
  RowMatrix features;  // m x n
  Vector labels;
  std::string name;

  std::size_t sample_count() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
};

/// Parses "label idx:val idx:val ..." lines (1-based ascending indices).
/// Labels 0/1 and -1/+1 are accepted; 0 maps to -1. `dim` widens the
/// feature count beyond the largest index seen.
Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> dim = std::nullopt, std::string name = "");
Dataset load_libsvm(const std::filesystem::path& path, std::optional<std::size_t> dim = std::nullopt);

/// Writes nonzero entries with round-trip precision.
void write_libsvm(std::ostream& out, const Dataset& data);

/// Planted linear model: rows c_j ~ N(0, I/n), unit w*, and
/// b_j = sign(separability * sqrt(n) <c_j, w*> + N(0, 1)).
Dataset synthesize(std::size_t n, std::size_t m, std::uint64_t seed, double separability = 3.0);

/// Contiguous row blocks whose sizes differ by at most one, larger blocks first.
std::vector<Dataset> partition_dataset(const Dataset& data, std::size_t parts);

/// Logistic problem over the dataset with regularization gamma.
LogisticProblem make_problem(const Dataset& data, double gamma);

/// Fraction of samples with sign(<c_j, x>) == b_j.
double accuracy(const Dataset& data, const Vector& x);

}  // namespace greedyqn
