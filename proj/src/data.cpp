#include "greedyqn/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string_view>

#include "greedyqn/errors.hpp"
#include "greedyqn/trace.hpp"

namespace greedyqn {

namespace {

struct Row {
  double label;
  std::vector<std::pair<std::size_t, double>> entries;  // 0-based
};

double parse_number(std::string_view tok, std::size_t line, const char* what) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    throw ParseError(std::string("non-numeric ") + what + " '" + std::string(tok) + "'", line);
  }
  return v;
}

std::size_t parse_index(std::string_view tok, std::size_t line) {
  long long v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw ParseError("non-numeric index '" + std::string(tok) + "'", line);
  }
  if (v < 1) throw ParseError("index " + std::to_string(v) + " is below 1", line);
  return static_cast<std::size_t>(v);
}

double normalize_label(double v, std::size_t line) {
  if (v == 1.0) return 1.0;
  if (v == -1.0 || v == 0.0) return -1.0;
  throw ParseError("label " + format_real(v) + " is not one of -1, 0, +1", line);
}

}  // namespace

Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> dim, std::string name) {
  std::vector<Row> rows;
  std::size_t max_index = 0;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    std::string_view view(text);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    std::vector<std::string_view> tokens;
    std::size_t pos = 0;
    while (pos < view.size()) {
      while (pos < view.size() && std::isspace(static_cast<unsigned char>(view[pos]))) ++pos;
      std::size_t end = pos;
      while (end < view.size() && !std::isspace(static_cast<unsigned char>(view[end]))) ++end;
      if (end > pos) tokens.push_back(view.substr(pos, end - pos));
      pos = end;
    }
    if (tokens.empty()) continue;

    Row row;
    row.label = normalize_label(parse_number(tokens[0], line, "label"), line);
    std::size_t prev = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto colon = tokens[t].find(':');
      if (colon == std::string_view::npos) {
        throw ParseError("expected idx:val, got '" + std::string(tokens[t]) + "'", line);
      }
      const std::size_t idx = parse_index(tokens[t].substr(0, colon), line);
      if (idx <= prev) {
        throw ParseError("index " + std::to_string(idx) + " does not follow " + std::to_string(prev), line);
      }
      prev = idx;
      row.entries.emplace_back(idx - 1, parse_number(tokens[t].substr(colon + 1), line, "value"));
      max_index = std::max(max_index, idx);
    }
    rows.push_back(std::move(row));
  }
  if (in.bad()) throw Error("read error while parsing");

  std::size_t n = max_index;
  if (dim) {
    if (*dim < max_index) {
      throw InvalidArgument("feature count " + std::to_string(*dim) + " is below the largest index " +
                            std::to_string(max_index));
    }
    n = *dim;
  }
  Dataset d;
  d.name = std::move(name);
  d.features = RowMatrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
  d.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    d.labels(static_cast<Eigen::Index>(j)) = rows[j].label;
    for (const auto& [i, v] : rows[j].entries) d.features(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
  }
  return d;
}

Dataset load_libsvm(const std::filesystem::path& path, std::optional<std::size_t> dim) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset '" + path.string() + "'");
  return parse_libsvm(in, dim, path.stem().string());
}

void write_libsvm(std::ostream& out, const Dataset& data) {
  for (Eigen::Index j = 0; j < data.features.rows(); ++j) {
    out << (data.labels(j) > 0 ? "+1" : "-1");
    for (Eigen::Index i = 0; i < data.features.cols(); ++i) {
      const double v = data.features(j, i);
      if (v != 0.0) out << ' ' << (i + 1) << ':' << format_real(v);
    }
    out << '\n';
  }
}

Dataset synthesize(std::size_t n, std::size_t m, std::uint64_t seed, double separability) {
  if (n == 0 || m == 0) throw InvalidArgument("synthesize: n and m must be positive");
  if (!(separability >= 0.0) || !std::isfinite(separability)) {
    throw InvalidArgument("synthesize: separability must be finite and >= 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector w(static_cast<Eigen::Index>(n));
  for (auto& v : w) v = normal(rng);
  w /= w.norm();

  Dataset d;
  d.name = "synthetic-n" + std::to_string(n) + "-m" + std::to_string(m) + "-s" + std::to_string(seed);
  d.features.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  d.labels.resize(static_cast<Eigen::Index>(m));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index j = 0; j < d.features.rows(); ++j) {
    double margin = 0.0;
    for (Eigen::Index i = 0; i < d.features.cols(); ++i) {
      const double c = scale * normal(rng);
      d.features(j, i) = c;
      margin += c * w(i);
    }
    const double score = separability * std::sqrt(static_cast<double>(n)) * margin + normal(rng);
    d.labels(j) = score > 0.0 ? 1.0 : -1.0;
  }
  return d;
}

std::vector<Dataset> partition_dataset(const Dataset& data, std::size_t parts) {
  const std::size_t m = data.sample_count();
  if (parts == 0 || parts > m) {
    throw InvalidArgument("cannot split " + std::to_string(m) + " samples into " + std::to_string(parts) + " parts");
  }
  std::vector<Dataset> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < parts; ++i) {
    const std::size_t size = m / parts + (i < m % parts ? 1 : 0);
    Dataset d;
    d.name = data.name + "#" + std::to_string(i + 1);
    d.features = data.features.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(size));
    d.labels = data.labels.segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(size));
    out.push_back(std::move(d));
    start += size;
  }
  return out;
}

LogisticProblem make_problem(const Dataset& data, double gamma) {
  LogisticProblem p{data.features, data.labels, gamma};
  p.validate();
  return p;
}

double accuracy(const Dataset& data, const Vector& x) {
  std::size_t hits = 0;
  for (Eigen::Index j = 0; j < data.features.rows(); ++j) {
    const double z = data.features.row(j).dot(x);
    if ((z > 0.0 ? 1.0 : -1.0) == data.labels(j)) ++hits;
  }
  return data.sample_count() == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(data.sample_count());
}

}  // namespace greedyqn
