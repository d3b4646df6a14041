#include "crl/dataset.hpp"

#include "crl/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>

namespace crl {

Dataset::Dataset(std::size_t d, std::vector<std::size_t> counts) : dim(d), class_counts(std::move(counts)) {}

std::span<const double> Dataset::feature(std::size_t i) const {
  return std::span<const double>(features).subspan(i * dim, dim);
}

std::vector<int> Dataset::label_column(std::size_t attribute) const {
  std::vector<int> column(size());
  for (std::size_t i = 0; i < size(); ++i) column[i] = label(i, attribute);
  return column;
}

std::vector<std::size_t> Dataset::class_totals(std::size_t attribute) const {
  std::vector<std::size_t> totals(class_counts.at(attribute), 0);
  for (std::size_t i = 0; i < size(); ++i) ++totals.at(static_cast<std::size_t>(label(i, attribute)));
  return totals;
}

void Dataset::append(std::int64_t id, std::span<const double> x, std::span<const int> y) {
  if (x.size() != dim) throw ContractError("sample has " + std::to_string(x.size()) + " features, expected " +
                                           std::to_string(dim));
  if (y.size() != num_attributes()) {
    throw ContractError("sample has " + std::to_string(y.size()) + " labels, expected " +
                        std::to_string(num_attributes()));
  }
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (y[j] < 0 || static_cast<std::size_t>(y[j]) >= class_counts[j]) {
      throw ContractError("label " + std::to_string(y[j]) + " out of range for attribute " + std::to_string(j));
    }
  }
  ids.push_back(id);
  features.insert(features.end(), x.begin(), x.end());
  labels.insert(labels.end(), y.begin(), y.end());
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out(dim, class_counts);
  out.ids.reserve(indices.size());
  out.features.reserve(indices.size() * dim);
  out.labels.reserve(indices.size() * num_attributes());
  for (auto i : indices) {
    out.ids.push_back(ids.at(i));
    auto x = feature(i);
    out.features.insert(out.features.end(), x.begin(), x.end());
    for (std::size_t j = 0; j < num_attributes(); ++j) out.labels.push_back(label(i, j));
  }
  return out;
}

Tensor Dataset::feature_matrix(std::span<const std::size_t> indices) const {
  std::vector<double> data;
  data.reserve(indices.size() * dim);
  for (auto i : indices) {
    auto x = feature(i);
    data.insert(data.end(), x.begin(), x.end());
  }
  return Tensor::matrix(indices.size(), dim, std::move(data));
}

Tensor Dataset::feature_matrix() const {
  std::vector<std::size_t> all(size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return feature_matrix(all);
}

void Dataset::validate() const {
  if (dim == 0) throw ContractError("dataset dimension must be positive");
  if (class_counts.empty()) throw ContractError("dataset needs at least one attribute");
  for (auto c : class_counts) {
    if (c < 2) throw ContractError("every attribute needs at least two classes");
  }
  if (features.size() != size() * dim || labels.size() != size() * num_attributes()) {
    throw ContractError("dataset storage does not match its sample count");
  }
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = 0; j < num_attributes(); ++j) {
      auto a = label(i, j);
      if (a < 0 || static_cast<std::size_t>(a) >= class_counts[j]) {
        throw ContractError("sample " + std::to_string(i) + " has label " + std::to_string(a) +
                            " out of range for attribute " + std::to_string(j));
      }
    }
  }
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
  dataset.validate();
  out << "dim=" << dataset.dim << ",attrs=" << dataset.num_attributes() << ",classes=";
  for (std::size_t j = 0; j < dataset.num_attributes(); ++j) {
    if (j) out << ';';
    out << dataset.class_counts[j];
  }
  out << '\n';
  char buffer[40];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out << dataset.ids[i];
    for (double v : dataset.feature(i)) {
      *std::to_chars(buffer, buffer + sizeof buffer - 1, v).ptr = '\0';
      out << ',' << buffer;
    }
    for (std::size_t j = 0; j < dataset.num_attributes(); ++j) out << ',' << dataset.label(i, j);
    out << '\n';
  }
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_dataset(dataset, out);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

namespace {

std::vector<std::string_view> split(std::string_view text, char delimiter) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(delimiter, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

template <typename T>
T parse_number(std::string_view token, std::size_t line, const char* what) {
  T value{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError(std::string("invalid ") + what + " '" + std::string(token) + "'", line);
  }
  return value;
}

std::string_view header_value(std::string_view field, std::string_view key, std::size_t line) {
  if (field.substr(0, key.size()) != key || field.size() <= key.size() || field[key.size()] != '=') {
    throw ParseError("malformed header, expected '" + std::string(key) + "=...'", line);
  }
  return field.substr(key.size() + 1);
}

} // namespace

Dataset read_dataset(std::istream& in) {
  std::string text;
  std::size_t line_no = 1;
  if (!std::getline(in, text)) throw ParseError("missing header", line_no);
  if (!text.empty() && text.back() == '\r') text.pop_back();

  auto header = split(text, ',');
  if (header.size() != 3) throw ParseError("malformed header", line_no);
  const auto dim = parse_number<std::size_t>(header_value(header[0], "dim", line_no), line_no, "dim");
  const auto attrs = parse_number<std::size_t>(header_value(header[1], "attrs", line_no), line_no, "attrs");
  std::vector<std::size_t> classes;
  for (auto part : split(header_value(header[2], "classes", line_no), ';')) {
    classes.push_back(parse_number<std::size_t>(part, line_no, "class count"));
  }
  if (dim == 0 || attrs == 0 || classes.size() != attrs) {
    throw ParseError("header declares " + std::to_string(attrs) + " attributes but lists " +
                     std::to_string(classes.size()) + " class counts",
                     line_no);
  }
  for (auto c : classes) {
    if (c < 2) throw ParseError("attribute with fewer than two classes", line_no);
  }

  Dataset dataset(dim, classes);
  std::vector<double> x(dim);
  std::vector<int> y(attrs);
  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    auto fields = split(text, ',');
    if (fields.size() != 1 + dim + attrs) {
      throw ParseError("expected " + std::to_string(1 + dim + attrs) + " fields (id, " + std::to_string(dim) +
                       " features, " + std::to_string(attrs) + " labels), found " + std::to_string(fields.size()),
                       line_no);
    }
    const auto id = parse_number<std::int64_t>(fields[0], line_no, "id");
    for (std::size_t d = 0; d < dim; ++d) x[d] = parse_number<double>(fields[1 + d], line_no, "feature");
    for (std::size_t j = 0; j < attrs; ++j) {
      y[j] = parse_number<int>(fields[1 + dim + j], line_no, "label");
      if (y[j] < 0 || static_cast<std::size_t>(y[j]) >= classes[j]) {
        throw ParseError("label " + std::to_string(y[j]) + " out of range for attribute " + std::to_string(j),
                         line_no);
      }
    }
    dataset.append(id, x, y);
  }
  return dataset;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  return read_dataset(in);
}

} // namespace crl
