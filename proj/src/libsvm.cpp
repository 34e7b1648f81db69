#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dqn/errors.hpp"
#include "dqn/problems.hpp"

namespace dqn {

namespace {

struct SparseRow {
  double label;
  std::vector<std::pair<std::size_t, double>> entries;  // 0-based index
};

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw ConfigError("libsvm line " + std::to_string(line_no) + ": " + what);
}

double parse_double(std::string_view token, std::size_t line_no) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value))
    fail(line_no, "cannot parse number '" + std::string(token) + "'");
  return value;
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    std::size_t end = pos;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
    if (end > pos) tokens.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return tokens;
}

}  // namespace

Dataset load_libsvm(std::istream& in, std::size_t declared_dim) {
  std::vector<SparseRow> rows;
  std::map<double, std::size_t> first_line_of_label;
  std::size_t dim = declared_dim;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto tokens = split_whitespace(view);
    if (tokens.empty()) continue;

    SparseRow row;
    row.label = parse_double(tokens[0], line_no);
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto colon = tokens[t].find(':');
      if (colon == std::string_view::npos) fail(line_no, "expected idx:val, got '" + std::string(tokens[t]) + "'");
      const auto idx_text = tokens[t].substr(0, colon);
      std::size_t idx = 0;
      const auto [ptr, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), idx);
      if (ec != std::errc() || ptr != idx_text.data() + idx_text.size())
        fail(line_no, "bad feature index '" + std::string(idx_text) + "'");
      if (idx == 0) fail(line_no, "feature indices are 1-based");
      row.entries.emplace_back(idx - 1, parse_double(tokens[t].substr(colon + 1), line_no));
      dim = std::max(dim, idx);
    }
    first_line_of_label.emplace(row.label, line_no);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("libsvm: no samples found");

  // Pick the first admissible binary encoding that covers every label seen.
  const std::vector<std::pair<std::pair<double, double>, std::pair<double, double>>> encodings = {
      {{-1.0, 1.0}, {-1.0, 1.0}}, {{0.0, 1.0}, {-1.0, 1.0}}, {{1.0, 2.0}, {1.0, -1.0}}};
  const std::pair<double, double>* chosen = nullptr;
  const std::pair<double, double>* mapped = nullptr;
  for (const auto& [raw, to] : encodings) {
    const bool covers = std::all_of(first_line_of_label.begin(), first_line_of_label.end(),
                                    [&](const auto& kv) { return kv.first == raw.first || kv.first == raw.second; });
    if (covers) {
      chosen = &raw;
      mapped = &to;
      break;
    }
  }
  if (chosen == nullptr) {
    // Report the first label (in file order) that breaks the {-1, +1} encoding.
    std::size_t worst_line = line_no + 1;
    double worst = 0.0;
    for (const auto& [label, at] : first_line_of_label) {
      if (label != -1.0 && label != 1.0 && at < worst_line) {
        worst_line = at;
        worst = label;
      }
    }
    fail(worst_line, "unknown label " + std::to_string(worst) + " (expected -1/+1, 0/1 or 1/2)");
  }

  Dataset data{Matrix(rows.size(), dim), Vector(rows.size())};
  for (std::size_t s = 0; s < rows.size(); ++s) {
    data.labels[s] = rows[s].label == chosen->first ? mapped->first : mapped->second;
    for (auto [idx, val] : rows[s].entries) data.features(s, idx) = val;
  }
  return data;
}

Dataset load_libsvm(const std::string& path, std::size_t declared_dim) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset '" + path + "'");
  return load_libsvm(in, declared_dim);
}

}  // namespace dqn
