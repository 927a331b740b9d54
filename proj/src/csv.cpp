#include "fairpost/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "fairpost/errors.hpp"

namespace fairpost {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (const char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  return fields;
}

[[noreturn]] void fail(const std::string& origin, std::size_t line_no, const std::string& message) {
  throw DataError(origin + ":" + std::to_string(line_no) + ": " + message);
}

}  // namespace

ScoredDataset parse_scores_csv_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(origin + ": empty file, expected header group,label,s0,...");
  }

  const std::vector<std::string> header = split_fields(line);
  if (header.size() < 4 || header[0] != "group" || header[1] != "label") {
    throw DataError(origin + ":1: header must be group,label,s0,...,s{k-1}");
  }
  const int k = static_cast<int>(header.size()) - 2;
  for (int i = 0; i < k; ++i) {
    if (header[i + 2] != "s" + std::to_string(i)) {
      throw DataError(origin + ":1: score column " + std::to_string(i + 3) + " must be named s" +
                      std::to_string(i));
    }
  }

  ScoredDataset data;
  data.k = k;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) {
      continue;
    }
    const std::vector<std::string> fields = split_fields(line);
    if (static_cast<int>(fields.size()) != k + 2) {
      fail(origin, line_no,
           "expected " + std::to_string(k + 2) + " fields, found " + std::to_string(fields.size()));
    }
    if (fields[0].empty()) {
      fail(origin, line_no, "empty group token");
    }
    ScoredRow row;
    row.group = data.intern_group(fields[0]);
    if (!fields[1].empty()) {
      char* end = nullptr;
      const long label = std::strtol(fields[1].c_str(), &end, 10);
      if (end == fields[1].c_str() || *end != '\0') {
        fail(origin, line_no, "label '" + fields[1] + "' is not an integer");
      }
      if (label < 0 || label >= k) {
        fail(origin, line_no,
             "label " + std::to_string(label) + " out of range [0, " + std::to_string(k) + ")");
      }
      row.label = static_cast<int>(label);
    }
    row.score.resize(k);
    for (int i = 0; i < k; ++i) {
      const std::string& field = fields[i + 2];
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0') {
        fail(origin, line_no, "score '" + field + "' is not a number");
      }
      if (!std::isfinite(v)) {
        fail(origin, line_no, "score s" + std::to_string(i) + " is not finite");
      }
      row.score[i] = v;
    }
    data.rows.push_back(std::move(row));
  }
  return data;
}

ScoredDataset parse_scores_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scores_csv_text(buffer.str(), path);
}

void write_scores_csv(const ScoredDataset& data, std::ostream& out) {
  out << "group,label";
  for (int i = 0; i < data.k; ++i) {
    out << ",s" << i;
  }
  out << '\n';
  char buf[64];
  for (const auto& row : data.rows) {
    out << data.group_names[row.group] << ',';
    if (row.label) {
      out << *row.label;
    }
    for (const double v : row.score) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      out << buf;
    }
    out << '\n';
  }
}

void write_scores_csv(const ScoredDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot open '" + path + "' for writing");
  }
  write_scores_csv(data, out);
  if (!out) {
    throw DataError("write to '" + path + "' failed");
  }
}

}  // namespace fairpost
