#pragma once

#include <ostream>
#include <string>

#include "fairpost/core.hpp"

namespace fairpost {

// Reads a scores CSV with header `group,label,s0,...,s{k-1}`.  The group is
// any token (indexed by first appearance), the label is an integer class in
// [0, k) or empty for unlabeled rows, and the class count is inferred from
// the header.  Parse failures carry the offending line number.
ScoredDataset parse_scores_csv(const std::string& path);
ScoredDataset parse_scores_csv_text(const std::string& text, const std::string& origin);

// Writes the matching CSV.  Scores are printed with 17 significant digits so
// parse(write(data)) reproduces the dataset exactly.
void write_scores_csv(const ScoredDataset& data, std::ostream& out);
void write_scores_csv(const ScoredDataset& data, const std::string& path);

}  // namespace fairpost
