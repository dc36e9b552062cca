#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "hiresim/core_model.hpp"
#include "hiresim/errors.hpp"
#include "hiresim/schemes.hpp"

namespace hiresim {

/// One row of a score table: the realized scores of one candidate's game.
/// An empty candidate-LLM score means the candidate had no LLM access.
struct ScoreTableRow {
  std::string candidate_id;
  Group group = Group::P;
  int label = 0;
  RealizedPlay play;
};

struct ScoreTable {
  std::vector<ScoreTableRow> rows;
  std::size_t hirer_draw_columns = 0;
};

namespace csv {

/// Shortest representation that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline double parse_double(const std::string& cell, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size())
    throw ConfigError("score table line " + std::to_string(line) + ": non-numeric score '" + cell + "'");
  return v;
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace csv

inline void write_score_table(std::ostream& out, const ScoreTable& table) {
  out << "candidate_id,group,label,score_original,score_candidate_llm";
  for (std::size_t k = 1; k <= table.hirer_draw_columns; ++k) out << ",hirer_draw_" << k;
  out << "\n";
  for (const auto& row : table.rows) {
    out << row.candidate_id << ',' << to_string(row.group) << ',' << row.label << ','
        << csv::format_double(row.play.original_score) << ',';
    if (row.play.candidate_draw_score) out << csv::format_double(*row.play.candidate_draw_score);
    for (std::size_t k = 0; k < table.hirer_draw_columns; ++k) {
      out << ',';
      if (k < row.play.hirer_draw_scores.size())
        out << csv::format_double(row.play.hirer_draw_scores[k]);
      else
        throw ConfigError("score table: row '" + row.candidate_id + "' has fewer hirer draws than the header");
    }
    out << "\n";
  }
}

inline ScoreTable read_score_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("score table: empty input");
  auto header = csv::split_line(line);
  const std::vector<std::string> fixed = {"candidate_id", "group", "label", "score_original",
                                          "score_candidate_llm"};
  if (header.size() < fixed.size())
    throw ConfigError("score table: header must start with candidate_id,group,label,score_original,score_candidate_llm");
  for (std::size_t i = 0; i < fixed.size(); ++i)
    if (header[i] != fixed[i])
      throw ConfigError("score table: expected header column '" + fixed[i] + "', found '" + header[i] + "'");

  ScoreTable table;
  table.hirer_draw_columns = header.size() - fixed.size();
  for (std::size_t k = 0; k < table.hirer_draw_columns; ++k) {
    std::string expected = "hirer_draw_" + std::to_string(k + 1);
    if (header[fixed.size() + k] != expected)
      throw ConfigError("score table: expected header column '" + expected + "', found '" +
                        header[fixed.size() + k] + "'");
  }

  std::size_t line_no = 1;
  std::vector<bool> seen_label(2, false);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = csv::split_line(line);
    if (cells.size() != header.size())
      throw ConfigError("score table line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()));
    ScoreTableRow row;
    row.candidate_id = cells[0];
    if (row.candidate_id.empty())
      throw ConfigError("score table line " + std::to_string(line_no) + ": empty candidate_id");
    if (cells[1] == "P") row.group = Group::P;
    else if (cells[1] == "U") row.group = Group::U;
    else throw ConfigError("score table line " + std::to_string(line_no) + ": group must be P or U");
    if (cells[2] == "0") row.label = 0;
    else if (cells[2] == "1") row.label = 1;
    else throw ConfigError("score table line " + std::to_string(line_no) + ": label must be 0 or 1");
    row.play.original_score = csv::parse_double(cells[3], line_no);
    if (!cells[4].empty()) row.play.candidate_draw_score = csv::parse_double(cells[4], line_no);
    for (std::size_t k = 0; k < table.hirer_draw_columns; ++k)
      row.play.hirer_draw_scores.push_back(csv::parse_double(cells[5 + k], line_no));
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) throw ConfigError("score table: no data rows");

  // candidate_id uniqueness
  std::vector<std::string> ids;
  ids.reserve(table.rows.size());
  for (const auto& row : table.rows) ids.push_back(row.candidate_id);
  std::sort(ids.begin(), ids.end());
  auto dup = std::adjacent_find(ids.begin(), ids.end());
  if (dup != ids.end()) throw ConfigError("score table: duplicate candidate_id '" + *dup + "'");
  return table;
}

}  // namespace hiresim
