#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "toxspan/corpus.hpp"
#include "toxspan/error.hpp"

// Prediction files: one line per comment, tab-separated
//
//   <comment id>\t[<offset>, <offset>, ...]
//
// Comment ids are the zero-based row order of the corpus the predictions
// were made for, so a prediction file and its corpus align by position.

namespace toxspan {

struct PredictionRecord {
  int32_t comment_id = 0;
  OffsetSet offsets;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

inline void write_predictions(std::ostream& out, std::span<const OffsetSet> predictions) {
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    out << i << '\t' << format_offset_list(predictions[i]) << '\n';
  }
}

inline void write_predictions_file(const std::string& path,
                                   std::span<const OffsetSet> predictions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open predictions file for writing: " + path);
  write_predictions(out, predictions);
  out.close();
  if (!out) throw Error("predictions write failed: " + path);
}

inline std::vector<PredictionRecord> parse_predictions(std::istream& in,
                                                       std::string_view name = "<stream>") {
  std::vector<PredictionRecord> records;
  std::string line;
  int64_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(std::string(name) + " line " + std::to_string(row) + ": expected <id>\\t<offsets>");
    }
    PredictionRecord rec;
    try {
      std::size_t used = 0;
      rec.comment_id = std::stoi(line.substr(0, tab), &used);
      if (used != tab) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw Error(std::string(name) + " line " + std::to_string(row) + ": bad comment id '" +
                  line.substr(0, tab) + "'");
    }
    try {
      rec.offsets = parse_offset_list(std::string_view(line).substr(tab + 1));
    } catch (const Error& e) {
      throw Error(std::string(name) + " line " + std::to_string(row) + ": " + e.what());
    }
    records.push_back(std::move(rec));
  }
  return records;
}

inline std::vector<PredictionRecord> parse_predictions_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open predictions file: " + path);
  return parse_predictions(in, path);
}

/// Validates that records cover ids 0..n-1 in order and strips the ids.
inline std::vector<OffsetSet> predictions_in_order(const std::vector<PredictionRecord>& records,
                                                   std::string_view name = "<stream>") {
  std::vector<OffsetSet> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].comment_id != static_cast<int32_t>(i)) {
      throw Error(std::string(name) + ": record " + std::to_string(i) + " has comment id " +
                  std::to_string(records[i].comment_id) + ", expected " + std::to_string(i));
    }
    out.push_back(records[i].offsets);
  }
  return out;
}

}  // namespace toxspan
