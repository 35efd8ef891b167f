#pragma once
// Feature store ingestion and persistence.
//
// On-disk layout of a pool:
//   manifest.json  {"dim": d, "records": [{"id", "num_frames", "offset_bytes"}...]}
//   features.bin   little-endian IEEE-754 binary32, num_frames*dim per record
//                  at its declared offset, next to the manifest
//   scores.csv     header "id,mos,base_pred"; empty cell = absent value

#include <filesystem>
#include <optional>
#include <string>

#include "vqsel/types.hpp"

namespace vqsel {

struct ScoreRow {
  std::optional<double> mos;
  std::optional<double> base_pred;
};

using ScoreTable = std::map<std::string, ScoreRow>;

// Loads and validates manifest + blob. Record order follows the manifest.
FeatureStore load_feature_store(const std::filesystem::path& manifest_path);

// Writes manifest.json + features.bin into dir (created if needed), packed
// sequentially. Loading the result reproduces the store bit-exactly.
void save_feature_store(const FeatureStore& store, const std::filesystem::path& dir);

ScoreTable load_scores(const std::filesystem::path& csv_path);

// Attaches mos/base_pred to matching records. Ids unknown to the store are an
// error; records without a row keep absent scores.
void apply_scores(FeatureStore& store, const ScoreTable& scores);

void save_scores(const FeatureStore& store, const std::filesystem::path& csv_path);

}  // namespace vqsel
