#pragma once
// Single human-readable run configuration: one JSON file whose sections map
// onto the train / selection / gmad / synth config structs plus a global
// seed. Unknown keys are rejected; CLI flags override file values.

#include <cstdint>
#include <filesystem>
#include <string>

#include "vqsel/bench.hpp"
#include "vqsel/gmad.hpp"
#include "vqsel/ranker.hpp"
#include "vqsel/selection.hpp"
#include "vqsel/types.hpp"

namespace vqsel {

struct RunConfig {
  std::uint64_t seed = 1234;
  TrainConfig train;
  Pooling pooling = Pooling::kMean;
  SelectionConfig selection;
  GmadConfig gmad;
  SynthConfig synth;
  std::size_t bench_num_seeds = 10;
  double bench_ridge_reg = 1e-2;
};

RunConfig load_run_config(const std::filesystem::path& path);

// Budget text: a value containing '.', 'e' or 'E' parses as a fraction in
// (0, 1]; a plain integer parses as an absolute count.
Budget parse_budget(const std::string& text);

}  // namespace vqsel
