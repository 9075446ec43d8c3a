#pragma once

// End-to-end runs: design -> quant -> classify -> mine, driven by a run file
// in the description record format, e.g.
//
//   EXPERIMENT PINE_DEMO
//   STAGES design quant classify mine
//   SEED 42
//   PRINTING_CONFIGURATION Stanford4x16x24 4 16 24 QUADRANTS
//   REPLICATES 4
//   ARRAY_TYPES 2
//   INPUT clones clones.txt
//   INPUT pixels pixels.tsv
//   INPUT mask mask.tsv
//   INPUT pairing pairing.expd
//   INPUT categories categories.tsv
//   INPUT hierarchy hierarchy.tsv
//   OUTPUT_DIR out
//   PARAM alpha 0.05
//
// Input paths are relative to the run file. Every run writes manifest.expd
// into the output directory; manifests are descriptions too, so two runs can
// be compared with diff_descriptions.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "espresso/descriptor.hpp"
#include "espresso/design.hpp"
#include "espresso/error.hpp"

namespace espresso::pipeline {

enum class Stage { Design, Quant, Classify, Mine };

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view name);

// A stage input that does not exist (exit status 2).
class MissingInput : public Error {
 public:
  using Error::Error;
};

struct PipelineRun {
  std::string experiment;
  std::vector<Stage> stages;  // kept in pipeline order
  std::filesystem::path base_dir;
  // Logical name -> path as written in the run file (relative to base_dir).
  std::map<std::string, std::string> inputs;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  std::optional<design::PrintingConfiguration> config;
  int replicates = 4;
  int array_types = 2;
  // Parameter text exactly as recorded in the manifest. Known keys:
  // spot_alpha, channel, saturation, alpha, min_support, min_confidence,
  // max_body_length.
  std::map<std::string, std::string> params;

  std::filesystem::path input_path(const std::string& name) const;
};

PipelineRun parse_run(const descriptor::ExperimentDescription& desc, const std::filesystem::path& base_dir);
PipelineRun load_run(const std::filesystem::path& run_file);

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 1 stage failure, 2 missing input
  std::string message;
  std::vector<std::filesystem::path> written;
};

RunOutcome run_pipeline(const PipelineRun& run);

inline constexpr std::string_view kManifestName = "manifest.expd";

}  // namespace espresso::pipeline
