#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rsv/components.hpp"
#include "rsv/metrics.hpp"
#include "rsv/roiar.hpp"
#include "rsv/tiling.hpp"
#include "rsv/trainer.hpp"

namespace rsv::cli {

namespace fs = std::filesystem;

/// File layout written by `tile` inside its output directory.
struct TileLayout {
  static fs::path manifest(const fs::path& dir) { return dir / "manifest.tsv"; }
  static fs::path image(const fs::path& dir, const std::string& id) { return dir / (id + ".pnm"); }
  static fs::path label(const fs::path& dir, const std::string& id) { return dir / (id + ".label.pgm"); }
  static fs::path source(const fs::path& dir, const std::string& stem) { return dir / (stem + ".source.json"); }
};

struct TileOptions {
  fs::path input;
  fs::path out_dir;
  int patch_height = 416;
  int patch_width = 608;
  std::string stem;              // defaults to the input file stem
  std::optional<fs::path> mask;  // ground truth tiled alongside the image
  SplitSpec split;
};

std::vector<ManifestRecord> cmd_tile(const TileOptions& o);

struct PredictOptions {
  std::string backend;           // external:<dir> | fcn:<checkpoint>
  fs::path mosaic;
  fs::path out;                  // assembled probability map (.f32)
  int patch_height = 416;
  int patch_width = 608;
  std::string stem;              // patch-id stem; defaults to the mosaic file stem
  int jobs = 1;
};

ProbMap cmd_predict(const PredictOptions& o);

struct PostprocessOptions {
  fs::path prob;
  fs::path out;
  PostprocessParams params;
  std::optional<fs::path> debug_dir;
  std::optional<fs::path> within;  // output is intersected with this mask
};

BinaryMask cmd_postprocess(const PostprocessOptions& o);

struct RoiarOptions {
  fs::path reservoir;
  fs::path out;
  RoiSpec spec;
  std::optional<fs::path> mosaic;      // masked with the RoI when given
  std::optional<fs::path> masked_out;
};

BinaryMask cmd_roiar(const RoiarOptions& o, std::ostream& log);

struct EvaluateOptions {
  fs::path pred;
  fs::path gt;
  std::optional<fs::path> scope;
  std::optional<fs::path> regions;
  ReportFormat format = ReportFormat::tsv;
  std::string positive_name = "positive";
  std::string negative_name = "negative";
  std::optional<fs::path> out;
};

/// Returns the report text and writes it to `out` when set.
std::string cmd_evaluate(const EvaluateOptions& o);

struct ModelConfig {
  std::vector<int> widths = TinyFcn::default_widths();
  std::uint64_t seed = 0;
};

struct OversampleConfig {
  bool enabled = true;
  std::size_t min_positive_px = 200;
  int copies = 2;
};

struct TrainOptions {
  std::vector<fs::path> data_dirs;  // each produced by `tile --mask`
  fs::path out;                     // checkpoint (.f32)
  std::optional<fs::path> history;
  TrainConfig train;
  ModelConfig model;
  OversampleConfig oversample;
};

TrainResult cmd_train(const TrainOptions& o, std::ostream& log);

struct LossesCheckOptions {
  int batches = 50;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double step = 1e-5;
  double tolerance = 1e-6;
  LossParams params;
};

struct LossesCheckResult {
  bool ok = true;
  std::string report;
};

LossesCheckResult cmd_losses_check(const LossesCheckOptions& o);

/// Patch dims, backend and decision threshold for one segmentation phase.
struct PhaseConfig {
  std::string backend;
  int patch_height = 416;
  int patch_width = 608;
  std::string stem;  // empty: the input file stem
  double threshold = 0.5;
};

struct EvaluationConfig {
  std::optional<fs::path> reservoir_gt;
  std::optional<fs::path> objects_gt;
  std::optional<fs::path> regions;
  ReportFormat format = ReportFormat::tsv;
};

struct PipelineConfig {
  fs::path mosaic;
  fs::path output_dir;
  PhaseConfig reservoir;
  PostprocessParams postprocess;
  RoiSpec roi;
  PhaseConfig objects{"", 384, 384, "", 0.5};
  EvaluationConfig evaluation;
  TrainOptions train;  // validated only; the pipeline consumes trained backends
};

/// Parses a JSON document. Relative paths resolve against `base_dir`.
/// Unknown or missing required fields raise ValidationError naming the field.
PipelineConfig parse_pipeline_config(const std::string& text, const fs::path& base_dir);
PipelineConfig load_pipeline_config(const fs::path& path);

/// Training hyper-parameters from a JSON object (same keys as the pipeline's
/// `train` section).
void parse_train_section(const std::string& text, TrainOptions& o);

/// Artifact paths written by the pipeline inside output_dir.
struct PipelineLayout {
  fs::path reservoir_prob, reservoir, debug_dir, roi, masked, objects_prob, objects, reports_dir;
  static PipelineLayout in(const fs::path& dir);
};

/// Runs predict → postprocess → roiar → predict → threshold-in-RoI →
/// evaluate by calling the individual commands.
PipelineLayout cmd_pipeline(const PipelineConfig& c, int jobs, std::ostream& log);

}  // namespace rsv::cli
