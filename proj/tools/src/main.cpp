#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "rsv/cli/commands.hpp"
#include "rsv/error.hpp"
#include "rsv/io.hpp"

namespace {

using namespace rsv;
using namespace rsv::cli;

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reservoir and man-made object segmentation toolkit"};
  app.require_subcommand(1);
  int jobs = 1;
  app.add_option("--jobs", jobs, "Concurrent patch workers")->check(CLI::PositiveNumber);

  // tile
  TileOptions tile;
  std::string tile_mask;
  auto* c_tile = app.add_subcommand("tile", "Cut a mosaic into fixed-size patches and write a manifest");
  c_tile->add_option("--input", tile.input, "Mosaic (PGM/PPM)")->required();
  c_tile->add_option("--out", tile.out_dir, "Output directory")->required();
  c_tile->add_option("--patch-height", tile.patch_height)->capture_default_str();
  c_tile->add_option("--patch-width", tile.patch_width)->capture_default_str();
  c_tile->add_option("--stem", tile.stem, "Patch id stem (default: input file stem)");
  c_tile->add_option("--mask", tile_mask, "Ground-truth mask tiled alongside");
  c_tile->add_option("--split-seed", tile.split.rng_seed)->capture_default_str();
  c_tile->add_option("--train-frac", tile.split.train_frac)->capture_default_str();
  c_tile->add_option("--val-frac", tile.split.val_frac)->capture_default_str();
  c_tile->add_option("--test-frac", tile.split.test_frac)->capture_default_str();

  // predict
  PredictOptions pred;
  auto* c_pred = app.add_subcommand("predict", "Tile, segment and reassemble a probability map");
  c_pred->add_option("--backend", pred.backend, "external:<dir> or fcn:<checkpoint.f32>")->required();
  c_pred->add_option("--mosaic", pred.mosaic)->required();
  c_pred->add_option("--out", pred.out, "Probability map (.f32)")->required();
  c_pred->add_option("--patch-height", pred.patch_height)->capture_default_str();
  c_pred->add_option("--patch-width", pred.patch_width)->capture_default_str();
  c_pred->add_option("--stem", pred.stem, "Patch id stem (default: mosaic file stem)");

  // postprocess
  PostprocessOptions post;
  std::string post_debug, post_within;
  bool no_rules = false, no_morph = false;
  auto* c_post = app.add_subcommand("postprocess", "Threshold and clean a reservoir probability map");
  c_post->add_option("--prob", post.prob)->required();
  c_post->add_option("--out", post.out)->required();
  c_post->add_option("--threshold", post.params.threshold)->capture_default_str();
  c_post->add_option("--kernel-m", post.params.kernel_m, "Opening/closing square side in meters")
      ->capture_default_str();
  c_post->add_option("--size-ratio", post.params.size_ratio)->capture_default_str();
  c_post->add_option("--max-dist-m", post.params.max_dist_m)->capture_default_str();
  c_post->add_flag("--no-rules", no_rules, "Skip hole filling and component pruning");
  c_post->add_flag("--no-morphology", no_morph, "Skip opening and closing");
  c_post->add_option("--debug-dir", post_debug, "Write every intermediate stage here");
  c_post->add_option("--within", post_within, "Intersect the result with this mask");

  // roiar
  RoiarOptions roi;
  std::string roi_method = "morph", roi_mosaic, roi_masked;
  auto* c_roi = app.add_subcommand("roiar", "Extract the region of interest around the reservoir");
  c_roi->add_option("--reservoir", roi.reservoir)->required();
  c_roi->add_option("--out", roi.out)->required();
  c_roi->add_option("--method", roi_method, "boxes|morph")->capture_default_str();
  c_roi->add_option("--margin-m", roi.spec.margin_m)->capture_default_str();
  c_roi->add_option("--epsilon-px", roi.spec.simplify_epsilon_px)->capture_default_str();
  c_roi->add_option("--mosaic", roi_mosaic, "Mosaic to mask with the RoI");
  c_roi->add_option("--masked-out", roi_masked, "Masked mosaic output");

  // evaluate
  EvaluateOptions ev;
  std::string ev_scope, ev_regions, ev_format = "tsv", ev_out;
  auto* c_ev = app.add_subcommand("evaluate", "Per-class precision, recall and F1");
  c_ev->add_option("--pred", ev.pred)->required();
  c_ev->add_option("--gt", ev.gt)->required();
  c_ev->add_option("--scope", ev_scope, "Score only pixels inside this mask");
  c_ev->add_option("--regions", ev_regions, "Label image; one report per nonzero label");
  c_ev->add_option("--format", ev_format, "tsv|json-lines")->capture_default_str();
  c_ev->add_option("--positive-name", ev.positive_name)->capture_default_str();
  c_ev->add_option("--negative-name", ev.negative_name)->capture_default_str();
  c_ev->add_option("--out", ev_out, "Write the report here instead of stdout");

  // train
  TrainOptions tr;
  std::string tr_config, tr_history, tr_loss;
  std::vector<std::string> tr_data;
  int tr_epochs = 0;
  double tr_lr = 0.0;
  std::int64_t tr_seed = -1;
  bool tr_no_oversample = false;
  auto* c_tr = app.add_subcommand("train", "Train the built-in fully convolutional model");
  c_tr->add_option("--data", tr_data, "Directories written by `tile --mask`")->required();
  c_tr->add_option("--out", tr.out, "Checkpoint (.f32)")->required();
  c_tr->add_option("--config", tr_config, "JSON with training settings");
  c_tr->add_option("--history", tr_history, "Per-epoch history (TSV)");
  c_tr->add_option("--epochs", tr_epochs, "Override max_epochs");
  c_tr->add_option("--lr", tr_lr, "Override initial_lr");
  c_tr->add_option("--loss", tr_loss, "bce|balanced_ce|focal|dice|combined");
  c_tr->add_option("--seed", tr_seed, "Override the training seed");
  c_tr->add_flag("--no-oversample", tr_no_oversample);

  // losses-check
  LossesCheckOptions lc;
  auto* c_lc = app.add_subcommand("losses-check", "Check loss gradients against finite differences");
  c_lc->add_option("--batches", lc.batches)->capture_default_str();
  c_lc->add_option("--batch-size", lc.batch_size)->capture_default_str();
  c_lc->add_option("--seed", lc.seed)->capture_default_str();
  c_lc->add_option("--tolerance", lc.tolerance)->capture_default_str();

  // pipeline
  std::string pipe_config;
  auto* c_pipe = app.add_subcommand("pipeline", "Run every stage from a JSON config");
  c_pipe->add_option("--config", pipe_config)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::validation);
  }

  try {
    if (c_tile->parsed()) {
      tile.mask = opt_path(tile_mask);
      const auto records = cmd_tile(tile);
      std::cerr << "tile: wrote " << records.size() << " patches to " << tile.out_dir.string() << "\n";
    } else if (c_pred->parsed()) {
      pred.jobs = jobs;
      cmd_predict(pred);
    } else if (c_post->parsed()) {
      post.params.apply_object_rules = !no_rules;
      post.params.apply_morphology = !no_morph;
      post.debug_dir = opt_path(post_debug);
      post.within = opt_path(post_within);
      const BinaryMask m = cmd_postprocess(post);
      std::cerr << "postprocess: " << m.count() << " reservoir pixels\n";
    } else if (c_roi->parsed()) {
      roi.spec.method = parse_roi_method(roi_method);
      roi.mosaic = opt_path(roi_mosaic);
      roi.masked_out = opt_path(roi_masked);
      const BinaryMask m = cmd_roiar(roi, std::cerr);
      std::cerr << "roiar: " << m.count() << " RoI pixels\n";
    } else if (c_ev->parsed()) {
      ev.scope = opt_path(ev_scope);
      ev.regions = opt_path(ev_regions);
      ev.format = parse_report_format(ev_format);
      ev.out = opt_path(ev_out);
      const std::string text = cmd_evaluate(ev);
      if (!ev.out) std::cout << text;
    } else if (c_tr->parsed()) {
      if (!tr_config.empty()) {
        const auto bytes = read_file_bytes(tr_config);
        parse_train_section(std::string(bytes.begin(), bytes.end()), tr);
      }
      for (const auto& d : tr_data) tr.data_dirs.emplace_back(d);
      if (tr_epochs > 0) tr.train.max_epochs = tr_epochs;
      if (tr_lr > 0.0) tr.train.initial_lr = tr_lr;
      if (!tr_loss.empty()) tr.train.loss = parse_loss_id(tr_loss);
      if (tr_seed >= 0) tr.train.seed = static_cast<std::uint64_t>(tr_seed);
      if (tr_no_oversample) tr.oversample.enabled = false;
      tr.history = opt_path(tr_history);
      cmd_train(tr, std::cerr);
    } else if (c_lc->parsed()) {
      const auto r = cmd_losses_check(lc);
      std::cout << r.report;
      if (!r.ok) return static_cast<int>(ErrorKind::numeric);
    } else if (c_pipe->parsed()) {
      cmd_pipeline(load_pipeline_config(pipe_config), jobs, std::cerr);
    }
  } catch (const rsv::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::io);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
