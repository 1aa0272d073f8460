#include "rsv/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "rsv/backend.hpp"
#include "rsv/detail/shuffle.hpp"
#include "rsv/error.hpp"
#include "rsv/fcn.hpp"
#include "rsv/io.hpp"
#include "rsv/losses.hpp"

namespace rsv::cli {

namespace {

std::string stem_or(const std::string& stem, const fs::path& p) { return stem.empty() ? p.stem().string() : stem; }

void require_same_shape(int h, int w, int h2, int w2, const std::string& what) {
  if (h != h2 || w != w2) {
    throw ValidationError(what + " is " + std::to_string(h2) + "x" + std::to_string(w2) + ", expected " +
                          std::to_string(h) + "x" + std::to_string(w));
  }
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

}  // namespace

std::vector<ManifestRecord> cmd_tile(const TileOptions& o) {
  o.split.validate();
  const Raster mosaic = read_raster(o.input);
  const std::string stem = stem_or(o.stem, o.input);
  const PatchGrid grid = PatchGrid::make(mosaic.height(), mosaic.width(), o.patch_height, o.patch_width);
  const std::vector<Raster> patches = extract_patches(mosaic, o.patch_height, o.patch_width);

  std::vector<BinaryMask> labels;
  if (o.mask) {
    const BinaryMask gt = read_mask(*o.mask);
    require_same_shape(mosaic.height(), mosaic.width(), gt.height(), gt.width(), "mask " + o.mask->string());
    labels = extract_patches(gt, o.patch_height, o.patch_width);
  }

  std::vector<DatasetItem> items;
  for (const auto& origin : grid.patches) items.push_back({patch_id(stem, origin), stem});
  const DatasetSplit split = split_dataset(items, o.split);
  std::map<std::string, std::string> split_of;
  for (const auto& id : split.train) split_of[id] = "train";
  for (const auto& id : split.val) split_of[id] = "val";
  for (const auto& id : split.test) split_of[id] = "test";

  fs::create_directories(o.out_dir);
  std::vector<ManifestRecord> records;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const std::string& id = items[i].id;
    write_raster(patches[i], TileLayout::image(o.out_dir, id));
    if (o.mask) write_mask(labels[i], TileLayout::label(o.out_dir, id));
    records.push_back({id, stem, grid.patches[i].row, grid.patches[i].col, split_of.at(id)});
  }
  write_sidecar({mosaic.height(), mosaic.width(), mosaic.meta()}, TileLayout::source(o.out_dir, stem));
  write_manifest(records, TileLayout::manifest(o.out_dir));
  return records;
}

ProbMap cmd_predict(const PredictOptions& o) {
  if (o.jobs < 1) throw ValidationError("--jobs must be >= 1");
  const auto backend = make_backend(o.backend);
  const Raster mosaic = read_raster(o.mosaic);
  ProbMap p = predict_tiled(*backend, mosaic, o.patch_height, o.patch_width, stem_or(o.stem, o.mosaic), o.jobs);
  ensure_parent(o.out);
  write_prob_map(p, o.out);
  return p;
}

BinaryMask cmd_postprocess(const PostprocessOptions& o) {
  o.params.validate();
  const ProbMap prob = read_prob_map(o.prob);
  const PostprocessStages st = postprocess_reservoir_stages(prob, prob.meta(), o.params);
  BinaryMask out = st.pruned;
  if (o.within) {
    const BinaryMask within = read_mask(*o.within);
    require_same_shape(prob.height(), prob.width(), within.height(), within.width(), "mask " + o.within->string());
    out = mask_and(out, within);
  }
  out.meta() = prob.meta();
  if (o.debug_dir) {
    fs::create_directories(*o.debug_dir);
    write_mask(st.thresholded, *o.debug_dir / "thresholded.pgm");
    write_mask(st.opened, *o.debug_dir / "opened.pgm");
    write_mask(st.closed, *o.debug_dir / "closed.pgm");
    write_mask(st.filled, *o.debug_dir / "filled.pgm");
    write_mask(st.pruned, *o.debug_dir / "pruned.pgm");
  }
  ensure_parent(o.out);
  write_mask(out, o.out);
  return out;
}

BinaryMask cmd_roiar(const RoiarOptions& o, std::ostream& log) {
  o.spec.validate();
  if (o.mosaic.has_value() != o.masked_out.has_value()) {
    throw ValidationError("--mosaic and --masked-out must be given together");
  }
  const BinaryMask reservoir = read_mask(o.reservoir);
  if (reservoir.empty()) log << "warning: reservoir mask " << o.reservoir.string() << " is empty; RoI is empty\n";
  const BinaryMask roi = extract_roi(reservoir, o.spec);
  ensure_parent(o.out);
  write_mask(roi, o.out);
  if (o.mosaic) {
    const Raster mosaic = read_raster(*o.mosaic);
    require_same_shape(roi.height(), roi.width(), mosaic.height(), mosaic.width(), "mosaic " + o.mosaic->string());
    ensure_parent(*o.masked_out);
    write_raster(apply_roi(mosaic, roi), *o.masked_out);
  }
  return roi;
}

std::string cmd_evaluate(const EvaluateOptions& o) {
  const BinaryMask pred = read_mask(o.pred);
  const BinaryMask gt = read_mask(o.gt);
  std::optional<BinaryMask> scope;
  if (o.scope) scope = read_mask(*o.scope);
  std::string text;
  if (o.regions) {
    const LabelMask regions = read_label_mask(*o.regions);
    if (scope) {
      // Pixels outside the scope drop out of every region.
      LabelMask scoped = regions;
      require_same_shape(regions.height, regions.width, scope->height(), scope->width(), "scope");
      for (std::size_t i = 0; i < scoped.labels.size(); ++i)
        if (!scope->bits()[i]) scoped.labels[i] = 0;
      text = format_region_reports(region_report(pred, gt, scoped, o.positive_name, o.negative_name), o.format);
    } else {
      text = format_region_reports(region_report(pred, gt, regions, o.positive_name, o.negative_name), o.format);
    }
  } else {
    text = format_report(class_report(pred, gt, scope, o.positive_name, o.negative_name), o.format);
  }
  if (o.out) {
    ensure_parent(*o.out);
    write_text_atomic(*o.out, text);
  }
  return text;
}

TrainResult cmd_train(const TrainOptions& o, std::ostream& log) {
  o.train.validate();
  validate_widths(o.model.widths);
  if (o.data_dirs.empty()) throw ValidationError("train: at least one --data directory is required");

  std::map<std::string, TrainSample> samples;
  std::map<std::string, BinaryMask> labels;
  std::vector<std::string> train_ids, val_ids;
  for (const auto& dir : o.data_dirs) {
    const auto records = read_manifest(TileLayout::manifest(dir));
    std::map<std::string, Sidecar> sources;
    for (const auto& rec : records) {
      if (samples.count(rec.id)) throw ValidationError("train: duplicate patch id '" + rec.id + "'");
      if (rec.split != "train" && rec.split != "val") continue;
      const Raster img = read_raster(TileLayout::image(dir, rec.id));
      const fs::path label_path = TileLayout::label(dir, rec.id);
      if (!fs::exists(label_path)) throw IoError("train: missing label patch " + label_path.string());
      BinaryMask label = read_mask(label_path);
      require_same_shape(img.height(), img.width(), label.height(), label.width(), "label " + label_path.string());
      if (img.channels() != o.model.widths.front()) {
        throw ValidationError("train: patch '" + rec.id + "' has " + std::to_string(img.channels()) +
                              " channels, model expects " + std::to_string(o.model.widths.front()));
      }
      // Edge patches count only their in-mosaic pixels.
      BinaryMask valid;
      const fs::path src = TileLayout::source(dir, rec.source);
      if (fs::exists(src)) {
        if (!sources.count(rec.source)) sources[rec.source] = read_sidecar(src);
        const Sidecar& s = sources.at(rec.source);
        const int vr = std::min(img.height(), s.height - rec.origin_row);
        const int vc = std::min(img.width(), s.width - rec.origin_col);
        if (vr < img.height() || vc < img.width()) {
          valid = BinaryMask(img.height(), img.width());
          for (int r = 0; r < vr; ++r)
            for (int c = 0; c < vc; ++c) valid.set(r, c);
        }
      }
      labels.emplace(rec.id, label);
      samples.emplace(rec.id, TrainSample{to_float_image(img), std::move(label), std::move(valid)});
      (rec.split == "train" ? train_ids : val_ids).push_back(rec.id);
    }
  }
  if (train_ids.empty() || val_ids.empty()) {
    throw ValidationError("train: manifests must contain both 'train' and 'val' patches");
  }
  if (o.oversample.enabled) {
    train_ids = oversample(train_ids, labels, o.oversample.min_positive_px, o.oversample.copies);
  }
  std::vector<TrainSample> train_set, val_set;
  for (const auto& id : train_ids) train_set.push_back(samples.at(id));
  for (const auto& id : val_ids) val_set.push_back(samples.at(id));
  log << "train: " << train_set.size() << " training samples, " << val_set.size() << " validation samples\n";

  TrainResult result = train(TinyFcn(o.model.widths, o.model.seed), train_set, val_set, o.train);
  for (const auto& e : result.history) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "epoch %3d  train %.6f  val %.6f  lr %.2e\n", e.epoch, e.train_loss, e.val_loss,
                  e.lr);
    log << buf;
  }
  const ConfusionCounts c = evaluate_set_confusion(result.model, val_set);
  log << "best epoch " << result.best_epoch << (result.stopped_early ? " (early stop)" : "") << ", val F1 "
      << f1(c) << "\n";
  ensure_parent(o.out);
  save_checkpoint(result.model, o.out);
  if (o.history) write_text_atomic(*o.history, format_history(result.history));
  return result;
}

LossesCheckResult cmd_losses_check(const LossesCheckOptions& o) {
  if (o.batches < 1 || o.batch_size < 1) throw ValidationError("losses-check: batches and batch size must be >= 1");
  if (!(o.step > 0.0) || !(o.tolerance > 0.0)) throw ValidationError("losses-check: step and tolerance must be > 0");
  o.params.validate();
  std::mt19937_64 gen(o.seed);
  const LossId ids[] = {LossId::bce, LossId::balanced_ce, LossId::focal, LossId::dice, LossId::combined};
  double worst[5] = {0, 0, 0, 0, 0};
  double identity_gap = 0.0;
  for (int b = 0; b < o.batches; ++b) {
    PixelBatch batch;
    for (int i = 0; i < o.batch_size; ++i) {
      batch.p.push_back(0.05 + 0.9 * detail::draw_unit(gen));
      batch.y.push_back(detail::draw_unit(gen) < 0.4 ? 1 : 0);
    }
    for (int k = 0; k < 5; ++k) {
      const auto g = loss_gradient(ids[k], batch, o.params);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        PixelBatch up = batch, dn = batch;
        up.p[i] += o.step;
        dn.p[i] -= o.step;
        const double fd =
            (evaluate_loss(ids[k], up, o.params) - evaluate_loss(ids[k], dn, o.params)) / (2.0 * o.step);
        worst[k] = std::max(worst[k], std::abs(g[i] - fd) / std::max({std::abs(g[i]), std::abs(fd), 1e-12}));
      }
    }
    LossParams reduced = o.params;
    reduced.gamma = 0.0;
    reduced.alpha = 0.5;
    identity_gap = std::max(identity_gap, std::abs(focal(batch, reduced) - 0.5 * bce(batch, o.params)));
  }
  LossesCheckResult r;
  std::ostringstream os;
  char buf[160];
  for (int k = 0; k < 5; ++k) {
    const bool pass = worst[k] < o.tolerance;
    r.ok = r.ok && pass;
    std::snprintf(buf, sizeof buf, "%s\tmax_rel_grad_err\t%.3e\t%s\n", to_string(ids[k]).c_str(), worst[k],
                  pass ? "PASS" : "FAIL");
    os << buf;
  }
  const bool id_pass = identity_gap <= 1e-12;
  r.ok = r.ok && id_pass;
  std::snprintf(buf, sizeof buf, "focal(gamma=0,alpha=0.5)-0.5*bce\tmax_abs_gap\t%.3e\t%s\n", identity_gap,
                id_pass ? "PASS" : "FAIL");
  os << buf;
  r.report = os.str();
  return r;
}

}  // namespace rsv::cli
