#include <ostream>
#include <set>

#include "json.hpp"
#include "rsv/cli/commands.hpp"
#include "rsv/error.hpp"
#include "rsv/io.hpp"

namespace rsv::cli {

namespace {

using json = nlohmann::json;

// Typed access to one JSON object; remembers which keys were consumed so
// leftovers can be reported as unknown fields.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError("config field '" + name_or_root() + "' must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return as<T>(raw(key), field(key));
  }

  template <class T>
  T require(const std::string& key) {
    if (!has(key)) throw ValidationError("missing config field '" + field(key) + "'");
    return as<T>(raw(key), field(key));
  }

  std::optional<Section> sub(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return Section(raw(key), field(key));
  }

  Section require_sub(const std::string& key) {
    if (!has(key)) throw ValidationError("missing config field '" + field(key) + "'");
    return Section(raw(key), field(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ValidationError("unknown config field '" + field(it.key()) + "'");
    }
  }

 private:
  std::string name_or_root() const { return path_.empty() ? "<root>" : path_; }

  template <class T>
  static T as(const json& v, const std::string& name) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ValidationError("config field '" + name + "' must be a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ValidationError("config field '" + name + "' must be a string");
      return v.get<std::string>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ValidationError("config field '" + name + "' must be an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) return v.get<T>();
        if (v.get<long long>() < 0) throw ValidationError("config field '" + name + "' must be non-negative");
      }
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, std::vector<int>>) {
      if (!v.is_array()) throw ValidationError("config field '" + name + "' must be an array of integers");
      std::vector<int> out;
      for (const auto& e : v) {
        if (!e.is_number_integer()) throw ValidationError("config field '" + name + "' must be an array of integers");
        out.push_back(e.get<int>());
      }
      return out;
    } else {
      if (!v.is_number()) throw ValidationError("config field '" + name + "' must be a number");
      return v.get<T>();
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string resolve_backend(const fs::path& base, const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) return spec;  // rejected later by make_backend
  return spec.substr(0, colon + 1) + resolve(base, spec.substr(colon + 1)).string();
}

PhaseConfig parse_phase(Section s, const fs::path& base, PhaseConfig d) {
  d.backend = resolve_backend(base, s.require<std::string>("backend"));
  d.patch_height = s.get("patch_height", d.patch_height);
  d.patch_width = s.get("patch_width", d.patch_width);
  d.stem = s.get("stem", d.stem);
  d.threshold = s.get("threshold", d.threshold);
  s.finish();
  if (d.patch_height < 1 || d.patch_width < 1) {
    throw ValidationError("config field '" + s.field("patch_height") + "'/'patch_width' must be >= 1");
  }
  if (!(d.threshold >= 0.0 && d.threshold <= 1.0)) {
    throw ValidationError("config field '" + s.field("threshold") + "' must lie in [0,1]");
  }
  return d;
}

void parse_train(Section s, TrainOptions& o) {
  TrainConfig& t = o.train;
  t.initial_lr = s.get("initial_lr", t.initial_lr);
  t.max_epochs = s.get("max_epochs", t.max_epochs);
  t.batch_size = s.get("batch_size", t.batch_size);
  t.flip_rate = s.get("flip_rate", t.flip_rate);
  if (s.has("loss")) t.loss = parse_loss_id(s.get<std::string>("loss", ""));
  t.loss_params.alpha = s.get("alpha", t.loss_params.alpha);
  t.loss_params.gamma = s.get("gamma", t.loss_params.gamma);
  t.seed = s.get("seed", t.seed);
  t.restore_best = s.get("restore_best", t.restore_best);
  t.schedule.factor = s.get("plateau_factor", t.schedule.factor);
  t.schedule.plateau_patience = s.get("plateau_patience", t.schedule.plateau_patience);
  t.schedule.min_lr = s.get("min_lr", t.schedule.min_lr);
  t.schedule.early_stop_patience = s.get("early_stop_patience", t.schedule.early_stop_patience);
  o.model.widths = s.get("widths", o.model.widths);
  o.model.seed = s.get("model_seed", o.model.seed);
  o.oversample.enabled = s.get("oversample", o.oversample.enabled);
  o.oversample.min_positive_px = s.get("oversample_min_px", o.oversample.min_positive_px);
  o.oversample.copies = s.get("oversample_copies", o.oversample.copies);
  s.finish();
  t.validate();
  validate_widths(o.model.widths);
  if (o.oversample.copies < 1) throw ValidationError("config field '" + s.field("oversample_copies") + "' must be >= 1");
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what(), e.byte);
  }
}

}  // namespace

void parse_train_section(const std::string& text, TrainOptions& o) { parse_train(Section(parse_json(text), ""), o); }

PipelineConfig parse_pipeline_config(const std::string& text, const fs::path& base) {
  const json doc = parse_json(text);
  Section root(doc, "");
  PipelineConfig c;
  c.mosaic = resolve(base, root.require<std::string>("mosaic"));
  c.output_dir = resolve(base, root.require<std::string>("output_dir"));
  c.reservoir = parse_phase(root.require_sub("reservoir"), base, c.reservoir);
  c.objects = parse_phase(root.require_sub("objects"), base, c.objects);
  c.postprocess.threshold = c.reservoir.threshold;

  if (auto s = root.sub("postprocess")) {
    c.postprocess.kernel_m = s->get("kernel_m", c.postprocess.kernel_m);
    c.postprocess.size_ratio = s->get("size_ratio", c.postprocess.size_ratio);
    c.postprocess.max_dist_m = s->get("max_dist_m", c.postprocess.max_dist_m);
    c.postprocess.apply_morphology = s->get("apply_morphology", c.postprocess.apply_morphology);
    c.postprocess.apply_object_rules = s->get("apply_object_rules", c.postprocess.apply_object_rules);
    s->finish();
  }
  c.postprocess.validate();

  if (auto s = root.sub("roi")) {
    if (s->has("method")) c.roi.method = parse_roi_method(s->get<std::string>("method", ""));
    c.roi.margin_m = s->get("margin_m", c.roi.margin_m);
    c.roi.simplify_epsilon_px = s->get("epsilon_px", c.roi.simplify_epsilon_px);
    s->finish();
  }
  c.roi.validate();

  if (auto s = root.sub("evaluation")) {
    if (s->has("reservoir_gt")) c.evaluation.reservoir_gt = resolve(base, s->get<std::string>("reservoir_gt", ""));
    if (s->has("objects_gt")) c.evaluation.objects_gt = resolve(base, s->get<std::string>("objects_gt", ""));
    if (s->has("regions")) c.evaluation.regions = resolve(base, s->get<std::string>("regions", ""));
    if (s->has("format")) c.evaluation.format = parse_report_format(s->get<std::string>("format", ""));
    s->finish();
  }
  if (auto s = root.sub("train")) parse_train(*s, c.train);
  root.finish();
  return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_pipeline_config(std::string(bytes.begin(), bytes.end()), path.parent_path());
}

PipelineLayout PipelineLayout::in(const fs::path& dir) {
  return {dir / "reservoir_prob.f32", dir / "reservoir.pgm", dir / "postprocess", dir / "roi.pgm",
          dir / "masked.pnm",         dir / "objects_prob.f32", dir / "objects.pgm", dir / "reports"};
}

PipelineLayout cmd_pipeline(const PipelineConfig& c, int jobs, std::ostream& log) {
  const PipelineLayout L = PipelineLayout::in(c.output_dir);
  fs::create_directories(c.output_dir);
  const std::string scene = c.mosaic.stem().string();

  log << "pipeline: segmenting reservoir\n";
  cmd_predict({c.reservoir.backend, c.mosaic, L.reservoir_prob, c.reservoir.patch_height, c.reservoir.patch_width,
               c.reservoir.stem.empty() ? scene : c.reservoir.stem, jobs});

  log << "pipeline: post-processing\n";
  cmd_postprocess({L.reservoir_prob, L.reservoir, c.postprocess, L.debug_dir, std::nullopt});

  log << "pipeline: extracting region of interest\n";
  cmd_roiar({L.reservoir, L.roi, c.roi, c.mosaic, L.masked}, log);

  log << "pipeline: segmenting man-made objects\n";
  cmd_predict({c.objects.backend, L.masked, L.objects_prob, c.objects.patch_height, c.objects.patch_width,
               c.objects.stem.empty() ? scene : c.objects.stem, jobs});
  PostprocessParams plain;
  plain.threshold = c.objects.threshold;
  plain.apply_morphology = false;
  plain.apply_object_rules = false;
  cmd_postprocess({L.objects_prob, L.objects, plain, std::nullopt, L.roi});

  const std::string ext = c.evaluation.format == ReportFormat::tsv ? ".tsv" : ".jsonl";
  if (c.evaluation.reservoir_gt) {
    log << "pipeline: scoring reservoir\n";
    cmd_evaluate({L.debug_dir / "thresholded.pgm", *c.evaluation.reservoir_gt, std::nullopt, std::nullopt,
                  c.evaluation.format, "reservoir", "background", L.reports_dir / ("reservoir_raw" + ext)});
    cmd_evaluate({L.reservoir, *c.evaluation.reservoir_gt, std::nullopt, std::nullopt, c.evaluation.format,
                  "reservoir", "background", L.reports_dir / ("reservoir" + ext)});
  }
  if (c.evaluation.objects_gt) {
    log << "pipeline: scoring man-made objects inside the RoI\n";
    cmd_evaluate({L.objects, *c.evaluation.objects_gt, L.roi, c.evaluation.regions, c.evaluation.format, "man-made",
                  "background", L.reports_dir / ("objects" + ext)});
  }
  return L;
}

}  // namespace rsv::cli
