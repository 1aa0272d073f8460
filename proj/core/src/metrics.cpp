#include "rsv/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "rsv/error.hpp"

namespace rsv {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt, const std::optional<BinaryMask>& scope) {
  if (!pred.same_shape(gt)) throw ValidationError("confusion: prediction and ground truth shapes differ");
  if (scope && !scope->same_shape(pred)) throw ValidationError("confusion: scope shape differs");
  ConfusionCounts c;
  const auto& p = pred.bits();
  const auto& g = gt.bits();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (scope && !scope->bits()[i]) continue;
    const bool x = p[i] != 0;
    const bool y = g[i] != 0;
    if (x && y) ++c.tp;
    else if (x) ++c.fp;
    else if (y) ++c.fn;
    else ++c.tn;
  }
  return c;
}

namespace {
double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

double precision(const ConfusionCounts& c) { return ratio(c.tp, c.tp + c.fp); }
double recall(const ConfusionCounts& c) { return ratio(c.tp, c.tp + c.fn); }

double f1_from(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

double f1(const ConfusionCounts& c) { return f1_from(precision(c), recall(c)); }

bool is_degenerate(const ConfusionCounts& c) { return c.tp + c.fp == 0 || c.tp + c.fn == 0; }

namespace {
ClassRow make_row(const std::string& name, const ConfusionCounts& c) {
  return {name, precision(c), recall(c), f1(c), c.tp + c.fn, is_degenerate(c)};
}
}  // namespace

ClassReport class_report_from_counts(const ConfusionCounts& c, const std::string& positive_name,
                                     const std::string& negative_name) {
  ClassReport r;
  r.counts = c;
  r.rows.push_back(make_row(positive_name, c));
  r.rows.push_back(make_row(negative_name, c.swapped()));
  r.macro_f1 = (r.rows[0].f1 + r.rows[1].f1) / 2.0;
  const double total = static_cast<double>(r.rows[0].support + r.rows[1].support);
  r.weighted_f1 = total == 0.0 ? 0.0
                               : (r.rows[0].f1 * static_cast<double>(r.rows[0].support) +
                                  r.rows[1].f1 * static_cast<double>(r.rows[1].support)) /
                                     total;
  return r;
}

ClassReport class_report(const BinaryMask& pred, const BinaryMask& gt, const std::optional<BinaryMask>& scope,
                         const std::string& positive_name, const std::string& negative_name) {
  return class_report_from_counts(confusion(pred, gt, scope), positive_name, negative_name);
}

std::map<int, ClassReport> region_report(const BinaryMask& pred, const BinaryMask& gt, const LabelMask& regions,
                                         const std::string& positive_name, const std::string& negative_name) {
  if (!pred.same_shape(gt) || regions.height != pred.height() || regions.width != pred.width()) {
    throw ValidationError("region_report: shape mismatch");
  }
  std::map<int, ConfusionCounts> counts;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int label = regions.labels[i];
    if (label == 0) continue;
    auto& c = counts[label];
    const bool x = pred.bits()[i] != 0;
    const bool y = gt.bits()[i] != 0;
    if (x && y) ++c.tp;
    else if (x) ++c.fp;
    else if (y) ++c.fn;
    else ++c.tn;
  }
  std::map<int, ClassReport> out;
  for (const auto& [label, c] : counts) out.emplace(label, class_report_from_counts(c, positive_name, negative_name));
  return out;
}

ReportFormat parse_report_format(const std::string& s) {
  if (s == "tsv") return ReportFormat::tsv;
  if (s == "json-lines" || s == "jsonl") return ReportFormat::json_lines;
  throw ValidationError("unknown report format '" + s + "' (expected tsv|json-lines)");
}

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

}  // namespace

std::string format_report(const ClassReport& r, ReportFormat fmt, const std::string& region) {
  std::ostringstream os;
  if (fmt == ReportFormat::tsv) {
    const std::string prefix = region.empty() ? "" : region + "\t";
    for (const auto& row : r.rows) {
      os << prefix << row.name << '\t' << pct(row.precision) << '\t' << pct(row.recall) << '\t' << pct(row.f1) << '\t'
         << row.support << (row.degenerate ? "\tdegenerate" : "") << '\n';
    }
    os << prefix << "macro_avg_f1\t\t\t" << pct(r.macro_f1) << '\t' << (r.rows[0].support + r.rows[1].support) << '\n';
    os << prefix << "weighted_avg_f1\t\t\t" << pct(r.weighted_f1) << '\t' << (r.rows[0].support + r.rows[1].support)
       << '\n';
    return os.str();
  }
  using nlohmann::json;
  for (const auto& row : r.rows) {
    json j{{"class", row.name},   {"precision", row.precision}, {"recall", row.recall},
           {"f1", row.f1},        {"support", row.support},     {"degenerate", row.degenerate}};
    if (!region.empty()) j["region"] = region;
    os << j.dump() << '\n';
  }
  json avg{{"macro_f1", r.macro_f1},
           {"weighted_f1", r.weighted_f1},
           {"tp", r.counts.tp},
           {"fp", r.counts.fp},
           {"fn", r.counts.fn},
           {"tn", r.counts.tn}};
  if (!region.empty()) avg["region"] = region;
  os << avg.dump() << '\n';
  return os.str();
}

std::string format_region_reports(const std::map<int, ClassReport>& reports, ReportFormat fmt) {
  std::string out;
  for (const auto& [label, rep] : reports) out += format_report(rep, fmt, "region" + std::to_string(label));
  return out;
}

}  // namespace rsv
