#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rsv/raster.hpp"

namespace rsv {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  /// Same tallies with the roles of the two classes exchanged.
  ConfusionCounts swapped() const { return {tn, fn, fp, tp}; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Tallies over `scope` pixels only (whole frame when absent).
ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt,
                          const std::optional<BinaryMask>& scope = std::nullopt);

// 0/0 evaluates to 0; use is_degenerate() to tell it apart from a real zero.
double precision(const ConfusionCounts& c);
double recall(const ConfusionCounts& c);
double f1(const ConfusionCounts& c);
/// Harmonic mean of precision and recall, 0 when both are 0.
double f1_from(double precision, double recall);
bool is_degenerate(const ConfusionCounts& c);

struct ClassRow {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;  // ground-truth pixels of this class in scope
  bool degenerate = false;
};

struct ClassReport {
  std::vector<ClassRow> rows;  // positive class first
  ConfusionCounts counts;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;    // support-weighted
};

ClassReport class_report(const BinaryMask& pred, const BinaryMask& gt,
                         const std::optional<BinaryMask>& scope = std::nullopt,
                         const std::string& positive_name = "positive", const std::string& negative_name = "negative");

ClassReport class_report_from_counts(const ConfusionCounts& c, const std::string& positive_name = "positive",
                                     const std::string& negative_name = "negative");

/// One report per nonzero region label; label 0 is not scored.
std::map<int, ClassReport> region_report(const BinaryMask& pred, const BinaryMask& gt, const LabelMask& regions,
                                         const std::string& positive_name = "positive",
                                         const std::string& negative_name = "negative");

enum class ReportFormat { tsv, json_lines };
ReportFormat parse_report_format(const std::string& s);

/// Percentages with two decimals, as in published tables. `region` labels the
/// rows when non-empty.
std::string format_report(const ClassReport& r, ReportFormat fmt, const std::string& region = {});
std::string format_region_reports(const std::map<int, ClassReport>& reports, ReportFormat fmt);

}  // namespace rsv
