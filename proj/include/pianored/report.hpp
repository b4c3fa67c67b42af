#pragma once

#include <algorithm>
#include <cmath>
#include <array>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pianored/params_io.hpp"
#include "pianored/reduction.hpp"

namespace pianored {

/// Objective metrics of one reduction. Triplets are (left, right, both).
struct ReductionMetrics {
  std::array<double, 3> mean{};
  std::array<double, 3> max{};
  std::array<double, 3> out_of_range{};  // fraction of notes with D_X(n) > target
  double out_of_range_any = 0.0;         // fraction of notes exceeding any target
  std::optional<double> additional_rate; // (#R - #M - #B) / (#M + #B); none if #M + #B = 0
  std::size_t kept = 0;
  std::size_t kept_melodic = 0;
  std::size_t kept_bass = 0;
};

inline ReductionMetrics evaluate_reduction(const ReductionResult& result, const CondensedScore& score,
                                           const TargetDifficulty& targets) {
  const auto& recs = result.profile.records;
  if (recs.empty()) throw Error("cannot evaluate an empty reduction");
  ReductionMetrics m;
  m.max = {recs[0].left, recs[0].right, recs[0].both};
  std::array<std::size_t, 3> over{};
  std::size_t over_any = 0;
  for (const auto& r : recs) {
    const std::array<double, 3> d{r.left, r.right, r.both};
    const std::array<double, 3> t{targets.left, targets.right, targets.both};
    bool any = false;
    for (int k = 0; k < 3; ++k) {
      m.mean[k] += d[k];
      m.max[k] = std::max(m.max[k], d[k]);
      if (d[k] > t[k]) {
        ++over[k];
        any = true;
      }
    }
    if (any) ++over_any;
  }
  const double n = static_cast<double>(recs.size());
  for (int k = 0; k < 3; ++k) {
    m.mean[k] /= n;
    m.out_of_range[k] = over[k] / n;
  }
  m.out_of_range_any = over_any / n;

  m.kept = result.piano.size();
  for (std::size_t src : result.piano_source) {
    if (score[src].melodic) ++m.kept_melodic;
    if (score[src].bass) ++m.kept_bass;
  }
  const std::size_t skeleton = m.kept_melodic + m.kept_bass;
  if (skeleton > 0) {
    m.additional_rate = static_cast<double>(m.kept - skeleton) / static_cast<double>(skeleton);
  }
  return m;
}

/// N_unp / (#R - #M - #B); none when the reduction has no additional notes.
inline std::optional<double> unplayable_rate(std::size_t n_unplayable, const ReductionMetrics& m) {
  const std::size_t additional = m.kept - m.kept_melodic - m.kept_bass;
  if (additional == 0) return std::nullopt;
  return static_cast<double>(n_unplayable) / static_cast<double>(additional);
}

struct ReportRow {
  std::string piece;
  std::string method;
  TargetDifficulty targets;
  ReductionMetrics metrics;
};

inline constexpr const char* kReportHeader =
    "piece,method,target_L,target_R,target_B,mean_L,mean_R,mean_B,max_L,max_R,max_B,"
    "out_L,out_R,out_B,A_add";

namespace detail {

inline std::vector<double> report_values(const ReportRow& r) {
  const auto& m = r.metrics;
  return {r.targets.left, r.targets.right, r.targets.both,
          m.mean[0],      m.mean[1],       m.mean[2],
          m.max[0],       m.max[1],        m.max[2],
          m.out_of_range[0], m.out_of_range[1], m.out_of_range[2],
          m.additional_rate.value_or(std::nan(""))};
}

inline std::string csv_number(double v) { return std::isnan(v) ? "NA" : format_sig6(v); }

}  // namespace detail

/// Column means over rows; NaN entries (undefined A_add) are skipped.
inline std::vector<double> report_means(const std::vector<ReportRow>& rows) {
  std::vector<double> sum, count;
  for (const auto& r : rows) {
    const auto v = detail::report_values(r);
    sum.resize(v.size(), 0.0);
    count.resize(v.size(), 0.0);
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (std::isnan(v[k])) continue;
      sum[k] += v[k];
      count[k] += 1.0;
    }
  }
  for (std::size_t k = 0; k < sum.size(); ++k) sum[k] = count[k] > 0.0 ? sum[k] / count[k] : std::nan("");
  return sum;
}

/// One line per row, then a MEAN line averaging every column.
inline void write_batch_report(std::ostream& out, const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw Error("batch report needs at least one result");
  out << kReportHeader << '\n';
  for (const auto& r : rows) {
    out << r.piece << ',' << r.method;
    for (double v : detail::report_values(r)) out << ',' << detail::csv_number(v);
    out << '\n';
  }
  out << "MEAN,*";
  for (double v : report_means(rows)) out << ',' << detail::csv_number(v);
  out << '\n';
}

/// Sidecar of a reduction: `note_id,source_id,hand,finger,pitch,provenance,zeta_final`.
inline void write_reduction_report(std::ostream& out, const ReductionResult& r) {
  out << "note_id,source_id,hand,finger,pitch,provenance,zeta_final\n";
  for (std::size_t i = 0; i < r.notes.size(); ++i) {
    const auto& n = r.notes[i];
    out << i << ',' << n.source_id << ',' << (n.hand ? std::string(1, hand_char(*n.hand)) : std::string("-"))
        << ',' << (n.finger > 0 ? std::to_string(n.finger) : std::string("-")) << ','
        << (n.midi > 0 ? std::to_string(n.midi) : std::string("-")) << ',' << to_string(n.provenance) << ','
        << format_sig6(n.zeta) << '\n';
  }
}

}  // namespace pianored
