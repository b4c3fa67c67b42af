#pragma once

// Performance difficulty: the time rate of the probabilistic cost of the
// notes inside a sliding window, per hand and for both hands.

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <vector>

#include "pianored/common.hpp"
#include "pianored/fingering.hpp"
#include "pianored/fingering_decoder.hpp"
#include "pianored/models.hpp"
#include "pianored/params_io.hpp"

namespace pianored {

/// A note of a two-hand piano score.
struct PianoNote {
  int id = 0;
  double onset = 0.0;
  int midi = 60;
  Hand hand = Hand::Right;
};

using PianoScore = std::vector<PianoNote>;

/// Onsets and pitches of one hand part, in score order.
struct HandPart {
  std::vector<double> onsets;
  std::vector<int> midi;

  std::size_t size() const { return onsets.size(); }
};

inline HandPart hand_part(const PianoScore& score, Hand h) {
  std::vector<const PianoNote*> notes;
  for (const auto& n : score) {
    if (n.hand == h) notes.push_back(&n);
  }
  std::stable_sort(notes.begin(), notes.end(), [](const PianoNote* a, const PianoNote* b) {
    if (a->onset != b->onset) return a->onset < b->onset;
    return a->midi < b->midi;
  });
  HandPart part;
  for (const auto* n : notes) {
    part.onsets.push_back(n->onset);
    part.midi.push_back(n->midi);
  }
  return part;
}

/// Onsets closer than this to a window edge count as inside.
inline constexpr double kWindowTolerance = 1e-9;

/// Index range [first, second) of notes with onset in [t - dt/2, t + dt/2].
inline std::pair<std::size_t, std::size_t> window_range(std::span<const double> onsets, double t, double dt) {
  if (!(dt > 0.0)) throw Error("window width must be positive");
  const double lo = t - dt / 2.0 - kWindowTolerance;
  const double hi = t + dt / 2.0 + kWindowTolerance;
  const auto first = std::lower_bound(onsets.begin(), onsets.end(), lo);
  const auto last = std::upper_bound(first, onsets.end(), hi);
  return {static_cast<std::size_t>(first - onsets.begin()), static_cast<std::size_t>(last - onsets.begin())};
}

inline std::vector<int> window_notes(const HandPart& part, double t, double dt) {
  const auto [a, b] = window_range(part.onsets, t, dt);
  return {part.midi.begin() + static_cast<std::ptrdiff_t>(a), part.midi.begin() + static_cast<std::ptrdiff_t>(b)};
}

enum class DifficultyModel { NoInfo, Gaussian, Fingering };

/// Scores a window as a standalone one-hand sequence.
class DifficultyMeasure {
 public:
  static DifficultyMeasure no_info() { return DifficultyMeasure(DifficultyModel::NoInfo, nullptr, nullptr); }
  static DifficultyMeasure gaussian(const GaussianModel& g) {
    return DifficultyMeasure(DifficultyModel::Gaussian, &g, nullptr);
  }
  /// Joint probability of pitches and their most probable fingering.
  static DifficultyMeasure fingering(const FingeringModel& f) {
    return DifficultyMeasure(DifficultyModel::Fingering, nullptr, &f);
  }

  DifficultyModel kind() const { return kind_; }

  double window_logprob(Hand h, std::span<const int> midi) const {
    switch (kind_) {
      case DifficultyModel::NoInfo: return no_info_logprob(midi.size());
      case DifficultyModel::Gaussian: return gaussian_->sequence_logprob(h, midi);
      case DifficultyModel::Fingering: return decode_fingering(midi, h, *fingering_).log_prob;
    }
    return 0.0;
  }

 private:
  DifficultyMeasure(DifficultyModel k, const GaussianModel* g, const FingeringModel* f)
      : kind_(k), gaussian_(g), fingering_(f) {}

  DifficultyModel kind_;
  const GaussianModel* gaussian_;
  const FingeringModel* fingering_;
};

/// D(t) = -ln P(window) / dt in nats per second; 0 for an empty window.
inline double difficulty_at(const HandPart& part, Hand h, double t, const DifficultyMeasure& measure, double dt) {
  const auto [a, b] = window_range(part.onsets, t, dt);
  if (a == b) return 0.0;
  const std::span<const int> window(part.midi.data() + a, b - a);
  return -measure.window_logprob(h, window) / dt;
}

struct DifficultyRecord {
  int note_id = 0;
  double onset = 0.0;
  double left = 0.0;
  double right = 0.0;
  double both = 0.0;  // always left + right
};

struct DifficultyProfile {
  double window = 1.0;
  std::vector<DifficultyRecord> records;

  std::size_t size() const { return records.size(); }
};

/// One record per note of the piano score, in the score's order.
inline DifficultyProfile difficulty_profile(const PianoScore& score, const DifficultyMeasure& measure,
                                            double dt = 1.0) {
  if (!(dt > 0.0)) throw Error("window width must be positive");
  const HandPart left = hand_part(score, Hand::Left);
  const HandPart right = hand_part(score, Hand::Right);
  std::map<double, std::pair<double, double>> by_onset;
  DifficultyProfile profile;
  profile.window = dt;
  profile.records.reserve(score.size());
  for (const auto& n : score) {
    auto it = by_onset.find(n.onset);
    if (it == by_onset.end()) {
      const double dl = difficulty_at(left, Hand::Left, n.onset, measure, dt);
      const double dr = difficulty_at(right, Hand::Right, n.onset, measure, dt);
      it = by_onset.emplace(n.onset, std::make_pair(dl, dr)).first;
    }
    const auto [dl, dr] = it->second;
    profile.records.push_back({n.id, n.onset, dl, dr, dl + dr});
  }
  return profile;
}

inline void write_profile_csv(std::ostream& out, const DifficultyProfile& profile) {
  out << "note_id,onset,D_L,D_R,D_B\n";
  for (const auto& r : profile.records) {
    out << r.note_id << ',' << format_sig6(r.onset) << ',' << format_sig6(r.left) << ','
        << format_sig6(r.right) << ',' << format_sig6(r.both) << '\n';
  }
}

// --- performance-error prediction ---------------------------------------

struct Thresholds {
  double left = 0.0;
  double right = 0.0;
  double both = 0.0;

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

/// Positive when any of D_L, D_R, D_B exceeds its threshold.
inline std::vector<bool> predict_errors(const DifficultyProfile& profile, const Thresholds& th) {
  std::vector<bool> out;
  out.reserve(profile.size());
  for (const auto& r : profile.records) {
    out.push_back(r.left > th.left || r.right > th.right || r.both > th.both);
  }
  return out;
}

struct ErrorCounts {
  int pitch_errors = 0;
  int extra_notes = 0;
  int missing_notes = 0;

  int total() const { return pitch_errors + extra_notes + missing_notes; }
};

/// Reads `note_id pitch_err extra_cnt missing_cnt` lines.
inline std::map<int, ErrorCounts> read_error_annotations(std::istream& in, const std::string& path = "<stream>") {
  std::map<int, ErrorCounts> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    std::istringstream rest(line);
    int id = 0;
    ErrorCounts c;
    if (!(rest >> id >> c.pitch_errors >> c.extra_notes >> c.missing_notes)) {
      throw ParseError(path, lineno, "expected `note_id pitch_err extra_cnt missing_cnt`");
    }
    if (c.pitch_errors < 0 || c.extra_notes < 0 || c.missing_notes < 0) {
      throw ParseError(path, lineno, "error counts must be non-negative");
    }
    if (!out.emplace(id, c).second) throw ParseError(path, lineno, "duplicate note id " + std::to_string(id));
  }
  return out;
}

/// Number of errors attributed to each note: an error at time e counts toward
/// every note whose window [t_n - dt/2, t_n + dt/2] contains e.
inline std::vector<int> attribute_errors(std::span<const double> note_onsets, std::span<const double> error_times,
                                         double dt) {
  std::vector<double> sorted(error_times.begin(), error_times.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> out;
  out.reserve(note_onsets.size());
  for (double t : note_onsets) {
    const auto [a, b] = window_range(sorted, t, dt);
    out.push_back(static_cast<int>(b - a));
  }
  return out;
}

/// Precision, recall, F and their error-count-weighted variants.
///
/// Counts follow the original definitions: N_TP are predicted-positive notes
/// with errors, N_FP predicted-positive notes without errors, and N_TN the
/// predicted-negative notes that do carry errors, so R = N_TP / (N_TP + N_TN).
struct ErrorPredictionMetrics {
  double precision = 0.0, recall = 0.0, f = 0.0;
  double precision_w = 0.0, recall_w = 0.0, f_w = 0.0;
  double n_tp = 0.0, n_fp = 0.0, n_tn = 0.0;
  double n_tp_w = 0.0, n_tn_w = 0.0;
  bool undefined = false;  // some denominator was zero; that metric is reported as 0
};

struct ErrorTally {
  double tp = 0.0, fp = 0.0, tn = 0.0, tp_w = 0.0, tn_w = 0.0;

  void add(bool predicted, int errors) {
    if (predicted) {
      if (errors > 0) {
        tp += 1.0;
        tp_w += errors;
      } else {
        fp += 1.0;
      }
    } else if (errors > 0) {
      tn += 1.0;
      tn_w += errors;
    }
  }

  ErrorPredictionMetrics metrics() const {
    ErrorPredictionMetrics m;
    m.n_tp = tp;
    m.n_fp = fp;
    m.n_tn = tn;
    m.n_tp_w = tp_w;
    m.n_tn_w = tn_w;
    auto ratio = [&](double num, double den) {
      if (den <= 0.0) {
        m.undefined = true;
        return 0.0;
      }
      return num / den;
    };
    m.precision = ratio(tp, tp + fp);
    m.recall = ratio(tp, tp + tn);
    m.f = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
    m.precision_w = ratio(tp_w, tp_w + fp);
    m.recall_w = ratio(tp_w, tp_w + tn_w);
    m.f_w = ratio(2.0 * m.precision_w * m.recall_w, m.precision_w + m.recall_w);
    return m;
  }
};

inline ErrorPredictionMetrics error_prediction_metrics(const std::vector<bool>& predictions,
                                                       std::span<const int> error_counts) {
  if (predictions.size() != error_counts.size()) throw Error("predictions and annotations differ in length");
  ErrorTally tally;
  for (std::size_t i = 0; i < predictions.size(); ++i) tally.add(predictions[i], error_counts[i]);
  return tally.metrics();
}

struct ThresholdGrid {
  std::vector<double> left, right, both;

  static ThresholdGrid uniform(double lo, double hi, double step) {
    ThresholdGrid g;
    for (double v = lo; v <= hi + 1e-9; v += step) {
      g.left.push_back(v);
      g.right.push_back(v);
      g.both.push_back(v);
    }
    return g;
  }
};

struct ThresholdChoice {
  Thresholds thresholds;
  ErrorPredictionMetrics metrics;
};

/// Grid point maximising the pooled F_w; ties go to the lexicographically
/// smallest (left, right, both).
inline ThresholdChoice sweep_thresholds(std::span<const DifficultyProfile> profiles,
                                        std::span<const std::vector<int>> error_counts, ThresholdGrid grid) {
  if (profiles.size() != error_counts.size()) throw Error("one annotation set per profile required");
  if (grid.left.empty() || grid.right.empty() || grid.both.empty()) throw Error("empty threshold grid");
  for (auto* axis : {&grid.left, &grid.right, &grid.both}) std::sort(axis->begin(), axis->end());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (profiles[i].size() != error_counts[i].size()) throw Error("profile and annotation differ in length");
  }

  std::optional<ThresholdChoice> best;
  for (double tl : grid.left) {
    for (double tr : grid.right) {
      for (double tb : grid.both) {
        ErrorTally tally;
        for (std::size_t i = 0; i < profiles.size(); ++i) {
          const auto& recs = profiles[i].records;
          for (std::size_t n = 0; n < recs.size(); ++n) {
            const bool pos = recs[n].left > tl || recs[n].right > tr || recs[n].both > tb;
            tally.add(pos, error_counts[i][n]);
          }
        }
        const auto m = tally.metrics();
        if (!best || m.f_w > best->metrics.f_w) best = ThresholdChoice{{tl, tr, tb}, m};
      }
    }
  }
  return *best;
}

}  // namespace pianored
