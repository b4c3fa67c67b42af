#pragma once

// Piano reduction under difficulty constraints: note importance, deletion
// probabilities, one-time control-factor estimation and the iterative
// optimiser that re-decodes only the regions violating the constraints.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pianored/decoders.hpp"
#include "pianored/default_fingering.hpp"
#include "pianored/difficulty.hpp"
#include "pianored/fingering.hpp"
#include "pianored/hand_models.hpp"
#include "pianored/models.hpp"
#include "pianored/params_io.hpp"
#include "pianored/score.hpp"

namespace pianored {

/// Target difficulties (nats per second) for the left hand, right hand and both hands.
struct TargetDifficulty {
  double left = 30.0;
  double right = 30.0;
  double both = 40.0;

  void validate() const {
    if (!(left > 0.0 && right > 0.0 && both > 0.0)) throw Error("target difficulties must be positive");
  }
  friend bool operator==(const TargetDifficulty&, const TargetDifficulty&) = default;
};

inline constexpr TargetDifficulty kPresetEasy{15.0, 15.0, 30.0};
inline constexpr TargetDifficulty kPresetMedium{30.0, 30.0, 40.0};
inline constexpr TargetDifficulty kPresetHard{40.0, 40.0, 50.0};

enum class ScoreModelKind { Gaussian, Fingering, Distance };

inline std::string to_string(ScoreModelKind k) {
  switch (k) {
    case ScoreModelKind::Gaussian: return "gaussian";
    case ScoreModelKind::Fingering: return "fingering";
    case ScoreModelKind::Distance: return "distance";
  }
  return "?";
}

struct ReductionConfig {
  EditParams edit;            // a = 0.01, kappa = 11, gamma_oct = 0.001
  MergedHandParams merged;
  DistanceParams distance;
  double window = 1.0;        // seconds
  double lambda = 0.85;       // control-factor decay
  int i_max = 50;
  double zeta_floor = 1e-6;
  bool include_both_factor = false;  // add D~_B / D_B(m) to the one-time minimum
  MergedDecodeOptions decode;

  void validate() const {
    edit.validate();
    merged.validate();
    distance.validate();
    if (!(window > 0.0)) throw Error("window must be positive");
    if (!(lambda > 0.0 && lambda < 1.0)) throw Error("lambda must lie in (0, 1)");
    if (i_max < 1) throw Error("i_max must be at least 1");
    if (!(zeta_floor > 0.0 && zeta_floor < 1.0)) throw Error("zeta floor must lie in (0, 1)");
  }
};

/// Gaussian and fingering models shared by every reduction run.
class ModelSet {
 public:
  explicit ModelSet(const GaussianParams& gaussian = {}, const FingeringParams& fingering = default_fingering_params())
      : gaussian_(std::make_unique<GaussianModel>(gaussian)),
        fingering_(std::make_unique<FingeringModel>(fingering, gaussian)),
        gaussian_hand_(*gaussian_),
        fingering_hand_(*fingering_) {}

  explicit ModelSet(const ModelParams& p) : ModelSet(p.gaussian, p.fingering) {}

  const GaussianModel& gaussian() const { return *gaussian_; }
  const FingeringModel& fingering() const { return *fingering_; }
  const GaussianHandModel& gaussian_hand() const { return gaussian_hand_; }
  const FingeringHandModel& fingering_hand() const { return fingering_hand_; }
  DifficultyMeasure measure() const { return DifficultyMeasure::gaussian(*gaussian_); }

 private:
  std::unique_ptr<GaussianModel> gaussian_;
  std::unique_ptr<FingeringModel> fingering_;
  GaussianHandModel gaussian_hand_;
  FingeringHandModel fingering_hand_;
};

/// Calls fn with the hand model for `kind`.
template <class Fn>
decltype(auto) with_hand_model(ScoreModelKind kind, const ModelSet& models, const CondensedScore& score,
                               const DistanceParams& distance, Fn&& fn) {
  switch (kind) {
    case ScoreModelKind::Fingering: return fn(models.fingering_hand());
    case ScoreModelKind::Distance: {
      const DistanceHandModel d(score, distance);
      return fn(d);
    }
    default: return fn(models.gaussian_hand());
  }
}

/// h(m) = [m melodic] + [m bass] + a * Mult(m).
inline double importance(const CondensedNote& note, const EditParams& edit) {
  return (note.melodic ? 1.0 : 0.0) + (note.bass ? 1.0 : 0.0) + edit.a_mult * note.multiplicity;
}

/// beta_NP = (1 - zeta) exp(-kappa h).
inline double beta_np(double zeta, double importance_value, const EditParams& edit) {
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw Error("zeta must lie in [0, 1]");
  return (1.0 - zeta) * std::exp(-edit.kappa * importance_value);
}

inline std::vector<double> beta_np_all(const CondensedScore& score, std::span<const double> zeta,
                                       const EditParams& edit) {
  std::vector<double> out(score.size());
  for (std::size_t m = 0; m < score.size(); ++m) out[m] = beta_np(zeta[m], importance(score[m], edit), edit);
  return out;
}

inline std::vector<int> pitches_of(const CondensedScore& score) {
  std::vector<int> out;
  out.reserve(score.size());
  for (const auto& c : score.notes) out.push_back(c.note.pitch.midi());
  return out;
}

/// Difficulty of the ensemble score itself: hands assigned by the two-hand
/// fingering model, difficulty from the Gaussian model. One record per
/// condensed note, in condensed order.
inline DifficultyProfile ensemble_difficulty(const CondensedScore& score, const ModelSet& models,
                                             const ReductionConfig& cfg = {}) {
  if (score.empty()) return DifficultyProfile{cfg.window, {}};
  const auto midi = pitches_of(score);
  const auto sep = separate_hands(std::span<const int>(midi), models.fingering_hand(), cfg.merged, cfg.decode);
  PianoScore piano;
  piano.reserve(score.size());
  for (std::size_t m = 0; m < score.size(); ++m) {
    piano.push_back({score[m].note.id, score[m].note.onset, midi[m], sep.hands[m]});
  }
  return difficulty_profile(piano, models.measure(), cfg.window);
}

/// zeta(m) = rho * min(D~_L / D_L(m), D~_R / D_R(m)), clamped to [0, 1]. A hand
/// with zero difficulty contributes +inf to the minimum.
inline std::vector<double> one_time_zeta(const DifficultyProfile& ensemble, const TargetDifficulty& targets,
                                         double rho, bool include_both = false) {
  if (!(rho > 0.0)) throw Error("rho must be positive");
  targets.validate();
  auto ratio = [](double target, double d) {
    return d > 0.0 ? target / d : std::numeric_limits<double>::infinity();
  };
  std::vector<double> out;
  out.reserve(ensemble.size());
  for (const auto& r : ensemble.records) {
    double m = std::min(ratio(targets.left, r.left), ratio(targets.right, r.right));
    if (include_both) m = std::min(m, ratio(targets.both, r.both));
    out.push_back(std::clamp(rho * m, 0.0, 1.0));
  }
  return out;
}

enum class Provenance { Kept, ShiftedUp, ShiftedDown, Deleted };

inline std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Kept: return "kept";
    case Provenance::ShiftedUp: return "shift+12";
    case Provenance::ShiftedDown: return "shift-12";
    case Provenance::Deleted: return "deleted";
  }
  return "?";
}

enum class Termination { SinglePass, Converged, IterationLimit, ZetaFloor };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::SinglePass: return "single-pass";
    case Termination::Converged: return "converged";
    case Termination::IterationLimit: return "iteration-limit";
    case Termination::ZetaFloor: return "zeta-floor";
  }
  return "?";
}

/// Fate of one condensed-score note.
struct ReducedNote {
  std::size_t source = 0;  // index in the condensed score
  int source_id = 0;
  Provenance provenance = Provenance::Deleted;
  std::optional<Hand> hand;
  int finger = 0;  // 1..5, 0 without fingering or when deleted
  int midi = 0;    // output pitch, 0 when deleted
  double duration = 0.25;
  double zeta = 1.0;
};

struct ReductionResult {
  std::vector<ReducedNote> notes;  // one per condensed note
  std::vector<double> zeta;
  DecodedPath<ReductionState> path;
  PianoScore piano;                      // kept notes in score order
  std::vector<std::size_t> piano_source; // condensed index of each piano note
  DifficultyProfile profile;             // Gaussian difficulty of `piano`
  int iterations = 1;
  Termination termination = Termination::SinglePass;
  ScoreModelKind model = ScoreModelKind::Gaussian;

  std::size_t kept_count() const { return piano.size(); }
};

namespace detail {

inline void assemble_result(ReductionResult& r, const CondensedScore& score, const ModelSet& models,
                            const ReductionConfig& cfg) {
  r.notes.assign(score.size(), {});
  std::vector<std::pair<PianoNote, std::size_t>> kept;
  for (std::size_t m = 0; m < score.size(); ++m) {
    const auto& st = r.path.states[m];
    auto& out = r.notes[m];
    out.source = m;
    out.source_id = score[m].note.id;
    out.duration = score[m].note.duration;
    out.zeta = r.zeta[m];
    if (st.xi == Selector::NotPlayed) {
      out.provenance = Provenance::Deleted;
      continue;
    }
    const Hand h = st.xi == Selector::Left ? Hand::Left : Hand::Right;
    const HandSlot& slot = st.hand(h);
    out.hand = h;
    out.finger = slot.finger;
    out.midi = slot.midi;
    const int diff = slot.midi - score[m].note.pitch.midi();
    out.provenance = diff == 0 ? Provenance::Kept : (diff > 0 ? Provenance::ShiftedUp : Provenance::ShiftedDown);
    kept.push_back({{score[m].note.id, score[m].note.onset, slot.midi, h}, m});
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.first.onset != b.first.onset) return a.first.onset < b.first.onset;
    return a.first.midi < b.first.midi;
  });
  r.piano.clear();
  r.piano_source.clear();
  for (const auto& [n, m] : kept) {
    r.piano.push_back(n);
    r.piano_source.push_back(m);
  }
  r.profile = difficulty_profile(r.piano, models.measure(), cfg.window);
}

}  // namespace detail

/// Single decode with control factors derived from the ensemble difficulty.
inline ReductionResult one_time_reduce(const CondensedScore& score, const TargetDifficulty& targets, double rho,
                                       ScoreModelKind kind, const ModelSet& models, const ReductionConfig& cfg = {}) {
  cfg.validate();
  ReductionResult r;
  r.model = kind;
  if (score.empty()) {
    r.path.log_prob = 0.0;
    return r;
  }
  const auto ens = ensemble_difficulty(score, models, cfg);
  r.zeta = one_time_zeta(ens, targets, rho, cfg.include_both_factor);
  const auto beta = beta_np_all(score, r.zeta, cfg.edit);
  r.path = with_hand_model(kind, models, score, cfg.distance, [&](const auto& model) {
    return decode_reduction(score, std::span<const double>(beta), cfg.edit, model, cfg.decode);
  });
  detail::assemble_result(r, score, models, cfg);
  return r;
}

inline bool violates(const DifficultyRecord& r, const TargetDifficulty& t) {
  return !(r.left < t.left && r.right < t.right && r.both < t.both);
}

/// Condensed notes within dt/2 of any reduction note that misses a target,
/// grouped into maximal runs of consecutive indices.
inline std::vector<NoteRange> violation_regions(const ReductionResult& result, const CondensedScore& score,
                                                const TargetDifficulty& targets, double dt) {
  std::vector<double> onsets;
  onsets.reserve(score.size());
  for (const auto& c : score.notes) onsets.push_back(c.note.onset);
  std::vector<char> marked(score.size(), 0);
  for (const auto& rec : result.profile.records) {
    if (!violates(rec, targets)) continue;
    const auto [a, b] = window_range(onsets, rec.onset, dt);
    for (std::size_t m = a; m < b; ++m) marked[m] = 1;
  }
  std::vector<NoteRange> regions;
  for (std::size_t m = 0; m < score.size();) {
    if (!marked[m]) {
      ++m;
      continue;
    }
    std::size_t e = m;
    while (e < score.size() && marked[e]) ++e;
    regions.push_back({m, e});
    m = e;
  }
  return regions;
}

/// Log joint probability of a complete reduction path under control factors zeta.
inline double reduction_log_prob(const CondensedScore& score, std::span<const ReductionState> states,
                                 std::span<const double> zeta, const ReductionConfig& cfg, ScoreModelKind kind,
                                 const ModelSet& models) {
  std::vector<StepSpec> steps;
  steps.reserve(score.size());
  for (std::size_t m = 0; m < score.size(); ++m) {
    steps.push_back(reduction_step(score, m, beta_np(zeta[m], importance(score[m], cfg.edit), cfg.edit), cfg.edit));
  }
  return with_hand_model(kind, models, score, cfg.distance, [&](const auto& model) {
    return path_log_prob(model, std::span<const StepSpec>(steps), states);
  });
}

/// Starts from zeta = 1, then repeatedly shrinks zeta by lambda on the notes
/// around violations and re-decodes those regions with fixed boundary states.
inline ReductionResult iterative_reduce(const CondensedScore& score, const TargetDifficulty& targets,
                                        ScoreModelKind kind, const ModelSet& models, const ReductionConfig& cfg = {}) {
  cfg.validate();
  targets.validate();
  ReductionResult r;
  r.model = kind;
  if (score.empty()) {
    r.path.log_prob = 0.0;
    r.termination = Termination::Converged;
    return r;
  }
  r.zeta.assign(score.size(), 1.0);

  with_hand_model(kind, models, score, cfg.distance, [&](const auto& model) {
    auto beta = beta_np_all(score, r.zeta, cfg.edit);
    r.path = decode_reduction(score, std::span<const double>(beta), cfg.edit, model, cfg.decode);
    for (int i = 1;; ++i) {
      r.iterations = i;
      detail::assemble_result(r, score, models, cfg);
      const auto regions = violation_regions(r, score, targets, cfg.window);
      if (regions.empty()) {
        r.termination = Termination::Converged;
        return;
      }
      if (i >= cfg.i_max) {
        r.termination = Termination::IterationLimit;
        return;
      }
      bool movable = false;
      for (const auto& reg : regions) {
        for (std::size_t m = reg.begin; m < reg.end; ++m) movable = movable || r.zeta[m] > cfg.zeta_floor;
      }
      if (!movable) {
        r.termination = Termination::ZetaFloor;
        return;
      }
      for (const auto& reg : regions) {
        for (std::size_t m = reg.begin; m < reg.end; ++m) {
          r.zeta[m] = std::max(cfg.lambda * r.zeta[m], cfg.zeta_floor);
          beta[m] = beta_np(r.zeta[m], importance(score[m], cfg.edit), cfg.edit);
        }
      }
      for (const auto& reg : regions) {
        const auto sub = decode_region(score, reg, std::span<const double>(beta), cfg.edit, model,
                                       std::span<const ReductionState>(r.path.states), cfg.decode);
        std::copy(sub.states.begin(), sub.states.end(), r.path.states.begin() + static_cast<std::ptrdiff_t>(reg.begin));
      }
    }
  });
  r.path.log_prob = reduction_log_prob(score, r.path.states, r.zeta, cfg, kind, models);
  return r;
}

}  // namespace pianored
