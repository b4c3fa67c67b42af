#pragma once

// Hand separation and the piano-reduction decoder on top of the merged-output engine.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "pianored/merged_decoder.hpp"
#include "pianored/models.hpp"
#include "pianored/score.hpp"

namespace pianored {

struct HandSeparation {
  std::vector<Hand> hands;
  std::vector<int> fingers;  // finger of the playing hand, 1..5 (0 without fingering)
  DecodedPath<ReductionState> path;
};

/// Jointly estimates the hand of every note and both hands' fingerings.
template <HandModel M>
HandSeparation separate_hands(std::span<const int> midi, const M& model, const MergedHandParams& merged = {},
                              MergedDecodeOptions opts = {}) {
  merged.validate();
  std::vector<StepSpec> steps(midi.size());
  for (std::size_t n = 0; n < midi.size(); ++n) {
    if (!is_piano_key(midi[n])) throw Error("pitch " + std::to_string(midi[n]) + " outside piano range");
    steps[n].log_hand = {safe_log(merged.alpha_left), safe_log(merged.alpha_right)};
    steps[n].candidates = {{midi[n], 0.0}};
  }
  HandSeparation out;
  out.path = decode_merged(model, std::span<const StepSpec>(steps), 0, std::nullopt, std::nullopt, opts);
  for (const auto& s : out.path.states) {
    const Hand h = s.xi == Selector::Left ? Hand::Left : Hand::Right;
    out.hands.push_back(h);
    out.fingers.push_back(s.hand(h).finger);
  }
  return out;
}

/// Selector probabilities of one note: beta_NP and an even split of the rest.
struct NoteBeta {
  double np = 0.0;
  double left() const { return (1.0 - np) / 2.0; }
  double right() const { return (1.0 - np) / 2.0; }
};

/// Decoder inputs for note m of the condensed score.
inline StepSpec reduction_step(const CondensedScore& score, std::size_t m, double beta_np,
                               const EditParams& edit) {
  if (!(beta_np >= 0.0 && beta_np <= 1.0)) throw Error("beta_NP must lie in [0, 1]");
  const NoteBeta beta{beta_np};
  const int p = score[m].note.pitch.midi();
  StepSpec s;
  s.log_np = safe_log(beta.np);
  s.log_hand = {safe_log(beta.left()), safe_log(beta.right())};
  s.log_np_output = std::log(uniform_pitch_prob());
  for (int q : {p - 12, p, p + 12}) {
    if (!is_piano_key(q)) continue;
    const double c = octave_shift_prob(q, p, edit);
    if (c > 0.0) s.candidates.push_back({q, std::log(c)});
  }
  return s;
}

inline std::array<double, 3> selector_log_weights(double beta_np) {
  const NoteBeta beta{beta_np};
  return {safe_log(beta.np), safe_log(beta.left()), safe_log(beta.right())};
}

/// Most probable reduction of the whole condensed score for given beta_NP.
template <HandModel M>
DecodedPath<ReductionState> decode_reduction(const CondensedScore& score, std::span<const double> beta_np,
                                             const EditParams& edit, const M& model,
                                             MergedDecodeOptions opts = {}) {
  if (beta_np.size() != score.size()) throw Error("need one beta_NP per condensed note");
  edit.validate();
  std::vector<StepSpec> steps;
  steps.reserve(score.size());
  for (std::size_t m = 0; m < score.size(); ++m) steps.push_back(reduction_step(score, m, beta_np[m], edit));
  return decode_merged(model, std::span<const StepSpec>(steps), 0, std::nullopt, std::nullopt, opts);
}

/// Contiguous note range [begin, end) of the condensed score.
struct NoteRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return end <= begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  friend bool operator==(const NoteRange&, const NoteRange&) = default;
};

/// Re-decodes `region` with the states of `previous` just outside it held
/// fixed. A region touching the start or end of the score has no boundary on
/// that side. Returns the path for the region only.
template <HandModel M>
DecodedPath<ReductionState> decode_region(const CondensedScore& score, NoteRange region,
                                          std::span<const double> beta_np, const EditParams& edit,
                                          const M& model, std::span<const ReductionState> previous,
                                          MergedDecodeOptions opts = {}) {
  if (region.empty() || region.end > score.size()) throw Error("invalid region");
  if (beta_np.size() != score.size()) throw Error("need one beta_NP per condensed note");
  if (previous.size() != score.size() && (region.begin > 0 || region.end < score.size())) {
    throw Error("boundary states require a full previous path");
  }
  edit.validate();
  std::vector<StepSpec> steps;
  steps.reserve(region.size());
  for (std::size_t m = region.begin; m < region.end; ++m) steps.push_back(reduction_step(score, m, beta_np[m], edit));

  std::optional<ReductionState> left;
  if (region.begin > 0) left = previous[region.begin - 1];
  std::optional<RightBoundary> right;
  if (region.end < score.size()) {
    right = RightBoundary{previous[region.end], selector_log_weights(beta_np[region.end])};
  }
  return decode_merged(model, std::span<const StepSpec>(steps), region.begin, left, right, opts);
}

}  // namespace pianored
