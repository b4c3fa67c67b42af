#pragma once

// Per-hand score models in the form consumed by the merged-output decoders.
// Fingers and pitches are 0-based indices; `note` is the index of the
// condensed-score note being generated.

#include <algorithm>
#include <concepts>
#include <vector>

#include "pianored/fingering.hpp"
#include "pianored/models.hpp"
#include "pianored/score.hpp"

namespace pianored {

template <class M>
concept HandModel = requires(const M& m, Hand h, int f, int p, std::size_t note) {
  { m.fingers() } -> std::convertible_to<int>;
  { m.log_initial(h, f, p, note) } -> std::convertible_to<double>;
  { m.log_transition(h, f, p, f, p, note) } -> std::convertible_to<double>;
  // Largest gain of source (f_a, p_a) over (f_b, p_b) on any single outgoing
  // transition; bounds how far a path can recover. p = -1 is the unset hand.
  { m.regret(h, f, p, f, p) } -> std::convertible_to<double>;
};

namespace detail {

/// Table of max over targets of t(a -> x) - t(b -> x) for every pair of
/// sources a, b; source index fingers * 88 is the unset hand.
class PairRegret {
 public:
  PairRegret() = default;

  template <class Init, class Trans>
  PairRegret(int fingers, Init&& init, Trans&& trans) : n_(fingers * kNumPitches + 1), table_(n_ * n_, 0.0) {
    const int targets = fingers * kNumPitches;
    std::vector<double> rows(static_cast<std::size_t>(n_) * targets);
    for (int s = 0; s < n_; ++s) {
      for (int x = 0; x < targets; ++x) {
        const int f = x / kNumPitches, p = x % kNumPitches;
        rows[static_cast<std::size_t>(s) * targets + x] =
            s == n_ - 1 ? init(f, p) : trans(s / kNumPitches, s % kNumPitches, f, p);
      }
    }
    for (int a = 0; a < n_; ++a) {
      const double* ra = &rows[static_cast<std::size_t>(a) * targets];
      for (int b = 0; b < n_; ++b) {
        const double* rb = &rows[static_cast<std::size_t>(b) * targets];
        double worst = 0.0;
        for (int x = 0; x < targets; ++x) {
          if (ra[x] == kNegInf) continue;
          if (rb[x] == kNegInf) {
            worst = std::numeric_limits<double>::infinity();
            break;
          }
          worst = std::max(worst, ra[x] - rb[x]);
        }
        table_[static_cast<std::size_t>(a) * n_ + b] = worst;
      }
    }
  }

  double operator()(int fa, int pa, int fb, int pb) const {
    return table_[static_cast<std::size_t>(source(fa, pa)) * n_ + source(fb, pb)];
  }

 private:
  int source(int f, int p) const { return p < 0 ? n_ - 1 : f * kNumPitches + p; }

  int n_ = 0;
  std::vector<double> table_;
};

}  // namespace detail

class GaussianHandModel {
 public:
  explicit GaussianHandModel(const GaussianModel& model) : model_(&model) {
    for (Hand h : kHands) {
      pair_[hand_index(h)] = detail::PairRegret(
          1, [&](int, int p) { return model_->log_initial(h, p); },
          [&](int, int pp, int, int p) { return model_->log_transition(pp, p); });
    }
  }
  int fingers() const { return 1; }
  double log_initial(Hand h, int, int p, std::size_t) const { return model_->log_initial(h, p); }
  double log_transition(Hand, int, int pp, int, int p, std::size_t) const {
    return model_->log_transition(pp, p);
  }
  double regret(Hand h, int fa, int pa, int fb, int pb) const { return pair_[hand_index(h)](fa, pa, fb, pb); }

 private:
  const GaussianModel* model_;
  std::array<detail::PairRegret, 2> pair_;
};

class FingeringHandModel {
 public:
  explicit FingeringHandModel(const FingeringModel& model) : model_(&model) {
    for (Hand h : kHands) {
      pair_[hand_index(h)] = detail::PairRegret(
          kFingers, [&](int f, int p) { return model_->log_initial(h, f, p); },
          [&](int fp, int pp, int f, int p) { return model_->log_transition(h, fp, pp, f, p); });
    }
  }
  int fingers() const { return kFingers; }
  double log_initial(Hand h, int f, int p, std::size_t) const { return model_->log_initial(h, f, p); }
  double log_transition(Hand h, int fp, int pp, int f, int p, std::size_t) const {
    return model_->log_transition(h, fp, pp, f, p);
  }
  double regret(Hand h, int fa, int pa, int fb, int pb) const { return pair_[hand_index(h)](fa, pa, fb, pb); }

 private:
  const FingeringModel* model_;
  std::array<detail::PairRegret, 2> pair_;
};

/// Baseline without sequential dependence: each note's latent pitch is drawn
/// around its closest melodic or bass note, regardless of the hand's history.
class DistanceHandModel {
 public:
  DistanceHandModel(const CondensedScore& score, const DistanceParams& params) {
    params.validate();
    rows_.reserve(score.size());
    for (std::size_t m = 0; m < score.size(); ++m) {
      rows_.push_back(distance_log_row(score[closest_melodic_bass(m, score)].note.pitch.midi(), params));
    }
  }
  int fingers() const { return 1; }
  double log_initial(Hand, int, int p, std::size_t note) const { return rows_.at(note)[p]; }
  double log_transition(Hand, int, int, int, int p, std::size_t note) const { return rows_.at(note)[p]; }
  double regret(Hand, int, int, int, int) const { return 0.0; }

 private:
  std::vector<PitchDistribution> rows_;
};

/// Uniform pitches; used for separating hands without sequential information.
class NoInfoHandModel {
 public:
  int fingers() const { return 1; }
  double log_initial(Hand, int, int, std::size_t) const { return -kLogNumPitches; }
  double log_transition(Hand, int, int, int, int, std::size_t) const { return -kLogNumPitches; }
  double regret(Hand, int, int, int, int) const { return 0.0; }
};

}  // namespace pianored
