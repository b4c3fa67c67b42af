#pragma once

// Pitch-sequence models for one hand: no-information, Gaussian (pitch
// proximity), and the distance baseline; plus the edit-model tables.

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "pianored/common.hpp"
#include "pianored/pitch.hpp"
#include "pianored/score.hpp"

namespace pianored {

using PitchDistribution = std::array<double, kNumPitches>;

inline const double kLogNumPitches = std::log(static_cast<double>(kNumPitches));

/// log P(p_1..p_N) = -N ln 88 under the uniform model.
inline double no_info_logprob(std::size_t note_count) {
  return -static_cast<double>(note_count) * kLogNumPitches;
}

struct GaussianParams {
  double sigma_p = 5.0;     // semitones
  double epsilon = 4e-4;    // added to the density before normalisation
  int p0_left = 48;         // C3
  int p0_right = 72;        // C5

  int p0(Hand h) const { return h == Hand::Left ? p0_left : p0_right; }

  void validate() const {
    if (!(sigma_p > 0.0) || !std::isfinite(sigma_p)) throw Error("sigma_p must be positive");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw Error("epsilon must be positive");
    if (!is_piano_key(p0_left) || !is_piano_key(p0_right)) throw Error("p0 outside piano range");
  }
};

inline double gauss_density(double x, double mean, double sigma) {
  const double z = (x - mean) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

/// P(p | previous pitch or p0) ∝ Gauss(p; center, sigma^2) + epsilon over the 88 keys.
inline PitchDistribution gaussian_transition(int center_midi, const GaussianParams& params) {
  PitchDistribution row{};
  double total = 0.0;
  for (int i = 0; i < kNumPitches; ++i) {
    row[i] = gauss_density(i + kLowestKey, center_midi, params.sigma_p) + params.epsilon;
    total += row[i];
  }
  for (double& v : row) v /= total;
  return row;
}

/// Log-domain tables of the Gaussian model.
class GaussianModel {
 public:
  explicit GaussianModel(GaussianParams params = {}) : params_(params), trans_(kNumPitches * kNumPitches) {
    params_.validate();
    for (int prev = 0; prev < kNumPitches; ++prev) {
      const auto row = gaussian_transition(prev + kLowestKey, params_);
      for (int p = 0; p < kNumPitches; ++p) trans_[prev * kNumPitches + p] = std::log(row[p]);
    }
    for (Hand h : kHands) {
      const auto row = gaussian_transition(params_.p0(h), params_);
      for (int p = 0; p < kNumPitches; ++p) init_[hand_index(h)][p] = std::log(row[p]);
    }
  }

  const GaussianParams& params() const { return params_; }

  double log_initial(Hand h, int pitch_index) const { return init_[hand_index(h)][pitch_index]; }
  double log_transition(int prev_index, int pitch_index) const {
    return trans_[prev_index * kNumPitches + pitch_index];
  }

  /// log P(p_1..p_N) for a standalone sequence played by hand h.
  double sequence_logprob(Hand h, std::span<const int> midi) const {
    if (midi.empty()) return 0.0;
    double lp = log_initial(h, midi[0] - kLowestKey);
    for (std::size_t n = 1; n < midi.size(); ++n) {
      lp += log_transition(midi[n - 1] - kLowestKey, midi[n] - kLowestKey);
    }
    return lp;
  }

 private:
  GaussianParams params_;
  std::array<std::array<double, kNumPitches>, 2> init_{};
  std::vector<double> trans_;
};

struct DistanceParams {
  double sigma_p = 5.0;

  void validate() const {
    if (!(sigma_p > 0.0) || !std::isfinite(sigma_p)) throw Error("sigma_p must be positive");
  }
};

/// Index of the melodic or bass note nearest to note m: smallest onset
/// distance first, then smallest pitch distance, then the lower pitch.
inline std::size_t closest_melodic_bass(std::size_t m, const CondensedScore& score) {
  const auto& target = score[m].note;
  std::optional<std::size_t> best;
  double best_dt = 0.0;
  int best_dp = 0;
  for (std::size_t i = 0; i < score.size(); ++i) {
    const auto& c = score[i];
    if (!c.melodic && !c.bass) continue;
    const double dt = std::abs(c.note.onset - target.onset);
    const int dp = std::abs(c.note.pitch.midi() - target.pitch.midi());
    bool better = !best;
    if (!better) {
      if (dt != best_dt) {
        better = dt < best_dt;
      } else if (dp != best_dp) {
        better = dp < best_dp;
      } else {
        better = c.note.pitch < score[*best].note.pitch;
      }
    }
    if (better) {
      best = i;
      best_dt = dt;
      best_dp = dp;
    }
  }
  if (!best) throw Error("distance model needs at least one melodic or bass note");
  return *best;
}

/// P(p) ∝ Gauss(p; pitch of the closest melodic/bass note, sigma^2), normalised in log space.
inline PitchDistribution distance_log_row(int center_midi, const DistanceParams& params) {
  PitchDistribution logs{};
  for (int i = 0; i < kNumPitches; ++i) {
    const double z = (i + kLowestKey - center_midi) / params.sigma_p;
    logs[i] = -0.5 * z * z;
  }
  const double norm = log_sum_exp(logs);
  for (double& v : logs) v -= norm;
  return logs;
}

inline PitchDistribution distance_pitch_prob(std::size_t m, const CondensedScore& score,
                                             const DistanceParams& params) {
  params.validate();
  const auto center = score[closest_melodic_bass(m, score)].note.pitch.midi();
  auto row = distance_log_row(center, params);
  for (double& v : row) v = std::exp(v);
  return row;
}

/// Edit-model parameters of the reduction model.
struct EditParams {
  double gamma_oct = 0.001;  // octave-shift probability
  double kappa = 11.0;       // importance coefficient
  double a_mult = 0.01;      // multiplicity weight

  void validate() const {
    if (!(gamma_oct >= 0.0 && gamma_oct < 0.5)) throw Error("gamma_oct must lie in [0, 0.5)");
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw Error("kappa must be positive");
    if (!(a_mult >= 0.0) || !std::isfinite(a_mult)) throw Error("a must be non-negative");
  }
};

/// c_q(p): 1 - 2γ at p = q, γ at p = q ± 12. A shift leaving the keyboard
/// folds its mass back onto p = q.
inline double octave_shift_prob(int source_midi, int observed_midi, const EditParams& params) {
  const double g = params.gamma_oct;
  if (observed_midi == source_midi) {
    double stay = 1.0 - 2.0 * g;
    if (!is_piano_key(source_midi + 12)) stay += g;
    if (!is_piano_key(source_midi - 12)) stay += g;
    return stay;
  }
  if (!is_piano_key(observed_midi)) return 0.0;
  if (observed_midi == source_midi + 12 || observed_midi == source_midi - 12) return g;
  return 0.0;
}

inline double uniform_pitch_prob() { return 1.0 / kNumPitches; }

/// Bernoulli hand weights of the merged-output model.
struct MergedHandParams {
  double alpha_left = 0.5;
  double alpha_right = 0.5;

  double alpha(Hand h) const { return h == Hand::Left ? alpha_left : alpha_right; }

  void validate() const {
    if (!(alpha_left >= 0.0 && alpha_right >= 0.0) ||
        std::abs(alpha_left + alpha_right - 1.0) > 1e-12) {
      throw Error("hand weights must be non-negative and sum to 1");
    }
  }
};

}  // namespace pianored
