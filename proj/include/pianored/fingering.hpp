#pragma once

// Fingering model: an HMM whose hidden states are fingers and whose outputs
// are pitch transitions parameterised by keyboard displacement.

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "pianored/common.hpp"
#include "pianored/models.hpp"
#include "pianored/pitch.hpp"

namespace pianored {

inline constexpr int kFingers = 5;

/// Displacement table F(dx, dy; f', f) for the right hand plus finger-level
/// HMM parameters. Fingers are 0-based here (0 = thumb).
struct FingeringParams {
  static constexpr int kMaxHalfSteps = 30;  // |dx| <= 15 key widths
  static constexpr int kDxBins = 2 * kMaxHalfSteps + 1;
  static constexpr int kDyBins = 3;
  static constexpr int kCells = kDxBins * kDyBins;

  std::array<double, kFingers> init_finger{};
  std::array<std::array<double, kFingers>, kFingers> finger_trans{};  // [prev][next]
  std::vector<double> pitch_out = std::vector<double>(kFingers * kFingers * kCells, 0.0);
  std::array<std::array<double, kFingers>, kFingers> outside{};  // weight of any |dx| > 15 displacement

  static constexpr int cell_index(int half_steps, int dy) {
    return (half_steps + kMaxHalfSteps) * kDyBins + (dy + 1);
  }
  static constexpr int pair_offset(int f_prev, int f) { return (f_prev * kFingers + f) * kCells; }

  /// Right-hand table value for a displacement of `half_steps` half key widths.
  double right_cell(int half_steps, int dy, int f_prev, int f) const {
    if (half_steps < -kMaxHalfSteps || half_steps > kMaxHalfSteps) return outside[f_prev][f];
    return pitch_out[pair_offset(f_prev, f) + cell_index(half_steps, dy)];
  }

  /// The left hand mirrors the right hand: dx -> -dx.
  double cell(Hand h, int half_steps, int dy, int f_prev, int f) const {
    return right_cell(h == Hand::Left ? -half_steps : half_steps, dy, f_prev, f);
  }
};

/// Displacement in half key widths and dy from p' to p.
inline std::pair<int, int> key_displacement(int from_midi, int to_midi) {
  const auto a = keyboard_position(from_midi);
  const auto b = keyboard_position(to_midi);
  return {static_cast<int>(std::lround(2.0 * (b.x - a.x))), b.y - a.y};
}

/// P(p | p', f', f) for hand h: table weights over the 88 keys, normalised.
inline PitchDistribution fingering_output(Hand h, int prev_midi, int prev_finger, int finger,
                                          const FingeringParams& params) {
  PitchDistribution row{};
  double total = 0.0;
  for (int i = 0; i < kNumPitches; ++i) {
    const auto [dx, dy] = key_displacement(prev_midi, i + kLowestKey);
    row[i] = params.cell(h, dx, dy, prev_finger, finger);
    total += row[i];
  }
  if (total > 0.0) {
    for (double& v : row) v /= total;
  } else {
    row.fill(1.0 / kNumPitches);
  }
  return row;
}

/// One training sequence; fingers 1..5 as annotated.
struct FingeringSample {
  Hand hand = Hand::Right;
  std::vector<int> pitches;
  std::vector<int> fingers;
};

struct FingeringTraining {
  double alpha = 0.1;   // additive smoothing of finger tables
  double floor = 1e-6;  // added to every displacement cell before normalisation
};

/// Maximum-likelihood estimation with additive smoothing. Left-hand samples
/// are mirrored onto the right-hand table; each displacement cell is averaged
/// with its time-inverted partner F(-dx, -dy; f, f') before normalisation.
inline FingeringParams train_fingering(std::span<const FingeringSample> corpus,
                                       FingeringTraining opts = {}) {
  if (corpus.empty()) {
    throw Error("empty fingering corpus; use default_fingering_params() for the bundled model");
  }
  using P = FingeringParams;
  std::array<double, kFingers> init_count{};
  std::array<std::array<double, kFingers>, kFingers> trans_count{};
  std::vector<double> cell_count(kFingers * kFingers * P::kCells, 0.0);
  std::array<std::array<double, kFingers>, kFingers> outside_count{};

  for (const auto& s : corpus) {
    if (s.pitches.empty() || s.pitches.size() != s.fingers.size()) {
      throw Error("fingering sample needs equal-length, non-empty pitch and finger lists");
    }
    for (std::size_t n = 0; n < s.pitches.size(); ++n) {
      if (s.fingers[n] < 1 || s.fingers[n] > kFingers) throw Error("finger outside 1..5");
      if (!is_piano_key(s.pitches[n])) throw Error("training pitch outside piano range");
    }
    init_count[s.fingers[0] - 1] += 1.0;
    for (std::size_t n = 1; n < s.pitches.size(); ++n) {
      const int fp = s.fingers[n - 1] - 1;
      const int f = s.fingers[n] - 1;
      trans_count[fp][f] += 1.0;
      auto [dx, dy] = key_displacement(s.pitches[n - 1], s.pitches[n]);
      if (s.hand == Hand::Left) dx = -dx;
      if (dx < -P::kMaxHalfSteps || dx > P::kMaxHalfSteps) {
        outside_count[fp][f] += 1.0;
      } else {
        cell_count[P::pair_offset(fp, f) + P::cell_index(dx, dy)] += 1.0;
      }
    }
  }

  FingeringParams out;
  const double a = opts.alpha;
  {
    double total = 0.0;
    for (double c : init_count) total += c + a;
    for (int f = 0; f < kFingers; ++f) out.init_finger[f] = (init_count[f] + a) / total;
  }
  for (int fp = 0; fp < kFingers; ++fp) {
    double total = 0.0;
    for (double c : trans_count[fp]) total += c + a;
    for (int f = 0; f < kFingers; ++f) {
      out.finger_trans[fp][f] = total > 0.0 ? (trans_count[fp][f] + a) / total : 1.0 / kFingers;
    }
  }

  // Symmetrised cells; the normaliser of a pair and its partner is computed once
  // so both tables hold bit-identical values.
  for (int fp = 0; fp < kFingers; ++fp) {
    for (int f = fp; f < kFingers; ++f) {
      std::vector<double> sym(P::kCells);
      for (int dx = -P::kMaxHalfSteps; dx <= P::kMaxHalfSteps; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          const double forward = cell_count[P::pair_offset(fp, f) + P::cell_index(dx, dy)];
          const double backward = cell_count[P::pair_offset(f, fp) + P::cell_index(-dx, -dy)];
          sym[P::cell_index(dx, dy)] = (forward + backward) / 2.0 + opts.floor;
        }
      }
      double total = 0.0;
      for (double v : sym) total += v;
      const double out_w = (outside_count[fp][f] + outside_count[f][fp]) / 2.0 + opts.floor;
      for (int dx = -P::kMaxHalfSteps; dx <= P::kMaxHalfSteps; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          const double v = total > 0.0 ? sym[P::cell_index(dx, dy)] / total : 1.0 / P::kCells;
          out.pitch_out[P::pair_offset(fp, f) + P::cell_index(dx, dy)] = v;
          out.pitch_out[P::pair_offset(f, fp) + P::cell_index(-dx, -dy)] = v;
        }
      }
      const double o = total > 0.0 ? out_w / total : 0.0;
      out.outside[fp][f] = o;
      out.outside[f][fp] = o;
    }
  }
  return out;
}

/// Precomputed log tables for both hands. The first pitch of a hand follows
/// the Gaussian initial distribution around that hand's p0.
class FingeringModel {
 public:
  explicit FingeringModel(const FingeringParams& params, const GaussianParams& initial = {})
      : params_(params), trans_(2 * kFingers * kFingers * kNumPitches * kNumPitches) {
    initial.validate();
    for (Hand h : kHands) {
      const int hi = hand_index(h);
      const auto init_row = gaussian_transition(initial.p0(h), initial);
      for (int f = 0; f < kFingers; ++f) {
        for (int p = 0; p < kNumPitches; ++p) {
          init_[hi][f][p] = safe_log(params.init_finger[f]) + std::log(init_row[p]);
        }
      }
      for (int fp = 0; fp < kFingers; ++fp) {
        for (int f = 0; f < kFingers; ++f) {
          const double la = safe_log(params.finger_trans[fp][f]);
          for (int pp = 0; pp < kNumPitches; ++pp) {
            const auto row = fingering_output(h, pp + kLowestKey, fp, f, params);
            for (int p = 0; p < kNumPitches; ++p) {
              trans_[index(h, fp, f, pp, p)] = la + safe_log(row[p]);
            }
          }
        }
      }
    }
  }

  const FingeringParams& params() const { return params_; }

  /// log P(f_1) P(p_1 | f_1).
  double log_initial(Hand h, int finger, int pitch_index) const {
    return init_[hand_index(h)][finger][pitch_index];
  }
  /// log P(f | f') P(p | p', f', f).
  double log_transition(Hand h, int prev_finger, int prev_pitch, int finger, int pitch_index) const {
    return trans_[index(h, prev_finger, finger, prev_pitch, pitch_index)];
  }

 private:
  static std::size_t index(Hand h, int fp, int f, int pp, int p) {
    return (((static_cast<std::size_t>(hand_index(h)) * kFingers + fp) * kFingers + f) * kNumPitches + pp) *
               kNumPitches + p;
  }

  FingeringParams params_;
  std::array<std::array<std::array<double, kNumPitches>, kFingers>, 2> init_{};
  std::vector<double> trans_;
};

}  // namespace pianored
