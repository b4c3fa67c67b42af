#pragma once

#include <span>
#include <vector>

#include "pianored/fingering.hpp"
#include "pianored/viterbi.hpp"

namespace pianored {

struct FingeringEstimate {
  std::vector<int> fingers;  // 1..5
  double log_prob = 0.0;     // log P(p, f) of the estimate
};

/// Most probable fingering of a one-hand pitch sequence (chords already
/// sequenced low to high).
inline FingeringEstimate decode_fingering(std::span<const int> midi, Hand hand, const FingeringModel& model) {
  FingeringEstimate est;
  if (midi.empty()) return est;
  for (int p : midi) {
    if (!is_piano_key(p)) throw Error("pitch " + std::to_string(p) + " outside piano range");
  }
  std::array<double, kFingers> init{};
  for (int f = 0; f < kFingers; ++f) init[f] = model.log_initial(hand, f, midi[0] - kLowestKey);
  auto path = viterbi(
      init, midi.size(),
      [&](std::size_t n, int from, int to) {
        return model.log_transition(hand, from, midi[n - 1] - kLowestKey, to, midi[n] - kLowestKey);
      },
      [](std::size_t, int) { return 0.0; });
  est.log_prob = path.log_prob;
  est.fingers.reserve(midi.size());
  for (int s : path.states) est.fingers.push_back(s + 1);
  return est;
}

}  // namespace pianored
