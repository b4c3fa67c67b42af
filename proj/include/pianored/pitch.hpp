#pragma once

#include <array>
#include <string>

#include "pianored/common.hpp"

namespace pianored {

inline constexpr int kLowestKey = 21;   // A0
inline constexpr int kHighestKey = 108; // C8
inline constexpr int kNumPitches = kHighestKey - kLowestKey + 1;  // 88

inline constexpr bool is_piano_key(int midi) { return midi >= kLowestKey && midi <= kHighestKey; }

/// A piano key, always within A0..C8.
class Pitch {
 public:
  constexpr Pitch() = default;
  explicit Pitch(int midi) : midi_(midi) {
    if (!is_piano_key(midi)) {
      throw Error("pitch " + std::to_string(midi) + " outside piano range [21, 108]");
    }
  }

  static Pitch from_index(int index) { return Pitch(index + kLowestKey); }

  constexpr int midi() const { return midi_; }
  /// Zero-based key index, 0 = A0.
  constexpr int index() const { return midi_ - kLowestKey; }

  friend constexpr auto operator<=>(Pitch, Pitch) = default;

 private:
  int midi_ = 60;
};

/// Position of a key on the keyboard in white-key widths; y = 1 on black keys.
struct KeyPosition {
  double x = 0.0;
  int y = 0;
};

namespace detail {
// C C# D D# E F F# G G# A A# B
inline constexpr std::array<double, 12> kKeyX{0.0, 0.5, 1.0, 1.5, 2.0, 3.0,
                                              3.5, 4.0, 4.5, 5.0, 5.5, 6.0};
inline constexpr std::array<int, 12> kKeyY{0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 1, 0};
}  // namespace detail

/// White keys sit on an integer lattice (C4 at x = 35), black keys halfway
/// between their neighbours. Moving up an octave adds exactly 7 to x.
inline constexpr KeyPosition keyboard_position(int midi) {
  const int octave = midi / 12 - 1;
  const int pc = midi % 12;
  return {7.0 * octave + detail::kKeyX[pc], detail::kKeyY[pc]};
}

inline constexpr KeyPosition keyboard_position(Pitch p) { return keyboard_position(p.midi()); }

inline constexpr bool is_black_key(int midi) { return detail::kKeyY[midi % 12] == 1; }

}  // namespace pianored
