#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pianored/difficulty.hpp"
#include "pianored/score.hpp"

namespace pianored::synthetic {

// Only raw engine output is used so that every platform produces the same
// pieces; the standard distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  int below(int n) { return static_cast<int>(engine_() % static_cast<std::uint64_t>(n)); }
  int between(int lo, int hi) { return lo + below(hi - lo + 1); }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }

 private:
  std::mt19937_64 engine_;
};

struct Piece {
  std::string name;
  std::vector<RawNote> notes;
  double bar_seconds = 2.0;
};

namespace detail {

inline constexpr int kMajor[7] = {0, 2, 4, 5, 7, 9, 11};

inline int scale_pitch(int tonic, int degree) {
  const int octave = degree >= 0 ? degree / 7 : -((-degree + 6) / 7);
  const int step = degree - 7 * octave;
  return tonic + 12 * octave + kMajor[step];
}

// Pitch of `pc` (0..11) nearest to `near` within [lo, hi].
inline int place(int pc, int near, int lo, int hi) {
  int best = -1;
  for (int p = lo; p <= hi; ++p) {
    if (((p % 12) + 12) % 12 != pc) continue;
    if (best < 0 || std::abs(p - near) < std::abs(best - near)) best = p;
  }
  return best;
}

}  // namespace detail

/// One ensemble piece: melody, an octave doubling, inner harmony, a
/// counter-line and bass over a random diatonic progression.
inline Piece generate_piece(Rng& rng, const std::string& name) {
  static constexpr int kProgressions[][4] = {
      {0, 3, 4, 0}, {0, 5, 3, 4}, {0, 1, 4, 0}, {5, 3, 0, 4}, {0, 3, 1, 4}};
  Piece piece;
  piece.name = name;
  const double beat = 0.5;
  const int beats_per_bar = 4;
  piece.bar_seconds = beat * beats_per_bar;
  const int tonic = 60 + rng.between(-5, 6);
  const int bars = rng.between(8, 12);
  const int prog = rng.below(5);
  const double melody_step = rng.chance(0.5) ? beat / 2.0 : beat;

  int melody_degree = rng.between(7, 11);
  int inner_near = 62;
  int counter_near = 55;
  int bass_prev = 43;
  auto add = [&](double onset, int midi, int track, double dur, Role role) {
    if (!is_piano_key(midi)) return;
    piece.notes.push_back(RawNote{std::nullopt, onset, midi, track, dur, role});
  };

  for (int bar = 0; bar < bars; ++bar) {
    const int root_degree = kProgressions[prog][bar % 4];
    const int root_pc = ((detail::scale_pitch(tonic, root_degree) % 12) + 12) % 12;
    int chord_pcs[3];
    for (int k = 0; k < 3; ++k) chord_pcs[k] = ((detail::scale_pitch(tonic, root_degree + 2 * k) % 12) + 12) % 12;
    const double bar_start = bar * piece.bar_seconds;
    const bool doubled = rng.chance(0.5);

    // melody: stepwise walk with occasional leaps, mostly chord tones on beats
    for (double t = 0.0; t < piece.bar_seconds - 1e-9; t += melody_step) {
      if (rng.chance(0.12)) continue;  // rest
      int move = rng.between(-2, 2);
      if (rng.chance(0.15)) move = rng.between(-5, 5);
      melody_degree = std::clamp(melody_degree + move, 5, 16);
      const int midi = detail::scale_pitch(tonic, melody_degree);
      add(bar_start + t, midi, 0, melody_step, Role::Melody);
      if (doubled) add(bar_start + t, midi - 12, 1, melody_step, Role::None);
    }

    // inner harmony: repeated chords on every beat, sometimes off-beats too
    const bool offbeats = rng.chance(0.4);
    for (int b = 0; b < beats_per_bar; ++b) {
      for (int half = 0; half < (offbeats ? 2 : 1); ++half) {
        const double onset = bar_start + b * beat + half * beat / 2.0;
        const int voices = rng.between(2, 3);
        for (int k = 0; k < voices; ++k) {
          const int midi = detail::place(chord_pcs[(k + b) % 3], inner_near + 4 * k, 53, 72);
          add(onset, midi, 2, beat / 2.0, Role::None);
        }
      }
      inner_near = std::clamp(inner_near + rng.between(-2, 2), 57, 66);
    }

    // counter-line: half notes, arpeggiating the chord
    for (int b = 0; b < beats_per_bar; b += 2) {
      if (rng.chance(0.25)) continue;
      const int midi = detail::place(chord_pcs[rng.below(3)], counter_near, 48, 64);
      counter_near = midi;
      add(bar_start + b * beat, midi, 3, 2 * beat, Role::None);
    }

    // bass: root and fifth, occasionally walking eighths; unison doubling in the cellos
    for (int b = 0; b < beats_per_bar; ++b) {
      const int pc = (b % 2 == 0) ? root_pc : chord_pcs[2];
      const int midi = detail::place(pc, bass_prev, 33, 52);
      bass_prev = midi;
      add(bar_start + b * beat, midi, 4, beat, Role::Bass);
      if (b == 0) add(bar_start, midi, 5, beat, Role::None);
      if (rng.chance(0.2)) {
        add(bar_start + b * beat + beat / 2.0, midi + 12, 4, beat / 2.0, Role::Bass);
      }
    }
  }
  return piece;
}

inline std::vector<Piece> generate_corpus(std::uint64_t seed = 2024, int pieces = 5) {
  Rng rng(seed);
  std::vector<Piece> out;
  for (int i = 0; i < pieces; ++i) out.push_back(generate_piece(rng, "piece" + std::to_string(i + 1)));
  return out;
}

/// Performance with injected errors: each note errs with probability
/// slope * (D_B(n) - onset) / scale, clipped to [0, 1], so notes below the
/// onset never err. Error times are note onsets.
struct ErrorInjection {
  double onset = 30.0;
  double slope = 0.3;
  double scale = 60.0;
};

inline std::vector<double> inject_errors(const PianoScore& piano, const DifficultyProfile& profile, Rng& rng,
                                         const ErrorInjection& cfg = {}) {
  if (piano.size() != profile.records.size()) throw Error("profile does not match the performed score");
  std::vector<double> times;
  for (std::size_t i = 0; i < piano.size(); ++i) {
    const double p = std::clamp(cfg.slope * (profile.records[i].both - cfg.onset) / cfg.scale, 0.0, 1.0);
    if (rng.chance(p)) times.push_back(piano[i].onset);
  }
  return times;
}

}  // namespace pianored::synthetic
