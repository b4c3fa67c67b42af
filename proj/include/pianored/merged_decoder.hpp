#pragma once

// Merged-output HMM decoding. A state is r = (xi, f_L, p_L, f_R, p_R): the
// selector xi says whether the current note was not played (NP) or came from
// the left or right hand, and only the selected hand's (finger, pitch)
// advances. Only states with non-zero output probability are materialised:
// the selected hand's latent pitch must be one of the note's candidates, and
// the idle hand's component persists. A state is dropped only when it cannot
// overtake a comparable state even with the largest possible transition gain
// of its differing hands, so the search stays exact.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "pianored/common.hpp"
#include "pianored/hand_models.hpp"
#include "pianored/pitch.hpp"
#include "pianored/viterbi.hpp"

namespace pianored {

enum class Selector : std::uint8_t { NotPlayed = 0, Left = 1, Right = 2 };

inline Selector selector_for(Hand h) { return h == Hand::Left ? Selector::Left : Selector::Right; }

/// One hand's latent component. finger is 1..5 (0 when the model has no
/// fingering); midi 0 means the hand has not played yet.
struct HandSlot {
  int finger = 0;
  int midi = 0;

  bool unset() const { return midi == 0; }
  friend bool operator==(const HandSlot&, const HandSlot&) = default;
};

struct ReductionState {
  Selector xi = Selector::NotPlayed;
  HandSlot left;
  HandSlot right;

  const HandSlot& hand(Hand h) const { return h == Hand::Left ? left : right; }
  friend bool operator==(const ReductionState&, const ReductionState&) = default;
};

/// A possible latent pitch for a note and its output log-probability.
struct Candidate {
  int midi;
  double log_output;
};

/// Everything the decoder needs to know about one observed note.
struct StepSpec {
  double log_np = kNegInf;                   // log P(xi = NP)
  std::array<double, 2> log_hand{kNegInf, kNegInf};  // log P(xi = L), log P(xi = R)
  double log_np_output = kNegInf;            // log P(p | NP)
  std::vector<Candidate> candidates;         // latent pitches for xi = L or R
};

/// Fixed state one note after a decoded region, with the selector weight of
/// that note.
struct RightBoundary {
  ReductionState state;
  std::array<double, 3> log_selector{kNegInf, kNegInf, kNegInf};  // NP, L, R
};

struct MergedDecodeOptions {
  std::size_t max_states = 0;  // keep only the best N states per step; 0 = exact search
};

namespace detail {

// Packed key orders states lexicographically by (xi, f_L, p_L, f_R, p_R); an
// unset slot sorts last.
inline constexpr std::uint32_t kUnsetSlot = 0x3FF;

inline std::uint32_t pack_slot(int finger0, int pitch_index) {
  return (static_cast<std::uint32_t>(finger0) << 7) | static_cast<std::uint32_t>(pitch_index);
}
inline std::uint32_t pack(std::uint32_t xi, std::uint32_t left, std::uint32_t right) {
  return (xi << 20) | (left << 10) | right;
}
inline std::uint32_t key_xi(std::uint32_t key) { return key >> 20; }
inline std::uint32_t key_slot(std::uint32_t key, Hand h) {
  return h == Hand::Left ? (key >> 10) & 0x3FF : key & 0x3FF;
}
inline int slot_finger(std::uint32_t slot) { return static_cast<int>(slot >> 7); }
inline int slot_pitch(std::uint32_t slot) { return static_cast<int>(slot & 0x7F); }

template <HandModel M>
std::uint32_t encode_slot(const HandSlot& s, const M& model) {
  if (s.unset()) return kUnsetSlot;
  const int f0 = model.fingers() == 1 ? 0 : s.finger - 1;
  return pack_slot(f0, s.midi - kLowestKey);
}

template <HandModel M>
HandSlot decode_slot(std::uint32_t slot, const M& model) {
  if (slot == kUnsetSlot) return {};
  return {model.fingers() == 1 ? 0 : slot_finger(slot) + 1, slot_pitch(slot) + kLowestKey};
}

template <HandModel M>
double hand_move(const M& model, Hand h, std::uint32_t from, int finger0, int pitch_index, std::size_t note) {
  if (from == kUnsetSlot) return model.log_initial(h, finger0, pitch_index, note);
  return model.log_transition(h, slot_finger(from), slot_pitch(from), finger0, pitch_index, note);
}

struct Node {
  std::uint32_t key;
  double score;
  std::int32_t back;
};

}  // namespace detail

/// Decodes steps[0..] (global note indices first_note, first_note + 1, ...).
/// `left` is the fixed state preceding the first step, if any; `right` the
/// fixed state following the last. The returned log-probability includes the
/// transition into `right` but not its output term.
template <HandModel M>
DecodedPath<ReductionState> decode_merged(const M& model, std::span<const StepSpec> steps,
                                          std::size_t first_note,
                                          const std::optional<ReductionState>& left = std::nullopt,
                                          const std::optional<RightBoundary>& right = std::nullopt,
                                          MergedDecodeOptions opts = {}) {
  using namespace detail;
  DecodedPath<ReductionState> out;
  const std::size_t N = steps.size();
  if (N == 0) {
    out.log_prob = 0.0;
    return out;
  }

  const int F = model.fingers();

  // Class of a state as far as the right boundary is concerned: states in the
  // same class have identical feasibility for every continuation.
  auto class_of = [&](std::uint32_t key) -> std::uint32_t {
    if (!right) return 0;
    switch (right->state.xi) {
      case Selector::Left: return key_slot(key, Hand::Right);
      case Selector::Right: return key_slot(key, Hand::Left);
      default: return key & 0xFFFFF;
    }
  };

  std::vector<std::vector<Node>> lattice(N);
  std::vector<Node> frontier;
  {
    const std::uint32_t l = left ? encode_slot(left->left, model) : kUnsetSlot;
    const std::uint32_t r = left ? encode_slot(left->right, model) : kUnsetSlot;
    const std::uint32_t xi = left ? static_cast<std::uint32_t>(left->xi) : 0;
    frontier.push_back({pack(xi, l, r), 0.0, -1});
  }

  std::unordered_map<std::uint32_t, std::pair<double, std::int32_t>> next;
  for (std::size_t k = 0; k < N; ++k) {
    const StepSpec& spec = steps[k];
    const std::size_t note = first_note + k;
    next.clear();
    next.reserve(frontier.size() * 4 + 16);
    auto offer = [&](std::uint32_t key, double score, std::int32_t back) {
      if (score == kNegInf) return;
      auto [it, inserted] = next.try_emplace(key, score, back);
      if (!inserted && score > it->second.first) it->second = {score, back};
    };

    for (std::size_t i = 0; i < frontier.size(); ++i) {
      const Node& prev = frontier[i];
      const std::uint32_t ls = key_slot(prev.key, Hand::Left);
      const std::uint32_t rs = key_slot(prev.key, Hand::Right);
      const auto back = static_cast<std::int32_t>(i);
      if (spec.log_np != kNegInf && spec.log_np_output != kNegInf) {
        offer(pack(0, ls, rs), prev.score + spec.log_np + spec.log_np_output, back);
      }
      for (Hand h : kHands) {
        const double w = spec.log_hand[hand_index(h)];
        if (w == kNegInf) continue;
        const std::uint32_t from = h == Hand::Left ? ls : rs;
        for (const Candidate& c : spec.candidates) {
          if (c.log_output == kNegInf) continue;
          const int p = c.midi - kLowestKey;
          for (int f = 0; f < F; ++f) {
            const double t = hand_move(model, h, from, f, p, note);
            if (t == kNegInf) continue;
            const std::uint32_t slot = pack_slot(f, p);
            const std::uint32_t key = h == Hand::Left ? pack(1, slot, rs) : pack(2, ls, slot);
            offer(key, prev.score + w + t + c.log_output, back);
          }
        }
      }
    }
    if (next.empty()) throw DecodeError(note, "all paths have zero probability");

    std::vector<Node> layer;
    layer.reserve(next.size());
    for (const auto& [key, v] : next) layer.push_back({key, v.first, v.second});
    std::sort(layer.begin(), layer.end(), [](const Node& a, const Node& b) { return a.key < b.key; });

    // Ties between predecessors: keep the lowest-keyed one. The hash map kept
    // the first strictly-best offer in frontier order, which is key order.

    // A state can only recover through hands whose slot differs from the
    // state it is compared with; drop it if even the largest such gain leaves
    // it behind the best state of its group.
    auto regret = [&](Hand h, std::uint32_t a, std::uint32_t b) {
      if (a == b) return 0.0;
      auto pitch = [](std::uint32_t s) { return s == kUnsetSlot ? -1 : slot_pitch(s); };
      return model.regret(h, slot_finger(a), pitch(a), slot_finger(b), pitch(b));
    };
    std::array<std::unordered_map<std::uint64_t, std::size_t>, 4> best;
    auto group = [&](const Node& n, int which) -> std::uint64_t {
      const std::uint64_t c = class_of(n.key);
      const std::uint64_t l = key_slot(n.key, Hand::Left);
      const std::uint64_t r = key_slot(n.key, Hand::Right);
      switch (which) {
        case 0: return (c << 20) | (l << 10) | r;
        case 1: return (c << 20) | r;
        case 2: return (c << 20) | l;
        default: return c << 20;
      }
    };
    for (std::size_t i = 0; i < layer.size(); ++i) {
      for (int g = 0; g < 4; ++g) {
        auto [it, inserted] = best[g].try_emplace(group(layer[i], g), i);
        if (!inserted && layer[i].score > layer[it->second].score) it->second = i;
      }
    }
    std::vector<char> drop(layer.size(), 0);
    for (std::size_t i = 0; i < layer.size(); ++i) {
      const Node& n = layer[i];
      for (int g = 0; g < 4 && !drop[i]; ++g) {
        const Node& b = layer[best[g].at(group(n, g))];
        const double gain = regret(Hand::Left, key_slot(n.key, Hand::Left), key_slot(b.key, Hand::Left)) +
                            regret(Hand::Right, key_slot(n.key, Hand::Right), key_slot(b.key, Hand::Right));
        drop[i] = n.score + gain + 1e-9 < b.score;
      }
    }
    {
      std::size_t w = 0;
      for (std::size_t i = 0; i < layer.size(); ++i) {
        if (!drop[i]) layer[w++] = layer[i];
      }
      layer.resize(w);
    }

    if (opts.max_states > 0 && layer.size() > opts.max_states) {
      std::stable_sort(layer.begin(), layer.end(), [](const Node& a, const Node& b) { return a.score > b.score; });
      layer.resize(opts.max_states);
      std::sort(layer.begin(), layer.end(), [](const Node& a, const Node& b) { return a.key < b.key; });
    }
    lattice[k] = std::move(layer);
    frontier = lattice[k];
  }

  // Final state, optionally scored against the right boundary.
  double best = kNegInf;
  std::int32_t arg = -1;
  const std::size_t boundary_note = first_note + N;
  std::uint32_t bl = kUnsetSlot, br = kUnsetSlot;
  if (right) {
    bl = encode_slot(right->state.left, model);
    br = encode_slot(right->state.right, model);
  }
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    const Node& n = frontier[i];
    double score = n.score;
    if (right) {
      const std::uint32_t ls = key_slot(n.key, Hand::Left);
      const std::uint32_t rs = key_slot(n.key, Hand::Right);
      const auto xi = right->state.xi;
      score += right->log_selector[static_cast<int>(xi)];
      if (xi == Selector::NotPlayed) {
        if (ls != bl || rs != br) continue;
      } else {
        const Hand h = xi == Selector::Left ? Hand::Left : Hand::Right;
        if ((h == Hand::Left ? rs : ls) != (h == Hand::Left ? br : bl)) continue;
        const std::uint32_t target = h == Hand::Left ? bl : br;
        if (target == kUnsetSlot) continue;
        score += hand_move(model, h, h == Hand::Left ? ls : rs, slot_finger(target), slot_pitch(target),
                           boundary_note);
      }
    }
    if (score == kNegInf) continue;
    if (arg < 0 || score > best) {
      best = score;
      arg = static_cast<std::int32_t>(i);
    }
  }
  if (arg < 0) throw DecodeError(boundary_note, "no path reaches the fixed boundary state");

  out.log_prob = best;
  out.states.resize(N);
  for (std::size_t k = N; k-- > 0;) {
    const Node& n = lattice[k][arg];
    out.states[k] = {static_cast<Selector>(key_xi(n.key)), decode_slot(key_slot(n.key, Hand::Left), model),
                     decode_slot(key_slot(n.key, Hand::Right), model)};
    arg = n.back;
  }
  return out;
}

/// Log joint probability of a complete state sequence (no boundaries);
/// -inf if the sequence breaks persistence or leaves the candidates.
template <HandModel M>
double path_log_prob(const M& model, std::span<const StepSpec> steps, std::span<const ReductionState> states) {
  using namespace detail;
  if (steps.size() != states.size()) throw Error("path length differs from the number of steps");
  std::uint32_t ls = kUnsetSlot, rs = kUnsetSlot;
  double total = 0.0;
  for (std::size_t n = 0; n < steps.size(); ++n) {
    const StepSpec& spec = steps[n];
    const ReductionState& st = states[n];
    const std::uint32_t nl = encode_slot(st.left, model);
    const std::uint32_t nr = encode_slot(st.right, model);
    if (st.xi == Selector::NotPlayed) {
      if (nl != ls || nr != rs) return kNegInf;
      total += spec.log_np + spec.log_np_output;
    } else {
      const Hand h = st.xi == Selector::Left ? Hand::Left : Hand::Right;
      if ((h == Hand::Left ? nr != rs : nl != ls)) return kNegInf;
      const std::uint32_t to = h == Hand::Left ? nl : nr;
      if (to == kUnsetSlot) return kNegInf;
      const int midi = slot_pitch(to) + kLowestKey;
      const auto c = std::find_if(spec.candidates.begin(), spec.candidates.end(),
                                  [&](const Candidate& x) { return x.midi == midi; });
      if (c == spec.candidates.end()) return kNegInf;
      total += spec.log_hand[hand_index(h)] + c->log_output +
               hand_move(model, h, h == Hand::Left ? ls : rs, slot_finger(to), slot_pitch(to), n);
    }
    ls = nl;
    rs = nr;
    if (total == kNegInf) return kNegInf;
  }
  return total;
}

}  // namespace pianored
