#pragma once

#include <span>
#include <string>
#include <vector>

#include "pianored/common.hpp"

namespace pianored {

/// Raised when no state sequence has non-zero probability.
class DecodeError : public Error {
 public:
  DecodeError(std::size_t step, const std::string& what)
      : Error("step " + std::to_string(step) + ": " + what), step_(step) {}
  /// First observation index at which every path had probability zero.
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

template <class State>
struct DecodedPath {
  std::vector<State> states;
  double log_prob = kNegInf;
};

/// Max-product decoding over a dense state set in log space.
///
/// `log_transition(n, from, to)` scores the move into step n (n >= 1) and
/// `log_output(n, state)` scores observation n. Ties resolve toward the lower
/// state index, both for predecessors and for the final state.
template <class Transition, class Output>
DecodedPath<int> viterbi(std::span<const double> log_initial, std::size_t length,
                         Transition&& log_transition, Output&& log_output) {
  DecodedPath<int> path;
  if (length == 0) {
    path.log_prob = 0.0;
    return path;
  }
  const std::size_t S = log_initial.size();
  std::vector<double> delta(S), next(S);
  std::vector<std::vector<int>> back(length, std::vector<int>(S, -1));

  auto check_alive = [&](std::size_t n, const std::vector<double>& d) {
    for (double v : d) {
      if (v != kNegInf) return;
    }
    throw DecodeError(n, "all paths have zero probability");
  };

  for (std::size_t s = 0; s < S; ++s) {
    delta[s] = log_initial[s] == kNegInf ? kNegInf : log_initial[s] + log_output(std::size_t{0}, static_cast<int>(s));
  }
  check_alive(0, delta);

  for (std::size_t n = 1; n < length; ++n) {
    for (std::size_t s = 0; s < S; ++s) {
      double best = kNegInf;
      int arg = -1;
      for (std::size_t r = 0; r < S; ++r) {
        if (delta[r] == kNegInf) continue;
        const double t = log_transition(n, static_cast<int>(r), static_cast<int>(s));
        if (t == kNegInf) continue;
        const double v = delta[r] + t;
        if (arg < 0 || v > best) {
          best = v;
          arg = static_cast<int>(r);
        }
      }
      if (arg >= 0) {
        const double o = log_output(n, static_cast<int>(s));
        next[s] = o == kNegInf ? kNegInf : best + o;
      } else {
        next[s] = kNegInf;
      }
      back[n][s] = next[s] == kNegInf ? -1 : arg;
    }
    check_alive(n, next);
    std::swap(delta, next);
  }

  int arg = -1;
  for (std::size_t s = 0; s < S; ++s) {
    if (delta[s] == kNegInf) continue;
    if (arg < 0 || delta[s] > delta[arg]) arg = static_cast<int>(s);
  }
  path.log_prob = delta[arg];
  path.states.resize(length);
  for (std::size_t n = length; n-- > 0;) {
    path.states[n] = arg;
    if (n > 0) arg = back[n][arg];
  }
  return path;
}

}  // namespace pianored
