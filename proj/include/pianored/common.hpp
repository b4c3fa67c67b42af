#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace pianored {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the offending path and 1-based line (0 if n/a).
class ParseError : public Error {
 public:
  ParseError(std::string path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what),
        path_(std::move(path)),
        line_(line) {}

  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

/// log(sum(exp(x))) over a range of log values; -inf for an empty or all -inf range.
template <class Range>
double log_sum_exp(const Range& values) {
  double hi = kNegInf;
  for (double v : values) hi = std::max(hi, v);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

enum class Hand : std::uint8_t { Left = 0, Right = 1 };

inline constexpr std::array<Hand, 2> kHands{Hand::Left, Hand::Right};

inline constexpr int hand_index(Hand h) { return static_cast<int>(h); }

inline char hand_char(Hand h) { return h == Hand::Left ? 'L' : 'R'; }

}  // namespace pianored
