#pragma once

// Self-describing key/value parameter files. Every table line carries its
// dimensions; numbers use the shortest round-trip decimal form, so writing
// and re-reading a parameter set is bit-exact and locale-independent.

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "pianored/common.hpp"
#include "pianored/default_fingering.hpp"
#include "pianored/fingering.hpp"
#include "pianored/models.hpp"

namespace pianored {

struct ModelParams {
  GaussianParams gaussian;
  EditParams edit;
  MergedHandParams merged;
  FingeringParams fingering = default_fingering_params();
};

inline std::string format_exact(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_sig6(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
  return std::string(buf, res.ptr);
}

namespace detail {

inline void write_table(std::ostream& out, const std::string& key, const std::vector<int>& dims,
                        const std::vector<double>& values) {
  out << key;
  for (int d : dims) out << ' ' << d;
  const int row = dims.empty() ? 1 : dims.back();
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << (i % row == 0 ? "\n " : " ") << format_exact(values[i]);
  }
  out << '\n';
}

class TokenStream {
 public:
  TokenStream(std::istream& in, std::string path) : path_(std::move(path)) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok) tokens_.push_back({tok, lineno});
    }
  }

  bool done() const { return pos_ >= tokens_.size(); }

  std::string word() {
    if (done()) throw ParseError(path_, last_line(), "unexpected end of file");
    return tokens_[pos_++].text;
  }

  double number() {
    const auto& t = peek_token();
    double v = 0.0;
    auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size()) {
      throw ParseError(path_, t.line, "expected a number, got '" + t.text + "'");
    }
    ++pos_;
    return v;
  }

  int integer() {
    const auto& t = peek_token();
    int v = 0;
    auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size()) {
      throw ParseError(path_, t.line, "expected an integer, got '" + t.text + "'");
    }
    ++pos_;
    return v;
  }

  std::vector<double> table(const std::vector<int>& expected_dims) {
    std::size_t count = 1;
    for (int expected : expected_dims) {
      const std::size_t line = current_line();
      const int d = integer();
      if (d != expected) {
        throw ParseError(path_, line, "table dimension " + std::to_string(d) + ", expected " +
                                          std::to_string(expected));
      }
      count *= static_cast<std::size_t>(d);
    }
    std::vector<double> values(count);
    for (double& v : values) v = number();
    return values;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_, current_line(), what); }

  std::size_t current_line() const { return done() ? last_line() : tokens_[pos_].line; }

 private:
  struct Token {
    std::string text;
    std::size_t line;
  };
  const Token& peek_token() const {
    if (done()) throw ParseError(path_, last_line(), "unexpected end of file");
    return tokens_[pos_];
  }
  std::size_t last_line() const { return tokens_.empty() ? 0 : tokens_.back().line; }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::string path_;
};

}  // namespace detail

inline constexpr const char* kParamsMagic = "pianored-params";

inline void write_params(std::ostream& out, const ModelParams& p) {
  using detail::write_table;
  out << kParamsMagic << " 1\n";
  write_table(out, "gaussian.sigma_p", {}, {p.gaussian.sigma_p});
  write_table(out, "gaussian.epsilon", {}, {p.gaussian.epsilon});
  out << "gaussian.p0_left " << p.gaussian.p0_left << '\n';
  out << "gaussian.p0_right " << p.gaussian.p0_right << '\n';
  write_table(out, "edit.gamma_oct", {}, {p.edit.gamma_oct});
  write_table(out, "edit.kappa", {}, {p.edit.kappa});
  write_table(out, "edit.a_mult", {}, {p.edit.a_mult});
  write_table(out, "merged.alpha_left", {}, {p.merged.alpha_left});
  write_table(out, "merged.alpha_right", {}, {p.merged.alpha_right});

  const auto& f = p.fingering;
  write_table(out, "fingering.init_finger", {kFingers}, {f.init_finger.begin(), f.init_finger.end()});
  std::vector<double> trans, outside;
  for (const auto& row : f.finger_trans) trans.insert(trans.end(), row.begin(), row.end());
  for (const auto& row : f.outside) outside.insert(outside.end(), row.begin(), row.end());
  write_table(out, "fingering.finger_trans", {kFingers, kFingers}, trans);
  write_table(out, "fingering.pitch_out",
              {kFingers, kFingers, FingeringParams::kDxBins, FingeringParams::kDyBins}, f.pitch_out);
  write_table(out, "fingering.outside", {kFingers, kFingers}, outside);
}

/// Reads a parameter file; sections not present keep their defaults.
inline ModelParams read_params(std::istream& in, const std::string& path = "<stream>") {
  detail::TokenStream ts(in, path);
  if (ts.done() || ts.word() != kParamsMagic) ts.fail("missing 'pianored-params' header");
  if (ts.integer() != 1) ts.fail("unsupported parameter file version");

  ModelParams p;
  while (!ts.done()) {
    const std::size_t line = ts.current_line();
    const std::string key = ts.word();
    if (key == "gaussian.sigma_p") p.gaussian.sigma_p = ts.number();
    else if (key == "gaussian.epsilon") p.gaussian.epsilon = ts.number();
    else if (key == "gaussian.p0_left") p.gaussian.p0_left = ts.integer();
    else if (key == "gaussian.p0_right") p.gaussian.p0_right = ts.integer();
    else if (key == "edit.gamma_oct") p.edit.gamma_oct = ts.number();
    else if (key == "edit.kappa") p.edit.kappa = ts.number();
    else if (key == "edit.a_mult") p.edit.a_mult = ts.number();
    else if (key == "merged.alpha_left") p.merged.alpha_left = ts.number();
    else if (key == "merged.alpha_right") p.merged.alpha_right = ts.number();
    else if (key == "fingering.init_finger") {
      const auto v = ts.table({kFingers});
      std::copy(v.begin(), v.end(), p.fingering.init_finger.begin());
    } else if (key == "fingering.finger_trans") {
      const auto v = ts.table({kFingers, kFingers});
      for (int i = 0; i < kFingers; ++i)
        for (int j = 0; j < kFingers; ++j) p.fingering.finger_trans[i][j] = v[i * kFingers + j];
    } else if (key == "fingering.pitch_out") {
      p.fingering.pitch_out =
          ts.table({kFingers, kFingers, FingeringParams::kDxBins, FingeringParams::kDyBins});
    } else if (key == "fingering.outside") {
      const auto v = ts.table({kFingers, kFingers});
      for (int i = 0; i < kFingers; ++i)
        for (int j = 0; j < kFingers; ++j) p.fingering.outside[i][j] = v[i * kFingers + j];
    } else {
      throw ParseError(path, line, "unknown key '" + key + "'");
    }
  }
  try {
    p.gaussian.validate();
    p.edit.validate();
    p.merged.validate();
  } catch (const Error& e) {
    throw ParseError(path, 0, e.what());
  }
  return p;
}

inline ModelParams read_params_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError(path, 0, "cannot open file");
  return read_params(f, path);
}

}  // namespace pianored
