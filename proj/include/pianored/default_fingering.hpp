#pragma once

// Bundled toy fingering corpus (scales, arpeggios, five-finger patterns,
// block chords, chromatic runs) and the parameters trained from it.
// Corpus version 1.

#include <algorithm>
#include <vector>

#include "pianored/fingering.hpp"

namespace pianored {

namespace detail {

inline std::vector<int> walk(int start, const std::vector<int>& steps) {
  std::vector<int> out{start};
  for (int s : steps) out.push_back(out.back() + s);
  return out;
}

inline void add_both_directions(std::vector<FingeringSample>& corpus, Hand hand,
                                std::vector<int> pitches, std::vector<int> fingers) {
  corpus.push_back({hand, pitches, fingers});
  std::reverse(pitches.begin(), pitches.end());
  std::reverse(fingers.begin(), fingers.end());
  corpus.push_back({hand, std::move(pitches), std::move(fingers)});
}

}  // namespace detail

inline constexpr int kDefaultCorpusVersion = 1;

inline std::vector<FingeringSample> default_fingering_corpus() {
  using detail::add_both_directions;
  using detail::walk;
  std::vector<FingeringSample> corpus;

  const std::vector<int> major2{2, 2, 1, 2, 2, 2, 1, 2, 2, 1, 2, 2, 2, 1};
  // C, G, D, A, E major share the standard fingerings.
  for (int tonic : {0, 7, 2, 9, 4}) {
    add_both_directions(corpus, Hand::Right, walk(60 + tonic, major2),
                        {1, 2, 3, 1, 2, 3, 4, 1, 2, 3, 1, 2, 3, 4, 5});
    add_both_directions(corpus, Hand::Left, walk(36 + tonic, major2),
                        {5, 4, 3, 2, 1, 3, 2, 1, 4, 3, 2, 1, 3, 2, 1});
  }
  add_both_directions(corpus, Hand::Right, walk(65, major2),
                      {1, 2, 3, 4, 1, 2, 3, 1, 2, 3, 4, 1, 2, 3, 4});

  // Root-position arpeggios over two octaves.
  const std::vector<int> major_arp{4, 3, 5, 4, 3, 5};
  const std::vector<int> minor_arp{3, 4, 5, 3, 4, 5};
  for (int root : {0, 5, 7, 9, 2}) {
    const auto& steps = (root == 9 || root == 2) ? minor_arp : major_arp;
    add_both_directions(corpus, Hand::Right, walk(60 + root, steps), {1, 2, 3, 1, 2, 3, 5});
    add_both_directions(corpus, Hand::Left, walk(36 + root, steps), {5, 4, 2, 1, 4, 2, 1});
  }

  // Five-finger positions.
  for (int start : {60, 62, 67, 72}) {
    corpus.push_back({Hand::Right, walk(start, {2, 2, 1, 2, -2, -1, -2, -2}), {1, 2, 3, 4, 5, 4, 3, 2, 1}});
  }
  for (int start : {36, 41, 43, 48}) {
    corpus.push_back({Hand::Left, walk(start, {2, 2, 1, 2, -2, -1, -2, -2}), {5, 4, 3, 2, 1, 2, 3, 4, 5}});
  }

  // Block triads, sequenced low to high, through I-IV-V-I.
  {
    std::vector<int> rh, rf, lh, lf;
    for (int root : {60, 65, 67, 60, 62, 64}) {
      for (int i : {0, 4, 7}) rh.push_back(root + i);
      rf.insert(rf.end(), {1, 3, 5});
      for (int i : {0, 4, 7}) lh.push_back(root - 24 + i);
      lf.insert(lf.end(), {5, 3, 1});
    }
    corpus.push_back({Hand::Right, rh, rf});
    corpus.push_back({Hand::Left, lh, lf});
  }

  // Octaves and Alberti bass.
  corpus.push_back({Hand::Right, {60, 72, 62, 74, 64, 76, 65, 77}, {1, 5, 1, 5, 1, 5, 1, 5}});
  corpus.push_back({Hand::Left, {36, 48, 41, 53, 43, 55, 36, 48}, {5, 1, 5, 1, 5, 1, 5, 1}});
  corpus.push_back({Hand::Left, {48, 55, 52, 55, 48, 55, 52, 55, 47, 55, 50, 55},
                    {5, 1, 3, 1, 5, 1, 3, 1, 5, 1, 3, 1}});

  // Chromatic scale.
  add_both_directions(corpus, Hand::Right, walk(60, std::vector<int>(12, 1)),
                      {1, 3, 1, 3, 1, 2, 3, 1, 3, 1, 3, 1, 2});
  add_both_directions(corpus, Hand::Left, walk(48, std::vector<int>(12, 1)),
                      {1, 3, 1, 3, 2, 1, 3, 1, 3, 1, 3, 2, 1});

  // Repeated notes and small leaps.
  corpus.push_back({Hand::Right, {67, 67, 67, 69, 71, 71, 69, 67}, {3, 3, 3, 4, 5, 5, 4, 3}});
  corpus.push_back({Hand::Right, {64, 67, 72, 67, 64, 60}, {2, 3, 5, 3, 2, 1}});
  corpus.push_back({Hand::Left, {43, 47, 50, 55, 50, 47, 43}, {5, 4, 2, 1, 2, 4, 5}});
  return corpus;
}

/// Parameters trained once from the bundled corpus with the default smoothing.
inline const FingeringParams& default_fingering_params() {
  static const FingeringParams params = [] {
    const auto corpus = default_fingering_corpus();
    return train_fingering(corpus);
  }();
  return params;
}

}  // namespace pianored
