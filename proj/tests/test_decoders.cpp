#include <gtest/gtest.h>

#include <random>

#include "oracle.hpp"

using namespace pianored;

namespace {

const ModelSet& models() {
  static const ModelSet m;
  return m;
}

CondensedScore random_score(std::mt19937_64& rng, std::size_t n, int lo, int hi, bool annotate) {
  std::uniform_int_distribution<int> pitch(lo, hi), role(0, 3);
  std::vector<RawNote> raw;
  for (std::size_t k = 0; k < n; ++k) {
    RawNote r;
    r.onset = 0.25 * static_cast<double>(k);
    r.midi = pitch(rng);
    if (annotate) r.role = role(rng) == 0 ? Role::Melody : (role(rng) == 1 ? Role::Bass : Role::None);
    raw.push_back(r);
  }
  if (annotate) raw[0].role = Role::Melody;
  return condense(ingest(raw));
}

std::vector<double> random_beta(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> beta(n);
  for (double& b : beta) {
    const double r = u(rng);
    b = r < 0.1 ? 0.0 : (r < 0.15 ? 1.0 : u(rng));
  }
  return beta;
}

std::vector<oracle::NoteTerms> terms_for(const CondensedScore& score, std::span<const double> beta,
                                         std::size_t begin, std::size_t end) {
  std::vector<oracle::NoteTerms> t;
  for (std::size_t m = begin; m < end; ++m) {
    t.push_back(oracle::reduction_terms(score[m].note.pitch.midi(), beta[m], EditParams{}.gamma_oct));
  }
  return t;
}

template <class M>
void expect_reduction_matches(const M& model, const CondensedScore& score, const std::vector<double>& beta) {
  const auto terms = terms_for(score, beta, 0, score.size());
  const double want = oracle::merged_max(model, terms, 0, std::nullopt, std::nullopt);
  if (want == kNegInf) {
    EXPECT_THROW(decode_reduction(score, beta, EditParams{}, model), DecodeError);
    return;
  }
  const auto got = decode_reduction(score, beta, EditParams{}, model);
  EXPECT_NEAR(got.log_prob, want, 1e-9);
  EXPECT_NEAR(oracle::merged_path_score(model, terms, 0, std::nullopt, std::nullopt, got.states), want, 1e-9);
}

}  // namespace

TEST(Viterbi, IdentityOutputFollowsObservations) {
  const std::vector<int> obs{2, 0, 1, 1, 3, 2};
  std::vector<double> init(4, std::log(0.25));
  auto path = viterbi(
      init, obs.size(), [](std::size_t, int, int) { return std::log(0.25); },
      [&](std::size_t n, int s) { return s == obs[n] ? 0.0 : kNegInf; });
  EXPECT_EQ(path.states, obs);
}

TEST(Viterbi, SingleObservationIsArgmaxOfInitialPlusOutput) {
  const std::vector<double> init{-1.0, -0.5, -2.0};
  const std::vector<double> out{-0.1, -0.9, 0.0};
  auto path = viterbi(
      init, 1, [](std::size_t, int, int) { return 0.0; }, [&](std::size_t, int s) { return out[s]; });
  ASSERT_EQ(path.states.size(), 1u);
  EXPECT_EQ(path.states[0], 0);
  EXPECT_DOUBLE_EQ(path.log_prob, -1.1);
}

TEST(Viterbi, TiesGoToLowerState) {
  std::vector<double> init(3, 0.0);
  auto path = viterbi(
      init, 3, [](std::size_t, int, int) { return 0.0; }, [](std::size_t, int) { return 0.0; });
  EXPECT_EQ(path.states, (std::vector<int>{0, 0, 0}));
}

TEST(Viterbi, DeadObservationIsReported) {
  std::vector<double> init(2, 0.0);
  try {
    viterbi(
        init, 4, [](std::size_t, int, int) { return 0.0; },
        [](std::size_t n, int) { return n == 2 ? kNegInf : 0.0; });
    FAIL() << "expected DecodeError";
  } catch (const DecodeError& e) {
    EXPECT_EQ(e.step(), 2u);
  }
}

TEST(Viterbi, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 0.0), coin(0.0, 1.0);
  for (int inst = 0; inst < 100; ++inst) {
    const int S = 1 + static_cast<int>(rng() % 5);
    const std::size_t N = 1 + rng() % 6;
    auto draw = [&] { return coin(rng) < 0.15 ? kNegInf : u(rng); };
    std::vector<double> init(S);
    for (double& v : init) v = draw();
    std::vector<double> trans(S * S), out(N * S);
    for (double& v : trans) v = draw();
    for (double& v : out) v = draw();
    auto T = [&](std::size_t, int a, int b) { return trans[a * S + b]; };
    auto O = [&](std::size_t n, int s) { return out[n * S + s]; };
    const double want = oracle::dense_max(S, N, [&](int s) { return init[s]; }, T, O);
    if (want == kNegInf) {
      EXPECT_THROW(viterbi(init, N, T, O), DecodeError);
      continue;
    }
    const auto got = viterbi(init, N, T, O);
    EXPECT_NEAR(got.log_prob, want, 1e-9);
    double score = init[got.states[0]] + O(0, got.states[0]);
    for (std::size_t n = 1; n < N; ++n) score += T(n, got.states[n - 1], got.states[n]) + O(n, got.states[n]);
    EXPECT_NEAR(score, want, 1e-9);
  }
}

TEST(DecodeFingering, SingleNoteIsArgmaxOfInitial) {
  const auto& fm = models().fingering();
  const std::vector<int> midi{64};
  const auto est = decode_fingering(midi, Hand::Right, fm);
  int best = 0;
  for (int f = 1; f < kFingers; ++f) {
    if (fm.log_initial(Hand::Right, f, 64 - kLowestKey) > fm.log_initial(Hand::Right, best, 64 - kLowestKey)) best = f;
  }
  EXPECT_EQ(est.fingers, (std::vector<int>{best + 1}));
}

TEST(DecodeFingering, MatchesExhaustiveSearch) {
  const auto& fm = models().fingering();
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> pitch(48, 76);
  for (int inst = 0; inst < 100; ++inst) {
    const Hand h = inst % 2 ? Hand::Left : Hand::Right;
    std::vector<int> midi(1 + rng() % 6);
    for (int& p : midi) p = pitch(rng);
    const double want = oracle::dense_max(
        kFingers, midi.size(), [&](int f) { return fm.log_initial(h, f, midi[0] - kLowestKey); },
        [&](std::size_t n, int a, int b) {
          return fm.log_transition(h, a, midi[n - 1] - kLowestKey, b, midi[n] - kLowestKey);
        },
        [](std::size_t, int) { return 0.0; });
    const auto est = decode_fingering(midi, h, fm);
    EXPECT_NEAR(est.log_prob, want, 1e-9);
    ASSERT_EQ(est.fingers.size(), midi.size());
    for (int f : est.fingers) EXPECT_TRUE(f >= 1 && f <= 5);
  }
}

TEST(SeparateHands, AlternatingRegistersSplitByHand) {
  const std::vector<int> midi{36, 84, 36, 84};
  const auto sep = separate_hands(std::span<const int>(midi), models().fingering_hand());
  EXPECT_EQ(sep.hands, (std::vector<Hand>{Hand::Left, Hand::Right, Hand::Left, Hand::Right}));
}

TEST(SeparateHands, RepeatedPitchStaysInOneHand) {
  const std::vector<int> midi{60, 60, 60};
  const auto sep = separate_hands(std::span<const int>(midi), models().fingering_hand());
  EXPECT_EQ(sep.hands[0], sep.hands[1]);
  EXPECT_EQ(sep.hands[1], sep.hands[2]);
}

TEST(SeparateHands, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> pitch(30, 90);
  for (int inst = 0; inst < 100; ++inst) {
    std::vector<int> midi(1 + rng() % 6);
    for (int& p : midi) p = pitch(rng);
    std::vector<oracle::NoteTerms> terms;
    for (int p : midi) terms.push_back(oracle::separation_terms(p, 0.5, 0.5));
    auto check = [&](const auto& model) {
      const double want = oracle::merged_max(model, terms, 0, std::nullopt, std::nullopt);
      const auto sep = separate_hands(std::span<const int>(midi), model);
      EXPECT_NEAR(sep.path.log_prob, want, 1e-9);
    };
    if (inst % 2) {
      check(models().fingering_hand());
    } else {
      check(models().gaussian_hand());
    }
  }
}

TEST(DecodeReduction, ZeroDeletionProbabilityKeepsEverything) {
  std::mt19937_64 rng(14);
  const auto score = random_score(rng, 8, 40, 80, false);
  const std::vector<double> beta(score.size(), 0.0);
  const auto path = decode_reduction(score, beta, EditParams{}, models().gaussian_hand());
  for (const auto& s : path.states) EXPECT_NE(s.xi, Selector::NotPlayed);
}

TEST(DecodeReduction, CertainDeletionDropsEverything) {
  std::mt19937_64 rng(15);
  const auto score = random_score(rng, 8, 40, 80, false);
  const std::vector<double> beta(score.size(), 1.0);
  const auto path = decode_reduction(score, beta, EditParams{}, models().gaussian_hand());
  for (const auto& s : path.states) EXPECT_EQ(s.xi, Selector::NotPlayed);
}

TEST(DecodeReduction, GaussianMatchesExhaustiveSearch) {
  std::mt19937_64 rng(16);
  for (int inst = 0; inst < 100; ++inst) {
    const bool edge = inst % 10 == 0;
    const auto score = random_score(rng, 1 + rng() % 6, edge ? 21 : 40, edge ? 108 : 80, false);
    expect_reduction_matches(models().gaussian_hand(), score, random_beta(rng, score.size()));
  }
}

TEST(DecodeReduction, FingeringMatchesExhaustiveSearch) {
  std::mt19937_64 rng(17);
  for (int inst = 0; inst < 100; ++inst) {
    const auto score = random_score(rng, 1 + rng() % 4, 45, 80, false);
    expect_reduction_matches(models().fingering_hand(), score, random_beta(rng, score.size()));
  }
}

TEST(DecodeReduction, DistanceMatchesExhaustiveSearch) {
  std::mt19937_64 rng(18);
  for (int inst = 0; inst < 100; ++inst) {
    const auto score = random_score(rng, 1 + rng() % 6, 40, 80, true);
    const DistanceHandModel model(score, DistanceParams{});
    expect_reduction_matches(model, score, random_beta(rng, score.size()));
  }
}

TEST(DecodeReduction, ArbitraryModelMatchesExhaustiveSearch) {
  std::mt19937_64 rng(19);
  for (int inst = 0; inst < 100; ++inst) {
    const oracle::RandomHandModel model(2, rng, inst % 3 == 0 ? 0.3 : 0.0);
    const auto score = random_score(rng, 1 + rng() % 4, 50, 70, false);
    expect_reduction_matches(model, score, random_beta(rng, score.size()));
  }
}

TEST(DecodeReduction, ThreeNoteGaussianExample) {
  std::vector<RawNote> raw{{std::nullopt, 0.0, 60, 0}, {std::nullopt, 0.5, 67, 0}, {std::nullopt, 1.0, 43, 1}};
  const auto score = condense(ingest(raw));
  const std::vector<double> beta{0.3, 0.6, 0.1};
  expect_reduction_matches(models().gaussian_hand(), score, beta);
}

TEST(DecodeReduction, PathProbabilityAgreesWithDecoder) {
  std::mt19937_64 rng(20);
  const auto score = random_score(rng, 30, 36, 84, false);
  const auto beta = random_beta(rng, score.size());
  const auto path = decode_reduction(score, beta, EditParams{}, models().gaussian_hand());
  std::vector<StepSpec> steps;
  for (std::size_t m = 0; m < score.size(); ++m) steps.push_back(reduction_step(score, m, beta[m], EditParams{}));
  EXPECT_NEAR(path_log_prob(models().gaussian_hand(), std::span<const StepSpec>(steps), path.states), path.log_prob,
              1e-9);
}

TEST(DecodeRegion, WholeScoreEqualsFullDecode) {
  std::mt19937_64 rng(21);
  const auto score = random_score(rng, 12, 40, 80, false);
  const auto beta = random_beta(rng, score.size());
  const auto full = decode_reduction(score, beta, EditParams{}, models().gaussian_hand());
  const auto region = decode_region(score, {0, score.size()}, beta, EditParams{}, models().gaussian_hand(),
                                    std::span<const ReductionState>());
  EXPECT_EQ(region.states, full.states);
  EXPECT_DOUBLE_EQ(region.log_prob, full.log_prob);
}

namespace {

template <class M>
void expect_region_matches(const M& model, const CondensedScore& score, const std::vector<double>& beta,
                           NoteRange reg, const std::vector<ReductionState>& previous) {
  const auto terms = terms_for(score, beta, reg.begin, reg.end);
  std::optional<ReductionState> left;
  if (reg.begin > 0) left = previous[reg.begin - 1];
  std::optional<oracle::Right> right;
  if (reg.end < score.size()) {
    const double b = beta[reg.end];
    const double side = (1.0 - b) / 2.0;
    right = oracle::Right{previous[reg.end],
                          {b > 0 ? std::log(b) : kNegInf, side > 0 ? std::log(side) : kNegInf,
                           side > 0 ? std::log(side) : kNegInf}};
  }
  const double want = oracle::merged_max(model, terms, reg.begin, left, right);
  if (want == kNegInf) {
    EXPECT_THROW(decode_region(score, reg, beta, EditParams{}, model, previous), DecodeError);
    return;
  }
  const auto got = decode_region(score, reg, beta, EditParams{}, model, previous);
  EXPECT_NEAR(got.log_prob, want, 1e-9);
  EXPECT_NEAR(oracle::merged_path_score(model, terms, reg.begin, left, right, got.states), want, 1e-9);
}

}  // namespace

TEST(DecodeRegion, TwoNotesInsideFiveMatchExhaustiveSearch) {
  std::mt19937_64 rng(22);
  for (int inst = 0; inst < 100; ++inst) {
    const auto score = random_score(rng, 5, 40, 80, false);
    auto beta = random_beta(rng, score.size());
    const auto previous = decode_reduction(score, random_beta(rng, score.size()), EditParams{},
                                           models().gaussian_hand());
    // the previous path stays feasible only where its selectors keep positive weight
    for (std::size_t m = 0; m < score.size(); ++m) {
      if (previous.states[m].xi == Selector::NotPlayed && beta[m] == 0.0) beta[m] = 0.5;
      if (previous.states[m].xi != Selector::NotPlayed && beta[m] == 1.0) beta[m] = 0.5;
    }
    const std::size_t begin = 1 + rng() % 2;
    expect_region_matches(models().gaussian_hand(), score, beta, {begin, begin + 2}, previous.states);
  }
}

TEST(DecodeRegion, RandomRegionsMatchExhaustiveSearch) {
  std::mt19937_64 rng(23);
  for (int inst = 0; inst < 100; ++inst) {
    const bool fingering = inst % 2 == 1;
    const std::size_t n = 2 + rng() % 5;
    const auto score = random_score(rng, n, 45, 80, false);
    const auto beta = random_beta(rng, n);
    const auto previous =
        fingering ? decode_reduction(score, random_beta(rng, n), EditParams{}, models().fingering_hand())
                  : decode_reduction(score, random_beta(rng, n), EditParams{}, models().gaussian_hand());
    std::size_t a = rng() % n, b = rng() % n;
    if (a > b) std::swap(a, b);
    if (fingering) b = std::min(b, a + 2);
    const NoteRange reg{a, b + 1};
    if (fingering) {
      expect_region_matches(models().fingering_hand(), score, beta, reg, previous.states);
    } else {
      expect_region_matches(models().gaussian_hand(), score, beta, reg, previous.states);
    }
  }
}

TEST(DecodeRegion, SingleNoteBetweenFixedStates) {
  std::mt19937_64 rng(24);
  const auto score = random_score(rng, 3, 50, 70, false);
  const std::vector<double> beta{0.0, 0.5, 0.0};
  const auto previous = decode_reduction(score, beta, EditParams{}, models().gaussian_hand());
  expect_region_matches(models().gaussian_hand(), score, beta, {1, 2}, previous.states);
}

TEST(DecodeMerged, BeamKeepsAtMostRequestedStates) {
  std::mt19937_64 rng(25);
  const auto score = random_score(rng, 40, 36, 84, false);
  const auto beta = random_beta(rng, score.size());
  const auto exact = decode_reduction(score, beta, EditParams{}, models().fingering_hand());
  const auto beam = decode_reduction(score, beta, EditParams{}, models().fingering_hand(), {.max_states = 16});
  EXPECT_LE(beam.log_prob, exact.log_prob + 1e-9);
  EXPECT_EQ(beam.states.size(), exact.states.size());
}
