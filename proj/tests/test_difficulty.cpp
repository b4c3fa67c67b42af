#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "pianored/pianored.hpp"

using namespace pianored;

namespace {

const GaussianModel& gaussian() {
  static const GaussianModel g{GaussianParams{}};
  return g;
}

HandPart part(std::vector<double> onsets, std::vector<int> midi) { return {std::move(onsets), std::move(midi)}; }

DifficultyProfile profile_of(std::vector<std::array<double, 3>> d) {
  DifficultyProfile p;
  int id = 0;
  for (const auto& [l, r, b] : d) p.records.push_back({id++, 0.0, l, r, b});
  return p;
}

}  // namespace

TEST(Window, ClosedInterval) {
  const auto p = part({0.0, 0.4, 0.9, 1.6}, {60, 62, 64, 65});
  EXPECT_EQ(window_notes(p, 0.5, 1.0), (std::vector<int>{60, 62, 64}));
  EXPECT_EQ(window_notes(p, 1.1, 1.0), (std::vector<int>{64, 65}));
  EXPECT_TRUE(window_notes(HandPart{}, 0.5, 1.0).empty());
  EXPECT_TRUE(window_notes(p, 100.0, 1.0).empty());
}

TEST(Window, EdgesWithinToleranceCount) {
  const auto p = part({0.0, 1.0}, {60, 62});
  EXPECT_EQ(window_notes(p, 0.5, 1.0).size(), 2u);
  EXPECT_EQ(window_notes(p, 0.5 + 1e-12, 1.0).size(), 2u);
  EXPECT_EQ(window_notes(p, 0.5 + 1e-6, 1.0).size(), 1u);
}

TEST(Difficulty, NoInfoClosedForm) {
  const auto p = part({0.0, 0.1, 0.2, 0.3}, {60, 70, 80, 90});
  EXPECT_NEAR(difficulty_at(p, Hand::Right, 0.15, DifficultyMeasure::no_info(), 1.0), 4.0 * std::log(88.0), 1e-12);
  EXPECT_NEAR(difficulty_at(p, Hand::Right, 0.15, DifficultyMeasure::no_info(), 1.0), 17.909, 1e-3);
  EXPECT_EQ(difficulty_at(p, Hand::Right, 50.0, DifficultyMeasure::no_info(), 1.0), 0.0);
}

TEST(Difficulty, GaussianTwoNoteWindow) {
  const double s = 5.0, eps = 4e-4;
  auto row = [&](int c, int k) {
    double norm = 0.0;
    for (int j = 21; j <= 108; ++j) norm += std::exp(-(j - c) * (j - c) / (2 * s * s)) / std::sqrt(2 * M_PI * s * s) + eps;
    return (std::exp(-(k - c) * (k - c) / (2 * s * s)) / std::sqrt(2 * M_PI * s * s) + eps) / norm;
  };
  const double want = -(std::log(row(72, 60)) + std::log(row(60, 62)));
  const auto p = part({0.0, 0.25}, {60, 62});
  EXPECT_NEAR(difficulty_at(p, Hand::Right, 0.0, DifficultyMeasure::gaussian(gaussian()), 1.0), want, 1e-12);
}

TEST(Difficulty, WindowScalesRate) {
  const auto p = part({0.0, 0.1}, {60, 62});
  const double d1 = difficulty_at(p, Hand::Left, 0.0, DifficultyMeasure::no_info(), 1.0);
  const double d2 = difficulty_at(p, Hand::Left, 0.0, DifficultyMeasure::no_info(), 2.0);
  EXPECT_NEAR(d1, 2.0 * d2, 1e-12);
}

TEST(Difficulty, FingeringMeasureUsesBestFingering) {
  const FingeringModel fm(default_fingering_params());
  const std::vector<int> midi{60, 64, 67};
  const auto p = part({0.0, 0.2, 0.4}, midi);
  const double d = difficulty_at(p, Hand::Right, 0.2, DifficultyMeasure::fingering(fm), 1.0);
  EXPECT_NEAR(d, -decode_fingering(midi, Hand::Right, fm).log_prob, 1e-12);
}

TEST(Profile, BothIsSumOfHands) {
  std::mt19937_64 rng(5);
  PianoScore score;
  for (int i = 0; i < 200; ++i) {
    score.push_back({i, 0.125 * static_cast<double>(rng() % 160), 30 + static_cast<int>(rng() % 60),
                     rng() % 2 ? Hand::Left : Hand::Right});
  }
  const auto prof = difficulty_profile(score, DifficultyMeasure::gaussian(gaussian()), 1.0);
  ASSERT_EQ(prof.size(), score.size());
  for (const auto& r : prof.records) EXPECT_EQ(r.both, r.left + r.right);
}

TEST(Profile, OneHandScoreLeavesOtherHandAtZero) {
  const PianoScore score{{0, 0.0, 60, Hand::Right}, {1, 0.5, 62, Hand::Right}};
  const auto prof = difficulty_profile(score, DifficultyMeasure::gaussian(gaussian()));
  for (const auto& r : prof.records) {
    EXPECT_EQ(r.left, 0.0);
    EXPECT_GT(r.right, 0.0);
  }
}

TEST(Profile, TimeTranslationInvariant) {
  PianoScore a{{0, 0.0, 60, Hand::Right}, {1, 0.25, 48, Hand::Left}, {2, 0.75, 64, Hand::Right}};
  PianoScore b = a;
  for (auto& n : b) n.onset += 10.0;
  const auto pa = difficulty_profile(a, DifficultyMeasure::gaussian(gaussian()));
  const auto pb = difficulty_profile(b, DifficultyMeasure::gaussian(gaussian()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(pa.records[i].left, pb.records[i].left);
    EXPECT_EQ(pa.records[i].right, pb.records[i].right);
  }
}

TEST(Profile, CsvHeaderAndSixDigits) {
  const PianoScore score{{7, 0.0, 60, Hand::Right}};
  std::ostringstream out;
  write_profile_csv(out, difficulty_profile(score, DifficultyMeasure::no_info()));
  EXPECT_EQ(out.str(), "note_id,onset,D_L,D_R,D_B\n7,0,0,4.47734,4.47734\n");
}

TEST(Predict, AnyChannelAboveThreshold) {
  const Thresholds th{30, 30, 42};
  const auto p = profile_of({{10, 10, 20}, {31, 0, 31}, {30, 30, 42}, {0, 0, 43}});
  EXPECT_EQ(predict_errors(p, th), (std::vector<bool>{false, true, false, true}));
  const auto zero = predict_errors(profile_of({{0, 0, 0}, {0, 1, 1}}), Thresholds{0, 0, 0});
  EXPECT_EQ(zero, (std::vector<bool>{false, true}));
}

TEST(Metrics, CountsFromTheDefinitions) {
  // 2 TP, 2 FP, 1 note predicted negative that carries an error
  const std::vector<bool> pred{true, true, true, true, false, false};
  const std::vector<int> errs{1, 1, 0, 0, 1, 0};
  const auto m = error_prediction_metrics(pred, errs);
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_DOUBLE_EQ(m.recall, 2.0 / 3.0);
  EXPECT_NEAR(m.f, 4.0 / 7.0, 1e-12);
  EXPECT_FALSE(m.undefined);
}

TEST(Metrics, PerfectPrediction) {
  const auto m = error_prediction_metrics({true, false, true}, std::vector<int>{2, 0, 1});
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_DOUBLE_EQ(m.f, 1.0);
  EXPECT_DOUBLE_EQ(m.f_w, 1.0);
}

TEST(Metrics, WeightedCounts) {
  // one TP note with 3 errors, one FP, one missed note with 1 error
  const auto m = error_prediction_metrics({true, true, false}, std::vector<int>{3, 0, 1});
  EXPECT_DOUBLE_EQ(m.n_tp_w, 3.0);
  EXPECT_DOUBLE_EQ(m.n_tn_w, 1.0);
  EXPECT_DOUBLE_EQ(m.precision_w, 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(m.recall_w, 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(m.f_w, 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
}

TEST(Metrics, ZeroDenominatorsAreFlagged) {
  const auto m = error_prediction_metrics({false, false}, std::vector<int>{0, 0});
  EXPECT_TRUE(m.undefined);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.f_w, 0.0);
  EXPECT_THROW(error_prediction_metrics({true}, std::vector<int>{}), Error);
}

TEST(Errors, AttributedToEveryWindowContainingThem) {
  const std::vector<double> onsets{0.0, 0.5, 1.0, 3.0};
  const std::vector<double> errors{0.6, 0.9};
  EXPECT_EQ(attribute_errors(onsets, errors, 1.0), (std::vector<int>{0, 2, 2, 0}));
}

TEST(Errors, AnnotationFile) {
  std::istringstream in("# id pitch extra missing\n3 1 0 2\n5 0 1 0\n");
  const auto a = read_error_annotations(in);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a.at(3).total(), 3);
  std::istringstream bad("3 1 x 2\n");
  EXPECT_THROW(read_error_annotations(bad, "e.txt"), ParseError);
  std::istringstream neg("3 1 -1 2\n");
  EXPECT_THROW(read_error_annotations(neg), ParseError);
}

TEST(Sweep, SingletonGrid) {
  const std::vector<DifficultyProfile> profs{profile_of({{1, 2, 3}, {4, 5, 9}})};
  const std::vector<std::vector<int>> errs{{0, 1}};
  const ThresholdGrid grid{{2.0}, {3.0}, {4.0}};
  EXPECT_EQ(sweep_thresholds(profs, errs, grid).thresholds, (Thresholds{2.0, 3.0, 4.0}));
}

TEST(Sweep, PicksDominatingPointAndBreaksTiesLow) {
  const std::vector<DifficultyProfile> profs{profile_of({{0, 0, 10}, {0, 0, 20}, {0, 0, 30}})};
  const std::vector<std::vector<int>> errs{{0, 0, 2}};
  const ThresholdGrid grid{{100.0}, {100.0}, {5.0, 15.0, 25.0, 35.0}};
  const auto c = sweep_thresholds(profs, errs, grid);
  EXPECT_EQ(c.thresholds.both, 25.0);
  EXPECT_DOUBLE_EQ(c.metrics.f_w, 1.0);
  const ThresholdGrid tied{{100.0}, {100.0}, {22.0, 21.0, 26.0}};
  EXPECT_EQ(sweep_thresholds(profs, errs, tied).thresholds.both, 21.0);
}

TEST(Sweep, RecoversInjectedThreshold) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  std::vector<std::array<double, 3>> d;
  std::vector<int> errs;
  for (int i = 0; i < 400; ++i) {
    const double b = u(rng);
    d.push_back({b / 2.0, b / 2.0, b});
    errs.push_back(b > 25.0 ? 1 : 0);
  }
  const std::vector<DifficultyProfile> profs{profile_of(d)};
  const std::vector<std::vector<int>> counts{errs};
  ThresholdGrid grid = ThresholdGrid::uniform(0.0, 50.0, 1.0);
  grid.left = {1000.0};
  grid.right = {1000.0};
  const auto c = sweep_thresholds(profs, counts, grid);
  EXPECT_NEAR(c.thresholds.both, 25.0, 1.0);
}
