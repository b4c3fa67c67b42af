#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pianored/pianored.hpp"

using namespace pianored;

namespace {

RawNote note(double onset, int midi, int track, Role role) {
  RawNote r;
  r.onset = onset;
  r.midi = midi;
  r.track = track;
  r.role = role;
  return r;
}

// n_m melody, n_b bass, n_o accompaniment notes, all retained.
struct Fixture {
  CondensedScore score;
  ReductionResult result;
};

Fixture fixture(int n_m, int n_b, int n_o, std::vector<double> d_b = {}) {
  std::vector<RawNote> raw;
  int t = 0;
  for (int i = 0; i < n_m; ++i) raw.push_back(note(0.5 * t++, 72, 0, Role::Melody));
  for (int i = 0; i < n_b; ++i) raw.push_back(note(0.5 * t++, 40, 1, Role::Bass));
  for (int i = 0; i < n_o; ++i) raw.push_back(note(0.5 * t++, 60, 2, Role::None));
  Fixture f;
  f.score = condense(ingest(raw));
  for (std::size_t i = 0; i < f.score.size(); ++i) {
    f.result.piano.push_back({static_cast<int>(i), f.score[i].note.onset, f.score[i].note.pitch.midi(), Hand::Right});
    f.result.piano_source.push_back(i);
    const double b = i < d_b.size() ? d_b[i] : 0.0;
    f.result.profile.records.push_back({static_cast<int>(i), f.score[i].note.onset, 0.0, b, b});
  }
  return f;
}

}  // namespace

TEST(Evaluate, OutOfRangeRate) {
  const auto f = fixture(3, 0, 0, {20, 35, 28});
  const auto m = evaluate_reduction(f.result, f.score, TargetDifficulty{30, 30, 30});
  EXPECT_DOUBLE_EQ(m.out_of_range[2], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.out_of_range[1], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.out_of_range[0], 0.0);
  EXPECT_DOUBLE_EQ(m.out_of_range_any, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.mean[2], 83.0 / 3.0);
  EXPECT_EQ(m.max[2], 35.0);
}

TEST(Evaluate, AdditionalRate) {
  const auto f = fixture(8, 6, 6);
  const auto m = evaluate_reduction(f.result, f.score, kPresetMedium);
  EXPECT_EQ(m.kept, 20u);
  EXPECT_EQ(m.kept_melodic, 8u);
  EXPECT_EQ(m.kept_bass, 6u);
  ASSERT_TRUE(m.additional_rate);
  EXPECT_DOUBLE_EQ(*m.additional_rate, 6.0 / 14.0);
}

TEST(Evaluate, UnplayableRate) {
  const auto f = fixture(8, 6, 6);
  const auto m = evaluate_reduction(f.result, f.score, kPresetMedium);
  EXPECT_DOUBLE_EQ(*unplayable_rate(2, m), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(*unplayable_rate(0, m), 0.0);
  const auto s = fixture(4, 2, 0);
  EXPECT_FALSE(unplayable_rate(0, evaluate_reduction(s.result, s.score, kPresetMedium)));
}

TEST(Evaluate, UndefinedWithoutSkeleton) {
  const auto f = fixture(0, 0, 3);
  EXPECT_FALSE(evaluate_reduction(f.result, f.score, kPresetMedium).additional_rate);
  EXPECT_THROW(evaluate_reduction(ReductionResult{}, f.score, kPresetMedium), Error);
}

TEST(Batch, SingletonMeanEqualsRow) {
  const auto f = fixture(2, 1, 1, {10, 20, 30, 40});
  ReportRow row{"p1", "iterative-gaussian", kPresetMedium, evaluate_reduction(f.result, f.score, kPresetMedium)};
  std::ostringstream out;
  write_batch_report(out, {row});
  std::istringstream in(out.str());
  std::string header, line, mean;
  std::getline(in, header);
  std::getline(in, line);
  std::getline(in, mean);
  EXPECT_EQ(header, kReportHeader);
  EXPECT_EQ(line.substr(line.find(',', line.find(',') + 1)), mean.substr(mean.find(',', 5)));
  EXPECT_EQ(line, "p1,iterative-gaussian,30,30,40,0,25,25,0,40,40,0,0.25,0,0.333333");
}

TEST(Batch, MeanOfTwoRowsSkipsUndefined) {
  const auto a = fixture(2, 0, 2, {10, 10, 10, 10});
  const auto b = fixture(0, 0, 2, {30, 30});
  std::vector<ReportRow> rows{{"a", "m", kPresetEasy, evaluate_reduction(a.result, a.score, kPresetEasy)},
                              {"b", "m", kPresetEasy, evaluate_reduction(b.result, b.score, kPresetEasy)}};
  const auto means = report_means(rows);
  EXPECT_DOUBLE_EQ(means[4], 20.0);
  EXPECT_DOUBLE_EQ(means[12], 1.0);
  std::ostringstream out;
  write_batch_report(out, rows);
  EXPECT_NE(out.str().find("b,m,15,15,30,0,30,30,0,30,30,0,1,0,NA\n"), std::string::npos);
  EXPECT_NE(out.str().find("MEAN,*,15,15,30,0,20,20,0,20,20,0,0.5,0,1\n"), std::string::npos);
  std::ostringstream none;
  EXPECT_THROW(write_batch_report(none, {}), Error);
}

TEST(Sidecar, OneLinePerSourceNote) {
  std::vector<RawNote> raw{note(0.0, 72, 0, Role::Melody), note(0.0, 50, 1, Role::None),
                           note(0.5, 74, 0, Role::Melody), note(0.5, 40, 2, Role::Bass)};
  const auto score = condense(ingest(raw));
  const ModelSet models;
  const auto r = one_time_reduce(score, kPresetMedium, 1e-12, ScoreModelKind::Gaussian, models);
  std::ostringstream out;
  write_reduction_report(out, r);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "note_id,source_id,hand,finger,pitch,provenance,zeta_final");
  int rows = 0, deleted = 0;
  while (std::getline(in, line)) {
    ++rows;
    if (line.find(",deleted,") != std::string::npos) {
      ++deleted;
      EXPECT_NE(line.find(",-,-,-,"), std::string::npos) << line;
    }
  }
  EXPECT_EQ(rows, 4);
  EXPECT_EQ(deleted, 1);
}
