#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "pianored/pianored.hpp"

namespace fs = std::filesystem;
using namespace pianored;

namespace {

struct UsageError : Error {
  using Error::Error;
};

// Options shared by most subcommands.
struct Common {
  std::string model = "gaussian";
  std::string params;
  std::string annotations;
  double bar = 0.0;
  double window = 1.0;
  std::size_t beam = 0;
};

struct LoadedScore {
  CondensedScore score;
  double bar_seconds = 2.0;
};

bool is_midi(const std::string& path) {
  auto ext = fs::path(path).extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".mid" || ext == ".midi";
}

std::vector<RawNote> read_raw(const std::string& path, std::optional<double>* bar = nullptr) {
  if (is_midi(path)) {
    auto f = smf::read_file(path);
    if (bar) *bar = f.bar_seconds;
    return std::move(f.notes);
  }
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return read_note_text(in, path);
}

LoadedScore load_score(const std::string& path, const Common& c) {
  std::optional<double> smf_bar;
  const auto raw = read_raw(path, &smf_bar);
  LoadedScore out;
  out.bar_seconds = c.bar > 0.0 ? c.bar : smf_bar.value_or(2.0);
  out.score = condense(ingest(raw));
  if (!c.annotations.empty()) {
    std::ifstream in(c.annotations);
    if (!in) throw ParseError(c.annotations, 0, "cannot open file");
    apply_annotation_overlay(out.score, in, c.annotations);
  }
  if (!out.score.has_annotations() && !out.score.empty()) {
    const double end = out.score.notes.back().note.onset;
    const auto bars = uniform_bars(out.bar_seconds, end);
    out.score = infer_melody_bass_baseline(out.score, bars);
  }
  return out;
}

ModelParams load_params(const std::string& path) {
  if (!path.empty()) return read_params_file(path);
  if (const char* dir = std::getenv("PIANORED_PARAMS_DIR"); dir && *dir) {
    const fs::path p = fs::path(dir) / "params.txt";
    if (fs::exists(p)) return read_params_file(p.string());
  }
  return {};
}

ScoreModelKind reduction_model(const std::string& name) {
  if (name == "gaussian") return ScoreModelKind::Gaussian;
  if (name == "fingering") return ScoreModelKind::Fingering;
  if (name == "distance") return ScoreModelKind::Distance;
  throw UsageError("model '" + name + "' cannot drive this command");
}

std::vector<double> parse_triplet(const std::string& s, const std::string& what) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tok.size()) throw UsageError(what + " expects three comma-separated numbers");
    v.push_back(x);
  }
  if (v.size() != 3) throw UsageError(what + " expects three comma-separated numbers");
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  return f;
}

void write_condensed(std::ostream& out, const CondensedScore& score) {
  EnsembleScore notes;
  for (const auto& c : score.notes) notes.push_back(c.note);
  write_note_text(out, notes);
}

// Piano score from a two-track file: track 0 is the left hand.
PianoScore piano_from_tracks(const CondensedScore& score) {
  PianoScore p;
  for (const auto& c : score.notes) {
    p.push_back({c.note.id, c.note.onset, c.note.pitch.midi(), c.note.track == 0 ? Hand::Left : Hand::Right});
  }
  return p;
}

PianoScore piano_by_separation(const CondensedScore& score, const ModelSet& models, const MergedHandParams& merged,
                               std::size_t beam) {
  const auto midi = pitches_of(score);
  const auto sep = separate_hands(std::span<const int>(midi), models.fingering_hand(), merged, {beam});
  PianoScore p;
  for (std::size_t i = 0; i < score.size(); ++i) {
    p.push_back({score[i].note.id, score[i].note.onset, score[i].note.pitch.midi(), sep.hands[i]});
  }
  return p;
}

DifficultyMeasure measure_for(const std::string& name, const ModelSet& models) {
  if (name == "noinfo") return DifficultyMeasure::no_info();
  if (name == "gaussian") return DifficultyMeasure::gaussian(models.gaussian());
  if (name == "fingering") return DifficultyMeasure::fingering(models.fingering());
  throw UsageError("model '" + name + "' has no difficulty measure");
}

ReductionConfig reduction_config(const ModelParams& p, const Common& c) {
  ReductionConfig cfg;
  cfg.edit = p.edit;
  cfg.merged = p.merged;
  cfg.window = c.window;
  cfg.decode.max_states = c.beam;
  return cfg;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; the first failure is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  std::exception_ptr failure;
  std::mutex mu;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= n || failure) return;
        i = next++;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct ReduceOptions {
  std::string optimizer = "iterative";
  std::string targets;
  std::string preset;
  double rho = 1.0;
  double lambda = 0.85;
  int i_max = 50;
};

TargetDifficulty resolve_targets(const ReduceOptions& o) {
  if (!o.targets.empty() && !o.preset.empty()) throw UsageError("give either --targets or --preset");
  if (!o.targets.empty()) {
    const auto v = parse_triplet(o.targets, "--targets");
    TargetDifficulty t{v[0], v[1], v[2]};
    t.validate();
    return t;
  }
  if (o.preset.empty() || o.preset == "medium") return kPresetMedium;
  if (o.preset == "easy") return kPresetEasy;
  if (o.preset == "hard") return kPresetHard;
  throw UsageError("unknown preset '" + o.preset + "'");
}

ReductionResult run_reduction(const CondensedScore& score, const TargetDifficulty& t, const ReduceOptions& o,
                              const Common& c, const ModelSet& models, const ModelParams& params) {
  auto cfg = reduction_config(params, c);
  cfg.lambda = o.lambda;
  cfg.i_max = o.i_max;
  const auto kind = reduction_model(c.model);
  if (o.optimizer == "iterative") return iterative_reduce(score, t, kind, models, cfg);
  if (o.optimizer == "one-time") return one_time_reduce(score, t, o.rho, kind, models, cfg);
  throw UsageError("unknown optimizer '" + o.optimizer + "'");
}

std::vector<std::uint8_t> reduction_midi(const ReductionResult& r) {
  std::vector<smf::OutNote> notes;
  for (std::size_t i = 0; i < r.piano.size(); ++i) {
    const auto& src = r.notes[r.piano_source[i]];
    notes.push_back({r.piano[i].hand, r.piano[i].midi, r.piano[i].onset, src.duration});
  }
  return smf::write_two_hands(notes);
}

std::string method_name(const ReduceOptions& o, const Common& c) {
  if (o.optimizer == "one-time") return "one-time-" + c.model + "(rho=" + format_sig6(o.rho) + ")";
  return o.optimizer + "-" + c.model;
}

void add_common(CLI::App* app, Common& c, bool with_model = true) {
  if (with_model) {
    app->add_option("--model", c.model, "noinfo|gaussian|fingering|distance")
        ->check(CLI::IsMember({"noinfo", "gaussian", "fingering", "distance"}));
  }
  app->add_option("--params", c.params, "parameter file (default: $PIANORED_PARAMS_DIR/params.txt)");
  app->add_option("--annotations", c.annotations, "melody/bass overlay: lines `note_id M|B|-`");
  app->add_option("--bar", c.bar, "bar length in seconds for the melody/bass baseline")->check(CLI::PositiveNumber);
  app->add_option("--window", c.window, "difficulty window in seconds")->check(CLI::PositiveNumber);
  app->add_option("--beam", c.beam, "keep at most N decoder states per note (0 = exact)");
}

void add_reduce(CLI::App* app, ReduceOptions& o) {
  app->add_option("--optimizer", o.optimizer, "one-time|iterative")->check(CLI::IsMember({"one-time", "iterative"}));
  app->add_option("--targets", o.targets, "target difficulties L,R,B");
  app->add_option("--preset", o.preset, "easy|medium|hard");
  app->add_option("--rho", o.rho, "one-time scaling factor")->check(CLI::PositiveNumber);
  app->add_option("--lambda", o.lambda, "control-factor decay")->check(CLI::Range(0.0, 1.0));
  app->add_option("--i-max", o.i_max, "iteration limit")->check(CLI::PositiveNumber);
}

std::vector<FingeringSample> read_fingering_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::vector<FingeringSample> corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string hand;
    if (!(ls >> hand)) continue;
    FingeringSample s;
    if (hand == "L") s.hand = Hand::Left;
    else if (hand == "R") s.hand = Hand::Right;
    else throw ParseError(path, lineno, "expected hand L or R, got '" + hand + "'");
    std::string tok;
    while (ls >> tok) {
      int p = 0, f = 0;
      char colon = 0;
      std::istringstream ts(tok);
      if (!(ts >> p >> colon >> f) || colon != ':' || ts.peek() != EOF) {
        throw ParseError(path, lineno, "expected pitch:finger, got '" + tok + "'");
      }
      if (!is_piano_key(p) || f < 1 || f > 5) throw ParseError(path, lineno, "bad pitch or finger in '" + tok + "'");
      s.pitches.push_back(p);
      s.fingers.push_back(f);
    }
    if (s.pitches.empty()) throw ParseError(path, lineno, "empty fingering sequence");
    corpus.push_back(std::move(s));
  }
  return corpus;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pianored: ensemble-to-piano reduction under difficulty constraints"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Common common;
  ReduceOptions red;
  std::string in, out, hand = "R";
  std::vector<std::string> inputs;
  unsigned jobs = 1;
  std::uint64_t seed = 2024;
  int pieces = 5;
  std::string grid = "0,100,5";
  double alpha = 0.1, floor = 1e-6;
  std::string hands_from = "separate";

  auto* condense_cmd = app.add_subcommand("condense", "merge duplicates and mark melody/bass");
  add_common(condense_cmd, common, false);
  condense_cmd->add_option("input", in)->required();
  condense_cmd->add_option("output", out)->required();

  auto* finger_cmd = app.add_subcommand("finger", "one-hand fingering of the input pitch sequence");
  add_common(finger_cmd, common, false);
  finger_cmd->add_option("--hand", hand, "L|R")->check(CLI::IsMember({"L", "R"}));
  finger_cmd->add_option("input", in)->required();
  finger_cmd->add_option("output", out)->required();

  auto* separate_cmd = app.add_subcommand("separate", "split a piano score into hands");
  add_common(separate_cmd, common);
  separate_cmd->add_option("input", in)->required();
  separate_cmd->add_option("output", out, "two-track SMF; a .csv sidecar is written next to it")->required();

  auto* analyze_cmd = app.add_subcommand("analyze", "per-note difficulty profile");
  add_common(analyze_cmd, common);
  analyze_cmd->add_option("--hands", hands_from, "separate|tracks (track 0 = left)")
      ->check(CLI::IsMember({"separate", "tracks"}));
  analyze_cmd->add_option("input", in)->required();
  analyze_cmd->add_option("output", out)->required();

  auto* reduce_cmd = app.add_subcommand("reduce", "piano reduction of an ensemble score");
  add_common(reduce_cmd, common);
  add_reduce(reduce_cmd, red);
  reduce_cmd->add_option("input", in)->required();
  reduce_cmd->add_option("output", out, "two-track SMF; a .csv sidecar is written next to it")->required();

  auto* eval_cmd = app.add_subcommand("eval-errors", "fit error-prediction thresholds");
  add_common(eval_cmd, common);
  eval_cmd->add_option("--grid", grid, "threshold grid lo,hi,step");
  eval_cmd->add_option("output", out)->required();
  eval_cmd->add_option("pairs", inputs, "piano score (track 0 = left) then its error annotations, repeated")
      ->required();

  auto* train_cmd = app.add_subcommand("train-fingering", "estimate fingering tables from `L|R pitch:finger ...`");
  add_common(train_cmd, common, false);
  train_cmd->add_option("--alpha", alpha, "finger-table smoothing")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--floor", floor, "displacement-cell floor")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("input", in)->required();
  train_cmd->add_option("output", out)->required();

  auto* report_cmd = app.add_subcommand("report", "reduce a batch of scores and tabulate the results");
  add_common(report_cmd, common);
  add_reduce(report_cmd, red);
  report_cmd->add_option("--jobs", jobs, "parallel input files")->check(CLI::PositiveNumber);
  report_cmd->add_option("output", out)->required();
  report_cmd->add_option("inputs", inputs)->required();

  auto* gen_cmd = app.add_subcommand("generate-corpus", "write the synthetic ensemble corpus");
  gen_cmd->add_option("--seed", seed);
  gen_cmd->add_option("--pieces", pieces)->check(CLI::PositiveNumber);
  gen_cmd->add_option("output", out, "directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: usage: " << msg << '\n';
    return 2;
  }

  try {
    const auto params = load_params(common.params);
    const ModelSet models(params);

    if (*condense_cmd) {
      auto f = open_out(out);
      write_condensed(f, load_score(in, common).score);
    } else if (*finger_cmd) {
      const auto score = load_score(in, common).score;
      const auto midi = pitches_of(score);
      const auto est = decode_fingering(midi, hand == "L" ? Hand::Left : Hand::Right, models.fingering());
      auto f = open_out(out);
      f << "note_id,onset,pitch,finger\n";
      for (std::size_t i = 0; i < score.size(); ++i) {
        f << score[i].note.id << ',' << format_sig6(score[i].note.onset) << ',' << midi[i] << ',' << est.fingers[i]
          << '\n';
      }
    } else if (*separate_cmd) {
      const auto score = load_score(in, common).score;
      const auto midi = pitches_of(score);
      const auto kind = reduction_model(common.model);
      if (kind == ScoreModelKind::Distance) throw UsageError("separate supports gaussian or fingering");
      const MergedDecodeOptions opts{common.beam};
      const auto sep = kind == ScoreModelKind::Fingering
                           ? separate_hands(std::span<const int>(midi), models.fingering_hand(), params.merged, opts)
                           : separate_hands(std::span<const int>(midi), models.gaussian_hand(), params.merged, opts);
      std::vector<smf::OutNote> notes;
      for (std::size_t i = 0; i < score.size(); ++i) {
        notes.push_back({sep.hands[i], midi[i], score[i].note.onset, score[i].note.duration});
      }
      smf::write_file(out, smf::write_two_hands(notes));
      auto f = open_out(out + ".csv");
      f << "note_id,onset,pitch,hand,finger\n";
      for (std::size_t i = 0; i < score.size(); ++i) {
        f << score[i].note.id << ',' << format_sig6(score[i].note.onset) << ',' << midi[i] << ','
          << hand_char(sep.hands[i]) << ',';
        if (sep.fingers[i] > 0) f << sep.fingers[i];
        else f << '-';
        f << '\n';
      }
    } else if (*analyze_cmd) {
      const auto score = load_score(in, common).score;
      const auto measure = measure_for(common.model, models);
      const auto piano = hands_from == "tracks" ? piano_from_tracks(score)
                                                : piano_by_separation(score, models, params.merged, common.beam);
      auto f = open_out(out);
      write_profile_csv(f, difficulty_profile(piano, measure, common.window));
    } else if (*reduce_cmd) {
      const auto loaded = load_score(in, common);
      const auto t = resolve_targets(red);
      const auto r = run_reduction(loaded.score, t, red, common, models, params);
      smf::write_file(out, reduction_midi(r));
      auto f = open_out(out + ".csv");
      write_reduction_report(f, r);
      std::cout << "notes=" << r.kept_count() << '/' << loaded.score.size() << " iterations=" << r.iterations
                << " termination=" << to_string(r.termination) << '\n';
    } else if (*eval_cmd) {
      if (inputs.size() % 2 != 0) throw UsageError("eval-errors expects score/annotation pairs");
      const auto g = parse_triplet(grid, "--grid");
      if (!(g[2] > 0.0) || g[1] < g[0]) throw UsageError("--grid needs lo <= hi and a positive step");
      const auto measure = measure_for(common.model, models);
      std::vector<DifficultyProfile> profiles;
      std::vector<std::vector<int>> counts;
      for (std::size_t k = 0; k < inputs.size(); k += 2) {
        const auto score = condense(ingest(read_raw(inputs[k])));
        const auto piano = piano_from_tracks(score);
        profiles.push_back(difficulty_profile(piano, measure, common.window));
        std::ifstream ann(inputs[k + 1]);
        if (!ann) throw ParseError(inputs[k + 1], 0, "cannot open file");
        const auto errs = read_error_annotations(ann, inputs[k + 1]);
        std::vector<int> c(piano.size(), 0);
        for (std::size_t i = 0; i < piano.size(); ++i) {
          if (auto it = errs.find(piano[i].id); it != errs.end()) c[i] = it->second.total();
        }
        counts.push_back(std::move(c));
      }
      const auto choice = sweep_thresholds(profiles, counts, ThresholdGrid::uniform(g[0], g[1], g[2]));
      std::vector<bool> all_pred;
      std::vector<int> all_counts;
      for (std::size_t k = 0; k < profiles.size(); ++k) {
        all_pred.insert(all_pred.end(), profiles[k].size(), true);
        all_counts.insert(all_counts.end(), counts[k].begin(), counts[k].end());
      }
      const auto base = error_prediction_metrics(all_pred, all_counts);
      auto f = open_out(out);
      f << "method,th_L,th_R,th_B,P,R,F,P_w,R_w,F_w\n";
      auto row = [&](const std::string& name, const std::string& th, const ErrorPredictionMetrics& m) {
        f << name << ',' << th << ',' << format_sig6(m.precision) << ',' << format_sig6(m.recall) << ','
          << format_sig6(m.f) << ',' << format_sig6(m.precision_w) << ',' << format_sig6(m.recall_w) << ','
          << format_sig6(m.f_w) << '\n';
      };
      const auto& th = choice.thresholds;
      row("sweep", format_sig6(th.left) + ',' + format_sig6(th.right) + ',' + format_sig6(th.both), choice.metrics);
      row("always-positive", "-,-,-", base);
    } else if (*train_cmd) {
      const auto corpus = read_fingering_corpus(in);
      auto p = params;
      p.fingering = train_fingering(corpus, FingeringTraining{alpha, floor});
      auto f = open_out(out);
      write_params(f, p);
    } else if (*report_cmd) {
      const auto t = resolve_targets(red);
      std::vector<ReportRow> rows(inputs.size());
      parallel_for(inputs.size(), jobs, [&](std::size_t i) {
        const auto loaded = load_score(inputs[i], common);
        const auto r = run_reduction(loaded.score, t, red, common, models, params);
        rows[i] = {fs::path(inputs[i]).stem().string(), method_name(red, common), t,
                   evaluate_reduction(r, loaded.score, t)};
      });
      auto f = open_out(out);
      write_batch_report(f, rows);
    } else if (*gen_cmd) {
      fs::create_directories(out);
      for (const auto& piece : synthetic::generate_corpus(seed, pieces)) {
        const auto score = ingest(piece.notes);
        auto f = open_out((fs::path(out) / (piece.name + ".txt")).string());
        write_note_text(f, score);
        smf::write_file((fs::path(out) / (piece.name + ".mid")).string(), smf::write_tracks(score));
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: parse: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
