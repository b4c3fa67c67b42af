#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "pianored/common.hpp"
#include "pianored/pitch.hpp"

namespace pianored {

/// Melody/bass annotation of a note.
enum class Role : std::uint8_t { None, Melody, Bass };

struct NoteEvent {
  int id = 0;
  double onset = 0.0;  // seconds
  Pitch pitch;
  int track = 0;
  double duration = 0.25;  // seconds; carried through, not modelled
  Role role = Role::None;
};

/// Score order: onset, then pitch (chords low to high), then track and id.
inline bool score_order(const NoteEvent& a, const NoteEvent& b) {
  if (a.onset != b.onset) return a.onset < b.onset;
  if (a.pitch != b.pitch) return a.pitch < b.pitch;
  if (a.track != b.track) return a.track < b.track;
  return a.id < b.id;
}

/// Unvalidated note as read from a file.
struct RawNote {
  std::optional<int> id;
  double onset = 0.0;
  int midi = 60;
  int track = 0;
  double duration = 0.25;
  Role role = Role::None;
};

using EnsembleScore = std::vector<NoteEvent>;

/// Validates and sorts raw notes. Notes without an id get sequential ids in
/// score order, starting after the largest explicit id.
inline EnsembleScore ingest(std::span<const RawNote> raw) {
  EnsembleScore out;
  out.reserve(raw.size());
  std::unordered_set<int> seen;
  int max_id = -1;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const RawNote& r = raw[i];
    if (!is_piano_key(r.midi)) {
      throw Error("note " + std::to_string(i) + ": pitch " + std::to_string(r.midi) +
                  " outside piano range [21, 108]");
    }
    if (!std::isfinite(r.onset) || r.onset < 0.0) {
      throw Error("note " + std::to_string(i) + ": onset must be finite and non-negative");
    }
    if (r.id) {
      if (!seen.insert(*r.id).second) {
        throw Error("note " + std::to_string(i) + ": duplicate id " + std::to_string(*r.id));
      }
      max_id = std::max(max_id, *r.id);
    }
    NoteEvent n;
    n.id = r.id.value_or(-1);
    n.onset = r.onset;
    n.pitch = Pitch(r.midi);
    n.track = r.track;
    n.duration = std::isfinite(r.duration) && r.duration > 0.0 ? r.duration : 0.25;
    n.role = r.role;
    out.push_back(n);
  }
  std::stable_sort(out.begin(), out.end(), [](const NoteEvent& a, const NoteEvent& b) {
    if (a.onset != b.onset) return a.onset < b.onset;
    if (a.pitch != b.pitch) return a.pitch < b.pitch;
    return a.track < b.track;
  });
  int next = max_id + 1;
  for (auto& n : out) {
    if (n.id < 0) n.id = next++;
  }
  return out;
}

inline std::optional<Role> parse_role(std::string_view s) {
  if (s == "M") return Role::Melody;
  if (s == "B") return Role::Bass;
  if (s == "-") return Role::None;
  return std::nullopt;
}

inline char role_char(Role r) {
  switch (r) {
    case Role::Melody: return 'M';
    case Role::Bass: return 'B';
    default: return '-';
  }
}

/// Reads the line format `id onset_sec pitch track [M|B|-]`; `#` starts a comment.
inline std::vector<RawNote> read_note_text(std::istream& in, const std::string& path = "<stream>") {
  std::vector<RawNote> notes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    RawNote r;
    int id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(first, &used);
      if (used != first.size()) throw std::invalid_argument("id");
    } catch (const std::exception&) {
      throw ParseError(path, lineno, "expected integer note id, got '" + first + "'");
    }
    r.id = id;
    if (!(ls >> r.onset >> r.midi >> r.track)) {
      throw ParseError(path, lineno, "expected `id onset_sec pitch track [M|B|-]`");
    }
    std::string flag;
    if (ls >> flag) {
      auto role = parse_role(flag);
      if (!role) throw ParseError(path, lineno, "unknown annotation '" + flag + "'");
      r.role = *role;
    }
    if (std::string extra; ls >> extra) {
      throw ParseError(path, lineno, "trailing field '" + extra + "'");
    }
    if (!is_piano_key(r.midi)) {
      throw ParseError(path, lineno, "pitch " + std::to_string(r.midi) + " outside [21, 108]");
    }
    if (!std::isfinite(r.onset) || r.onset < 0.0) {
      throw ParseError(path, lineno, "onset must be finite and non-negative");
    }
    notes.push_back(r);
  }
  return notes;
}

inline void write_note_text(std::ostream& out, const EnsembleScore& score) {
  out << "# id onset_sec pitch track role\n";
  for (const auto& n : score) {
    char buf[64];
    const auto end = std::to_chars(buf, buf + sizeof buf, n.onset).ptr;
    out << n.id << ' ' << std::string_view(buf, end - buf) << ' ' << n.pitch.midi() << ' ' << n.track << ' '
        << role_char(n.role) << '\n';
  }
}

/// Ensemble note after merging same-(pitch, onset) duplicates.
struct CondensedNote {
  NoteEvent note;
  int multiplicity = 0;  // merged duplicates, excluding this note
  bool melodic = false;
  bool bass = false;
};

struct CondensedScore {
  std::vector<CondensedNote> notes;

  std::size_t size() const { return notes.size(); }
  bool empty() const { return notes.empty(); }
  const CondensedNote& operator[](std::size_t i) const { return notes[i]; }
  CondensedNote& operator[](std::size_t i) { return notes[i]; }

  bool has_annotations() const {
    return std::any_of(notes.begin(), notes.end(),
                       [](const CondensedNote& c) { return c.melodic || c.bass; });
  }

  std::optional<std::size_t> index_of(int id) const {
    for (std::size_t i = 0; i < notes.size(); ++i) {
      if (notes[i].note.id == id) return i;
    }
    return std::nullopt;
  }
};

inline void set_role(CondensedNote& c, Role r) {
  c.melodic = r == Role::Melody;
  c.bass = r == Role::Bass;
}

/// Merges notes sharing (pitch, onset). The first note in score order is kept;
/// a melody flag on any duplicate wins over a bass flag.
inline CondensedScore condense(const EnsembleScore& score) {
  CondensedScore out;
  for (std::size_t i = 0; i < score.size();) {
    std::size_t j = i + 1;
    while (j < score.size() && score[j].onset == score[i].onset &&
           score[j].pitch == score[i].pitch) {
      ++j;
    }
    CondensedNote c;
    c.note = score[i];
    c.multiplicity = static_cast<int>(j - i - 1);
    for (std::size_t k = i; k < j; ++k) {
      c.melodic = c.melodic || score[k].role == Role::Melody;
      c.bass = c.bass || score[k].role == Role::Bass;
    }
    if (c.melodic) c.bass = false;
    c.note.role = c.melodic ? Role::Melody : (c.bass ? Role::Bass : Role::None);
    out.notes.push_back(c);
    i = j;
  }
  return out;
}

/// Re-condensing folds any remaining duplicates, summing their multiplicities.
inline CondensedScore condense(const CondensedScore& score) {
  CondensedScore out;
  for (const auto& c : score.notes) {
    if (!out.notes.empty()) {
      auto& last = out.notes.back();
      if (last.note.onset == c.note.onset && last.note.pitch == c.note.pitch) {
        last.multiplicity += 1 + c.multiplicity;
        last.melodic = last.melodic || c.melodic;
        last.bass = !last.melodic && (last.bass || c.bass);
        continue;
      }
    }
    out.notes.push_back(c);
  }
  return out;
}

/// Bar boundaries b_0 < b_1 < ... of fixed length covering [0, end].
inline std::vector<double> uniform_bars(double bar_seconds, double end_time) {
  if (!(bar_seconds > 0.0)) throw Error("bar length must be positive");
  std::vector<double> bars{0.0};
  while (bars.back() <= end_time) bars.push_back(bars.back() + bar_seconds);
  return bars;
}

/// Per bar, flags the track with the highest mean pitch as melody and the
/// track with the lowest mean pitch (among the others) as bass. Ties go to
/// the lower track index; a single-track bar gets only a melody.
inline CondensedScore infer_melody_bass_baseline(const CondensedScore& score,
                                                 std::span<const double> bars) {
  CondensedScore out = score;
  for (auto& c : out.notes) set_role(c, Role::None);
  if (bars.size() < 2) return out;

  for (std::size_t b = 0; b + 1 < bars.size(); ++b) {
    const double lo = bars[b];
    const double hi = bars[b + 1];
    std::map<int, std::pair<double, int>> sums;  // track -> (pitch sum, count)
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto& n = out[i].note;
      if (n.onset >= lo && n.onset < hi) {
        auto& s = sums[n.track];
        s.first += n.pitch.midi();
        s.second += 1;
        members.push_back(i);
      }
    }
    if (sums.empty()) continue;

    std::optional<int> melody_track;
    double melody_mean = 0.0;
    for (const auto& [track, s] : sums) {
      const double mean = s.first / s.second;
      if (!melody_track || mean > melody_mean) {
        melody_track = track;
        melody_mean = mean;
      }
    }
    std::optional<int> bass_track;
    double bass_mean = 0.0;
    for (const auto& [track, s] : sums) {
      if (track == *melody_track) continue;
      const double mean = s.first / s.second;
      if (!bass_track || mean < bass_mean) {
        bass_track = track;
        bass_mean = mean;
      }
    }
    for (std::size_t i : members) {
      const int t = out[i].note.track;
      if (t == *melody_track) {
        set_role(out[i], Role::Melody);
      } else if (bass_track && t == *bass_track) {
        set_role(out[i], Role::Bass);
      }
    }
  }
  for (auto& c : out.notes) c.note.role = c.melodic ? Role::Melody : (c.bass ? Role::Bass : Role::None);
  return out;
}

/// Overlay lines `note_id M|B|-` replacing the role of the condensed note with that id.
inline void apply_annotation_overlay(CondensedScore& score, std::istream& in,
                                     const std::string& path = "<stream>") {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    int id = 0;
    std::string flag;
    if (!(ls >> id)) {
      std::string probe;
      std::istringstream again(line);
      if (again >> probe) throw ParseError(path, lineno, "expected `note_id M|B`");
      continue;
    }
    if (!(ls >> flag)) throw ParseError(path, lineno, "missing role flag");
    auto role = parse_role(flag);
    if (!role) throw ParseError(path, lineno, "unknown role '" + flag + "'");
    auto idx = score.index_of(id);
    if (!idx) throw ParseError(path, lineno, "unknown note id " + std::to_string(id));
    set_role(score[*idx], *role);
    score[*idx].note.role = *role;
  }
}

}  // namespace pianored
