#pragma once

// Standard MIDI file (format 0/1) reading and two-hand writing.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <iterator>
#include <map>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "pianored/common.hpp"
#include "pianored/score.hpp"

namespace pianored::smf {

struct MidiFile {
  std::vector<RawNote> notes;           // ids unset; track = SMF track (format 1) or channel (format 0)
  std::optional<double> bar_seconds;    // from the first time signature and tempo
};

namespace detail {

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& data, std::string path) : data_(data), path_(std::move(path)) {}

  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }
  bool at(std::size_t end) const { return pos_ >= end; }

  std::uint8_t u8() {
    if (pos_ >= data_.size()) fail("unexpected end of file");
    return data_[pos_++];
  }
  std::uint32_t be(int bytes) {
    std::uint32_t v = 0;
    for (int i = 0; i < bytes; ++i) v = (v << 8) | u8();
    return v;
  }
  std::uint32_t vlq() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const std::uint8_t b = u8();
      v = (v << 7) | (b & 0x7F);
      if (!(b & 0x80)) return v;
    }
    fail("variable-length quantity longer than 4 bytes");
  }
  std::string tag() {
    std::string s;
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>(u8()));
    return s;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(path_, 0, "byte " + std::to_string(pos_) + ": " + what);
  }

 private:
  const std::vector<std::uint8_t>& data_;
  std::string path_;
  std::size_t pos_ = 0;
};

struct TempoChange {
  std::uint64_t tick;
  std::uint32_t usec_per_quarter;
};

struct PendingNote {
  std::uint64_t tick;
  int track;
};

}  // namespace detail

/// Converts ticks to seconds through a tempo map (120 BPM before the first tempo event).
class TempoMap {
 public:
  TempoMap(int division, std::vector<detail::TempoChange> changes) : division_(division) {
    std::stable_sort(changes.begin(), changes.end(),
                     [](const auto& a, const auto& b) { return a.tick < b.tick; });
    segments_.push_back({0, 0.0, 500000});
    for (const auto& c : changes) {
      auto& last = segments_.back();
      const double start = last.seconds + seconds_per_tick(last.usec) * double(c.tick - last.tick);
      if (c.tick == last.tick) {
        last.usec = c.usec_per_quarter;
      } else {
        segments_.push_back({c.tick, start, c.usec_per_quarter});
      }
    }
  }

  double seconds(std::uint64_t tick) const {
    auto it = std::upper_bound(segments_.begin(), segments_.end(), tick,
                               [](std::uint64_t t, const Segment& s) { return t < s.tick; });
    const Segment& s = *std::prev(it);
    return s.seconds + seconds_per_tick(s.usec) * double(tick - s.tick);
  }

  double first_quarter_seconds() const { return segments_.front().usec * 1e-6; }

 private:
  struct Segment {
    std::uint64_t tick;
    double seconds;
    std::uint32_t usec;
  };
  double seconds_per_tick(std::uint32_t usec) const {
    if (division_ < 0) {
      const int fps = -(division_ >> 8);
      const int tpf = division_ & 0xFF;
      return 1.0 / (double(fps == 29 ? 29.97 : fps) * tpf);
    }
    return usec * 1e-6 / division_;
  }
  int division_;
  std::vector<Segment> segments_;
};

inline MidiFile read(const std::vector<std::uint8_t>& bytes, const std::string& path = "<memory>") {
  detail::Reader in(bytes, path);
  if (bytes.empty()) return {};
  if (in.tag() != "MThd") in.fail("missing MThd header");
  const std::uint32_t hlen = in.be(4);
  const std::size_t header_end = in.pos() + hlen;
  const int format = static_cast<int>(in.be(2));
  const int ntracks = static_cast<int>(in.be(2));
  int division = static_cast<std::int16_t>(in.be(2));
  in.seek(header_end);
  if (format > 1) in.fail("SMF format " + std::to_string(format) + " not supported");
  if (division == 0) in.fail("zero time division");

  struct TickNote {
    std::uint64_t on;
    std::uint64_t off;
    int key;
    int track;
  };
  std::vector<TickNote> tick_notes;
  std::vector<detail::TempoChange> tempi;
  std::optional<std::pair<int, int>> time_sig;

  for (int t = 0; t < ntracks; ++t) {
    if (in.at(bytes.size())) break;
    if (in.tag() != "MTrk") in.fail("missing MTrk chunk");
    const std::uint32_t len = in.be(4);
    const std::size_t end = in.pos() + len;
    if (end > bytes.size()) in.fail("track chunk runs past end of file");
    std::uint64_t tick = 0;
    std::uint8_t status = 0;
    std::map<std::pair<int, int>, std::vector<std::size_t>> open;  // (channel, key) -> notes
    while (!in.at(end)) {
      tick += in.vlq();
      std::uint8_t b = in.u8();
      if (b == 0xFF) {
        const std::uint8_t type = in.u8();
        const std::uint32_t mlen = in.vlq();
        const std::size_t mend = in.pos() + mlen;
        if (type == 0x51 && mlen == 3) {
          tempi.push_back({tick, in.be(3)});
        } else if (type == 0x58 && mlen >= 2 && !time_sig) {
          const int num = in.u8();
          const int den = 1 << in.u8();
          time_sig = {num, den};
        } else if (type == 0x2F) {
          in.seek(mend);
          break;
        }
        in.seek(mend);
        continue;
      }
      if (b == 0xF0 || b == 0xF7) {
        in.seek(in.pos() + in.vlq());
        continue;
      }
      if (b & 0x80) {
        status = b;
      } else {
        if (!status) in.fail("running status without a previous status byte");
        in.seek(in.pos() - 1);
      }
      const int kind = status & 0xF0;
      const int channel = status & 0x0F;
      const int track = format == 0 ? channel : t;
      if (kind == 0x90 || kind == 0x80) {
        const int key = in.u8() & 0x7F;
        const int vel = in.u8() & 0x7F;
        if (kind == 0x90 && vel > 0) {
          open[{channel, key}].push_back(tick_notes.size());
          tick_notes.push_back({tick, tick, key, track});
        } else {
          auto it = open.find({channel, key});
          if (it != open.end() && !it->second.empty()) {
            tick_notes[it->second.front()].off = tick;
            it->second.erase(it->second.begin());
          }
        }
      } else if (kind == 0xC0 || kind == 0xD0) {
        in.u8();
      } else {
        in.u8();
        in.u8();
      }
    }
    for (auto& [k, idx] : open) {
      for (std::size_t i : idx) tick_notes[i].off = tick;
    }
    in.seek(end);
  }

  TempoMap tempo(division, tempi);
  MidiFile out;
  for (std::size_t i = 0; i < tick_notes.size(); ++i) {
    const auto& n = tick_notes[i];
    if (!is_piano_key(n.key)) {
      throw ParseError(path, 0, "note event " + std::to_string(i) + " (track " +
                                    std::to_string(n.track) + ", tick " + std::to_string(n.on) +
                                    "): pitch " + std::to_string(n.key) + " outside [21, 108]");
    }
    RawNote r;
    r.onset = tempo.seconds(n.on);
    r.duration = tempo.seconds(n.off) - r.onset;
    r.midi = n.key;
    r.track = n.track;
    out.notes.push_back(r);
  }
  if (time_sig && division > 0) {
    out.bar_seconds = tempo.first_quarter_seconds() * time_sig->first * 4.0 / time_sig->second;
  }
  return out;
}

inline MidiFile read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError(path, 0, "cannot open file");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return read(bytes, path);
}

/// A note to be written: hand track, pitch, onset and duration in seconds.
struct OutNote {
  Hand hand;
  int midi;
  double onset;
  double duration;
};

inline constexpr int kWriteDivision = 480;  // at 120 BPM: 960 ticks per second

namespace detail {

inline void put_be(std::vector<std::uint8_t>& v, std::uint32_t x, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) v.push_back(static_cast<std::uint8_t>((x >> (8 * i)) & 0xFF));
}

inline void put_vlq(std::vector<std::uint8_t>& v, std::uint32_t x) {
  std::uint8_t buf[5];
  int n = 0;
  buf[n++] = x & 0x7F;
  while (x >>= 7) buf[n++] = static_cast<std::uint8_t>((x & 0x7F) | 0x80);
  while (n) v.push_back(buf[--n]);
}

inline std::uint32_t to_tick(double sec) {
  return static_cast<std::uint32_t>(std::llround(std::max(0.0, sec) * 2.0 * kWriteDivision));
}

struct TrackNotes {
  std::string name;
  int channel = 0;
  std::vector<std::tuple<int, double, double>> notes;  // key, onset, duration
};

/// Format-1 file at 120 BPM in 4/4; the tempo map lives in the first track.
inline std::vector<std::uint8_t> assemble(const std::vector<TrackNotes>& tracks) {
  std::vector<std::uint8_t> out{'M', 'T', 'h', 'd'};
  put_be(out, 6, 4);
  put_be(out, 1, 2);
  put_be(out, static_cast<std::uint32_t>(tracks.size()), 2);
  put_be(out, kWriteDivision, 2);
  for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
    // (tick, is_on, key): offs sort before ons at the same tick
    std::vector<std::tuple<std::uint32_t, int, int>> events;
    for (const auto& [key, onset, duration] : tracks[ti].notes) {
      const std::uint32_t on = to_tick(onset);
      const std::uint32_t off = std::max(on + 1, to_tick(onset + duration));
      events.emplace_back(on, 1, key);
      events.emplace_back(off, 0, key);
    }
    std::sort(events.begin(), events.end());
    std::vector<std::uint8_t> trk;
    if (ti == 0) {
      put_vlq(trk, 0);
      trk.insert(trk.end(), {0xFF, 0x51, 0x03, 0x07, 0xA1, 0x20});  // 500000 us per quarter
      put_vlq(trk, 0);
      trk.insert(trk.end(), {0xFF, 0x58, 0x04, 0x04, 0x02, 0x18, 0x08});
    }
    if (!tracks[ti].name.empty()) {
      put_vlq(trk, 0);
      trk.insert(trk.end(), {0xFF, 0x03});
      put_vlq(trk, static_cast<std::uint32_t>(tracks[ti].name.size()));
      trk.insert(trk.end(), tracks[ti].name.begin(), tracks[ti].name.end());
    }
    std::uint32_t last = 0;
    for (const auto& [tick, is_on, key] : events) {
      put_vlq(trk, tick - last);
      last = tick;
      trk.push_back(static_cast<std::uint8_t>((is_on ? 0x90 : 0x80) | tracks[ti].channel));
      trk.push_back(static_cast<std::uint8_t>(key));
      trk.push_back(is_on ? 80 : 0);
    }
    put_vlq(trk, 0);
    trk.insert(trk.end(), {0xFF, 0x2F, 0x00});
    out.insert(out.end(), {'M', 'T', 'r', 'k'});
    put_be(out, static_cast<std::uint32_t>(trk.size()), 4);
    out.insert(out.end(), trk.begin(), trk.end());
  }
  return out;
}

}  // namespace detail

/// Two tracks: left hand (track 0) and right hand (track 1).
inline std::vector<std::uint8_t> write_two_hands(const std::vector<OutNote>& notes) {
  std::vector<detail::TrackNotes> tracks(2);
  tracks[0] = {"Left hand", 0, {}};
  tracks[1] = {"Right hand", 1, {}};
  for (const auto& n : notes) {
    tracks[hand_index(n.hand)].notes.emplace_back(n.midi, n.onset, n.duration);
  }
  return detail::assemble(tracks);
}

/// One track per distinct source track, in ascending track order.
inline std::vector<std::uint8_t> write_tracks(const EnsembleScore& score) {
  std::map<int, detail::TrackNotes> by_track;
  for (const auto& n : score) {
    by_track[n.track].notes.emplace_back(n.pitch.midi(), n.onset, n.duration);
  }
  std::vector<detail::TrackNotes> tracks;
  for (auto& [t, tn] : by_track) {
    tn.channel = static_cast<int>(tracks.size() % 16);
    tracks.push_back(std::move(tn));
  }
  return detail::assemble(tracks);
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace pianored::smf
