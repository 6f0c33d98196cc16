#include "avsync/fluency.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "avsync/error.hpp"
#include "file_io.hpp"

namespace avsync {

using nlohmann::json;

const char* to_string(FluencyVerdict verdict) {
  return verdict == FluencyVerdict::kFluent ? "FLUENT" : "DEGRADED";
}

FluencyReport analyze_fluency(const CameraObservationSequence& obs,
                              int expected_frame_count) {
  validate(obs.timebase);
  if (obs.timebase.camera_fps < 2.0 * obs.timebase.video_fps) {
    throw Error(ErrorCode::kInvalidConfig,
                "camera_fps must be at least twice video_fps");
  }
  if (expected_frame_count <= 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "expected_frame_count must be positive");
  }
  if (obs.observations.empty()) {
    throw Error(ErrorCode::kEmptyLog, "no observations");
  }

  const double ratio = obs.timebase.camera_fps / obs.timebase.video_fps;
  const int stall_threshold = static_cast<int>(std::ceil(ratio)) + 1;

  FluencyReport report;
  report.expected_duration_frames = static_cast<double>(expected_frame_count);
  report.total_duration_frames =
      static_cast<double>(obs.observations.size()) / ratio;

  // Run lengths per counter value. Counter values are nondecreasing, so each
  // value's appearances are contiguous; a double exposure extends the run of
  // its low value and opens the run of the high one.
  struct Run {
    int value;
    int count;
  };
  std::vector<Run> runs;
  int prev_max = -1;
  int prev_min = -1;
  for (std::size_t i = 0; i < obs.observations.size(); ++i) {
    const CameraObservation& o = obs.observations[i];
    if (prev_max >= 0 && (o.counter < prev_min || o.max_value() < prev_max)) {
      throw Error(ErrorCode::kCorruptInput,
                  "counter decreases at camera frame " + std::to_string(i) +
                      " (" + std::to_string(prev_max) + " then " +
                      std::to_string(o.counter) + ")");
    }
    if (prev_max >= 0 && o.counter > prev_max + 1) {
      report.jumps.push_back({prev_max, o.counter, o.counter - prev_max - 1});
    }
    for (int v = o.counter; v <= o.max_value(); ++v) {
      // At most two runs are ever open at once (v and v+1, during a double
      // exposure), so looking back two entries is enough.
      if (!runs.empty() && runs.back().value == v) {
        runs.back().count++;
      } else if (runs.size() >= 2 && runs[runs.size() - 2].value == v) {
        runs[runs.size() - 2].count++;
      } else {
        runs.push_back({v, 1});
      }
    }
    if (o.double_exposed) report.double_exposure_count++;
    prev_max = o.max_value();
    prev_min = o.counter;
  }

  for (const Run& run : runs) {
    if (run.count > stall_threshold) {
      double excess = (static_cast<double>(run.count) - ratio) *
                      obs.timebase.video_fps / obs.timebase.camera_fps;
      report.stalls.push_back({run.value, run.count, excess});
    }
  }

  report.verdict = (report.stalls.empty() && report.jumps.empty())
                       ? FluencyVerdict::kFluent
                       : FluencyVerdict::kDegraded;
  return report;
}

CameraObservationSequence parse_observations_text(const std::string& text,
                                                  const Timebase& tb,
                                                  const std::string& origin) {
  validate(tb);
  CameraObservationSequence seq;
  seq.timebase = tb;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  long prev_index = -1;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
    if (blank) continue;

    auto fail = [&](const std::string& why) -> Error {
      return Error(ErrorCode::kParseError,
                   origin + ":" + std::to_string(line_no) + ": " + why);
    };

    std::size_t colon = line.find(':');
    if (colon == std::string::npos) throw fail("missing ':'");
    long index = 0;
    try {
      std::size_t pos = 0;
      index = std::stol(line.substr(0, colon), &pos);
      std::string head = line.substr(0, colon);
      while (pos < head.size() && std::isspace(static_cast<unsigned char>(head[pos]))) pos++;
      if (pos != head.size()) throw std::invalid_argument(head);
    } catch (const std::exception&) {
      throw fail("bad camera frame index");
    }
    if (index <= prev_index) throw fail("camera frame index does not increase");
    prev_index = index;

    std::string values = line.substr(colon + 1);
    std::istringstream vs(values);
    std::string token;
    if (!(vs >> token)) throw fail("missing counter value");
    std::string extra;
    if (vs >> extra) throw fail("trailing content '" + extra + "'");

    CameraObservation o;
    std::size_t bar = token.find('|');
    try {
      if (bar == std::string::npos) {
        std::size_t pos = 0;
        o.counter = std::stoi(token, &pos);
        if (pos != token.size()) throw std::invalid_argument(token);
      } else {
        std::size_t pos = 0;
        o.counter = std::stoi(token.substr(0, bar), &pos);
        std::string second = token.substr(bar + 1);
        int hi = std::stoi(second, &pos);
        if (pos != second.size()) throw std::invalid_argument(second);
        if (hi != o.counter + 1) {
          throw fail("double exposure must hold adjacent counters, got " +
                     token);
        }
        o.double_exposed = true;
      }
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      throw fail("bad counter value '" + token + "'");
    }
    if (o.counter < 0) throw fail("negative counter");
    seq.observations.push_back(o);
  }
  return seq;
}

CameraObservationSequence parse_observations(const std::string& path,
                                             const Timebase& tb) {
  return parse_observations_text(detail::read_file(path), tb, path);
}

std::string serialize_observations(const CameraObservationSequence& obs) {
  std::string out;
  for (std::size_t i = 0; i < obs.observations.size(); ++i) {
    const CameraObservation& o = obs.observations[i];
    out += std::to_string(i);
    out += ": ";
    out += std::to_string(o.counter);
    if (o.double_exposed) {
      out += "|";
      out += std::to_string(o.counter + 1);
    }
    out += "\n";
  }
  return out;
}

std::string fluency_report_json(const FluencyReport& report) {
  json j;
  j["schema"] = "avsync.fluency.v1";
  j["verdict"] = to_string(report.verdict);
  j["double_exposure_count"] = report.double_exposure_count;
  j["total_duration_frames"] = report.total_duration_frames;
  j["expected_duration_frames"] = report.expected_duration_frames;
  j["stalls"] = json::array();
  for (const auto& s : report.stalls) {
    j["stalls"].push_back({{"counter", s.counter_value},
                           {"held_camera_frames", s.held_camera_frames},
                           {"excess_frames", s.excess_frames}});
  }
  j["jumps"] = json::array();
  for (const auto& jmp : report.jumps) {
    j["jumps"].push_back({{"from", jmp.from_counter},
                          {"to", jmp.to_counter},
                          {"skipped", jmp.skipped_count}});
  }
  return j.dump(2) + "\n";
}

std::string fluency_report_text(const FluencyReport& report) {
  std::ostringstream out;
  out << "verdict: " << to_string(report.verdict) << "\n";
  out << "duration: " << report.total_duration_frames << " frames (expected "
      << report.expected_duration_frames << ")\n";
  out << "double exposures: " << report.double_exposure_count << "\n";
  out << "stalls: " << report.stalls.size() << "\n";
  for (const auto& s : report.stalls) {
    out << "  counter " << s.counter_value << " held for "
        << s.held_camera_frames << " camera frames (excess "
        << s.excess_frames << " video frames)\n";
  }
  out << "jumps: " << report.jumps.size() << "\n";
  for (const auto& j : report.jumps) {
    out << "  " << j.from_counter << " -> " << j.to_counter << " (skipped "
        << j.skipped_count << ")\n";
  }
  return out.str();
}

}  // namespace avsync
