#include "avsync/playback_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "file_io.hpp"

namespace avsync {
namespace {

struct ScheduledMark {
  double time;
  RowKind kind;
  std::string label;
};

long long clip_frame_count(const SimConfig& cfg) {
  return std::llround(cfg.clip_duration * cfg.timebase.video_fps);
}

}  // namespace

void validate(const SimConfig& cfg) {
  validate(cfg.timebase);
  if (!(cfg.clip_duration > 0.0) || !std::isfinite(cfg.clip_duration)) {
    throw Error(ErrorCode::kInvalidConfig, "clip_duration must be > 0");
  }
  const double frame_period = 1.0 / cfg.timebase.video_fps;
  if (!(cfg.tick_period > 0.0) || !(cfg.tick_period < frame_period)) {
    throw Error(ErrorCode::kInvalidConfig,
                "tick_period must lie in (0, one frame period)");
  }
  if (cfg.tick_jitter < 0.0 || cfg.tick_jitter >= cfg.tick_period) {
    throw Error(ErrorCode::kInvalidConfig,
                "tick_jitter must be in [0, tick_period)");
  }
  if (cfg.video_start_delay < 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "video_start_delay must be >= 0");
  }
  if (cfg.screenshot_stall < 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "screenshot_stall must be >= 0");
  }
  for (double t : cfg.cut_times) {
    if (!(t >= 0.0) || !(t <= cfg.clip_duration)) {
      throw Error(ErrorCode::kInvalidConfig,
                  "cut_times must lie within [0, clip_duration]");
    }
  }
  for (double t : cfg.sync_mark_times) {
    if (!(t >= 0.0) || !(t <= cfg.clip_duration)) {
      throw Error(ErrorCode::kInvalidConfig,
                  "sync_mark_times must lie within [0, clip_duration]");
    }
  }
  if (cfg.audio_delay_range) {
    auto [lo, hi] = *cfg.audio_delay_range;
    if (!(lo <= hi)) {
      throw Error(ErrorCode::kInvalidConfig, "audio_delay_range is inverted");
    }
  }
}

SimOutput run_simulation(const SimConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.rng_seed);
  const double fps = cfg.timebase.video_fps;
  const long long total_frames = clip_frame_count(cfg);

  double audio_delay = cfg.audio_delay_frames;
  if (cfg.audio_delay_range) {
    auto [lo, hi] = *cfg.audio_delay_range;
    audio_delay = std::uniform_real_distribution<double>(lo, hi)(rng);
  }

  std::vector<ScheduledMark> marks;
  for (std::size_t i = 0; i < cfg.cut_times.size(); ++i) {
    marks.push_back(
        {cfg.cut_times[i], RowKind::kCutMark, "cut_" + std::to_string(i)});
  }
  for (std::size_t i = 0; i < cfg.sync_mark_times.size(); ++i) {
    marks.push_back({cfg.sync_mark_times[i], RowKind::kSyncMark,
                     "sync_" + std::to_string(i)});
  }
  std::stable_sort(marks.begin(), marks.end(),
                   [](const ScheduledMark& a, const ScheduledMark& b) {
                     return a.time < b.time;
                   });

  SimOutput out;
  out.audio_delay_frames = audio_delay;
  out.register_log.timebase = cfg.timebase;
  out.register_log.set_header("register-log", "v1");
  out.register_log.set_header("fps", detail::format_seconds(fps));
  out.register_log.set_header("audio",
                              audio_delay == 0.0 ? "none" : "uncompensated");

  std::uniform_real_distribution<double> jitter(-cfg.tick_jitter,
                                                cfg.tick_jitter);
  std::uniform_real_distribution<double> capture_phase(0.0, cfg.tick_period);

  // The timer is pre-wound so value 0 lands on the first displayed frame;
  // rows before 0 are the pre-roll. The video itself plays in real time, so
  // the counter visible at timer value t is floor(t * fps) regardless of how
  // long ticks take: screenshot stalls lengthen the tick, the playback
  // catches up by skipping, and total duration is conserved.
  double t = -cfg.video_start_delay;
  std::size_t next_mark = 0;
  while (true) {
    bool fired = next_mark < marks.size() && t >= marks[next_mark].time;
    RegisterRow row;
    row.time = t;
    if (fired) {
      row.kind = marks[next_mark].kind;
      row.label = marks[next_mark].label;
    }
    out.register_log.rows.push_back(row);

    double dt = cfg.tick_period + (cfg.tick_jitter > 0.0 ? jitter(rng) : 0.0);
    if (fired) {
      double completion = t + cfg.screenshot_stall + capture_phase(rng);
      long long counter = static_cast<long long>(std::floor(completion * fps));
      counter = std::clamp(counter, 0LL, total_frames - 1);
      out.captures.push_back(
          {t, static_cast<int>(counter), marks[next_mark].label});
      dt += cfg.screenshot_stall;
      ++next_mark;
    }
    if (t >= cfg.clip_duration) break;
    t += dt;
  }

  const double delay_seconds =
      frames_to_seconds(FrameDelta{audio_delay}, cfg.timebase);
  for (double cut : cfg.cut_times) {
    // nudge before flooring so frame-aligned cut times are not pushed a
    // whole frame down by representation error (2.32 * 25 = 57.999...)
    double onset = std::floor(cut * fps + 1e-9) / fps;
    out.video_onsets.push_back(onset);
    out.audio_onsets.push_back(onset + delay_seconds);
  }
  return out;
}

CameraObservationSequence inject_fluency_defects(
    const SimConfig& cfg, const std::vector<FluencyDefect>& defects,
    double camera_phase) {
  validate(cfg);
  if (cfg.timebase.camera_fps < 2.0 * cfg.timebase.video_fps) {
    throw Error(ErrorCode::kInvalidConfig,
                "camera_fps must be at least twice video_fps");
  }
  const long long total_frames = clip_frame_count(cfg);
  if (camera_phase < 0.0 ||
      camera_phase >= 1.0 / cfg.timebase.camera_fps) {
    throw Error(ErrorCode::kInvalidArgument,
                "camera_phase must lie in [0, one camera frame)");
  }

  std::vector<FluencyDefect> sorted = defects;
  std::sort(sorted.begin(), sorted.end(),
            [](const FluencyDefect& a, const FluencyDefect& b) {
              return a.frame_index < b.frame_index;
            });
  long long reach = -1;
  for (const FluencyDefect& d : sorted) {
    if (d.frame_index < 0 || d.frame_index >= total_frames) {
      throw Error(ErrorCode::kInvalidArgument,
                  "defect frame " + std::to_string(d.frame_index) +
                      " outside clip");
    }
    if (d.hold_extra_frames < 1) {
      throw Error(ErrorCode::kInvalidArgument, "hold_extra_frames must be >= 1");
    }
    if (d.frame_index + d.hold_extra_frames > total_frames - 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  "defect at frame " + std::to_string(d.frame_index) +
                      " would skip past end of clip");
    }
    if (d.frame_index <= reach) {
      throw Error(ErrorCode::kInvalidArgument,
                  "defect at frame " + std::to_string(d.frame_index) +
                      " overlaps the previous defect's skip region");
    }
    reach = d.frame_index + d.hold_extra_frames;
  }

  // Display durations per video frame, in frame periods: a held frame takes
  // 1 + h, the h frames after it take 0. Totals are exact integers, which
  // keeps boundary comparisons exact for aligned cameras.
  std::vector<int> duration(static_cast<std::size_t>(total_frames), 1);
  for (const FluencyDefect& d : sorted) {
    duration[d.frame_index] = 1 + d.hold_extra_frames;
    for (int k = 1; k <= d.hold_extra_frames; ++k) {
      duration[d.frame_index + k] = 0;
    }
  }

  // Displayed segments as (start, frame) pairs in frame units.
  std::vector<std::pair<long long, int>> segments;
  long long cursor = 0;
  for (long long f = 0; f < total_frames; ++f) {
    if (duration[f] > 0) {
      segments.emplace_back(cursor, static_cast<int>(f));
      cursor += duration[f];
    }
  }
  const double clip_end = static_cast<double>(cursor);  // == total_frames

  auto segment_at = [&segments](double x) -> std::size_t {
    std::size_t lo = 0, hi = segments.size();
    while (lo + 1 < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (static_cast<double>(segments[mid].first) <= x) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return lo;
  };

  CameraObservationSequence seq;
  seq.timebase = cfg.timebase;
  const double step = cfg.timebase.video_fps / cfg.timebase.camera_fps;
  const double phase = camera_phase * cfg.timebase.video_fps;
  // The camera rolls before playback starts, so a nonzero shutter phase
  // leaves a partial leading camera frame (j = -1) covering [0, phase).
  for (long long j = phase > 0.0 ? -1 : 0;; ++j) {
    double start = phase + static_cast<double>(j) * step;
    double end = std::min(start + step, clip_end);
    start = std::max(start, 0.0);
    if (start >= clip_end || end <= start) break;
    std::size_t si = segment_at(start);
    std::size_t ei =
        segment_at(std::nextafter(end, -std::numeric_limits<double>::infinity()));
    int first = segments[si].second;
    int last = segments[ei].second;
    CameraObservation o;
    o.counter = first;
    if (last == first + 1) {
      o.double_exposed = true;
    } else if (last > first + 1) {
      // The shutter interval crossed a skip: both end frames were genuinely
      // exposed but they are not adjacent, so keep the one shown longer.
      double boundary = static_cast<double>(segments[ei].first);
      if (end - boundary >= boundary - start) o.counter = last;
    }
    seq.observations.push_back(o);
  }
  return seq;
}

}  // namespace avsync
