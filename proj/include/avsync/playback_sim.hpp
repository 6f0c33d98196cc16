#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "avsync/capture.hpp"
#include "avsync/fluency.hpp"
#include "avsync/register_log.hpp"
#include "avsync/timebase.hpp"

namespace avsync {

// Deterministic playback engine reproducing the measured latency phenomena:
// a timer pre-wound so value 0 lands on the first displayed frame, a register
// row per engine tick, a lengthened tick whenever a screenshot fires, a
// constant audio lag, and hold-and-skip frame defects for the fluency tests.
// Every analyzer in this library is validated against its ground truth.
struct SimConfig {
  double clip_duration = 10.0;  // seconds, > 0
  Timebase timebase;
  double video_start_delay = 0.251793;  // timer pre-roll before frame 0
  double audio_delay_frames = 5.5;      // constant audio lag, in frames
  // When set, the audio delay is drawn once per run, uniformly from this
  // range, instead of using audio_delay_frames. The drawn value stays
  // constant for the whole clip.
  std::optional<std::pair<double, double>> audio_delay_range;
  double tick_period = 0.016565;   // median register delta
  double tick_jitter = 0.000005;   // half-width of uniform tick jitter
  double screenshot_stall = 0.115936;  // excess tick length per screenshot
  std::vector<double> cut_times;       // screenshot triggers, in clip seconds
  std::vector<double> sync_mark_times; // sync-mark screenshots (black leader)
  std::uint64_t rng_seed = 1;
};

struct SimOutput {
  RegisterLog register_log;
  std::vector<CaptureRecord> captures;
  std::vector<double> audio_onsets;  // one per cut, same order as cut_times
  std::vector<double> video_onsets;  // display start of each cut's frame
  double audio_delay_frames = 0.0;   // the constant actually applied
};

void validate(const SimConfig& cfg);

SimOutput run_simulation(const SimConfig& cfg);

// A hold-and-skip playback defect: frame_index stays on screen for
// hold_extra_frames additional frame periods and the same number of
// following frames are dropped, conserving total duration.
struct FluencyDefect {
  int frame_index = 0;
  int hold_extra_frames = 1;
};

// What a free-running camera at camera_fps records of the frame counter.
// camera_phase shifts the camera shutter grid; a nonzero phase produces the
// boundary double exposures seen in normal playback.
CameraObservationSequence inject_fluency_defects(
    const SimConfig& cfg, const std::vector<FluencyDefect>& defects,
    double camera_phase = 0.0);

}  // namespace avsync
