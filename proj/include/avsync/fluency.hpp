#pragma once

#include <string>
#include <vector>

#include "avsync/timebase.hpp"

namespace avsync {

// One camera frame's view of the superimposed counter. A straddling shutter
// interval exposes two consecutive counter values; adjacency is enforced by
// construction (the second value is always counter + 1).
struct CameraObservation {
  int counter = 0;
  bool double_exposed = false;

  int max_value() const { return double_exposed ? counter + 1 : counter; }
};

struct CameraObservationSequence {
  Timebase timebase;
  std::vector<CameraObservation> observations;
};

enum class FluencyVerdict { kFluent, kDegraded };

const char* to_string(FluencyVerdict verdict);

struct StallFinding {
  int counter_value;
  int held_camera_frames;  // run length in camera frames
  double excess_frames;    // hold beyond one frame period, in video frames
};

struct JumpFinding {
  int from_counter;
  int to_counter;
  int skipped_count;
};

struct FluencyReport {
  std::vector<StallFinding> stalls;
  std::vector<JumpFinding> jumps;
  int double_exposure_count = 0;
  double total_duration_frames = 0.0;
  double expected_duration_frames = 0.0;
  FluencyVerdict verdict = FluencyVerdict::kFluent;  // FLUENT iff no findings
};

// Scans the counter transcription for held frames and jumps. A run longer
// than ceil(camera_fps/video_fps) + 1 camera frames is a stall; the +1
// tolerates the one frame of shutter-phase aliasing a free-running camera
// introduces. Decreasing counters are corrupt transcription, not playback.
FluencyReport analyze_fluency(const CameraObservationSequence& obs,
                              int expected_frame_count);

// Observation file: one camera frame per line,
//   `<camera_frame_index>: <counter>` or `<camera_frame_index>: <n>|<n+1>`
// with `#` comments. Indices must increase.
CameraObservationSequence parse_observations(const std::string& path,
                                             const Timebase& tb = {});
CameraObservationSequence parse_observations_text(
    const std::string& text, const Timebase& tb,
    const std::string& origin = "<string>");

std::string serialize_observations(const CameraObservationSequence& obs);

std::string fluency_report_json(const FluencyReport& report);
std::string fluency_report_text(const FluencyReport& report);

}  // namespace avsync
