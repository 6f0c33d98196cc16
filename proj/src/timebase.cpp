#include "avsync/timebase.hpp"

#include <cmath>

namespace avsync {

void validate(const Timebase& tb) {
  if (!std::isfinite(tb.video_fps) || tb.video_fps <= 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "video_fps must be positive");
  }
  if (!std::isfinite(tb.camera_fps) || tb.camera_fps <= 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "camera_fps must be positive");
  }
}

FrameDelta seconds_to_frames(double seconds, const Timebase& tb) {
  if (!std::isfinite(seconds)) {
    throw Error(ErrorCode::kNonFinite, "seconds_to_frames: non-finite input");
  }
  return FrameDelta{seconds * tb.video_fps};
}

double frames_to_seconds(FrameDelta delta, const Timebase& tb) {
  if (!std::isfinite(delta.frames)) {
    throw Error(ErrorCode::kNonFinite, "frames_to_seconds: non-finite input");
  }
  return delta.frames / tb.video_fps;
}

bool within_tolerance(double a_seconds, double b_seconds, Tolerance tol,
                      const Timebase& tb) {
  if (!std::isfinite(a_seconds) || !std::isfinite(b_seconds)) {
    throw Error(ErrorCode::kNonFinite, "within_tolerance: non-finite input");
  }
  if (tol.frames < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "tolerance must be >= 0");
  }
  return std::fabs(seconds_to_frames(a_seconds - b_seconds, tb).frames) <=
         tol.frames;
}

}  // namespace avsync
