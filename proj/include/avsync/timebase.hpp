#pragma once

#include "avsync/error.hpp"

namespace avsync {

// Frame/time arithmetic shared by every analyzer. Times are 64-bit floating
// seconds; frame counts stay real-valued and are only rounded at reporting
// boundaries.
struct Timebase {
  double video_fps = 25.0;
  double camera_fps = 50.0;
};

// A real-valued (possibly fractional or negative) count of video frames.
struct FrameDelta {
  double frames = 0.0;
};

struct Tolerance {
  double frames = 1.0;
};

void validate(const Timebase& tb);

// t * video_fps, no rounding.
FrameDelta seconds_to_frames(double seconds, const Timebase& tb);

double frames_to_seconds(FrameDelta delta, const Timebase& tb);

// |a - b| converted to frames compared against tol.frames. Symmetric in a, b.
bool within_tolerance(double a_seconds, double b_seconds, Tolerance tol,
                      const Timebase& tb);

}  // namespace avsync
