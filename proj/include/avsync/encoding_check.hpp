#pragma once

#include <string>
#include <utility>
#include <vector>

namespace avsync {

enum class BitrateMode { kCbr, kVbr };

// A candidate encode of the source material, checked against the envelope
// that playback stays fluent in.
struct EncodingProfile {
  int width = 576;
  int height = 480;
  double fps = 25.0;
  double video_bitrate_max = 4000.0;  // kbps
  BitrateMode bitrate_mode = BitrateMode::kVbr;
  bool two_pass = true;
  bool soft_target = true;
  double audio_bitrate = 192.0;  // kbps
  double audio_rate = 48000.0;   // Hz
  double quality_factor = 0.475;
};

enum class EncodingVerdict { kOk, kMarginal, kReject };

const char* to_string(EncodingVerdict verdict);

struct ValidationFinding {
  std::string rule;
  std::string message;
};

struct ValidationReport {
  EncodingVerdict verdict = EncodingVerdict::kOk;
  std::vector<ValidationFinding> findings;
};

// Native bitrate ceiling; above it playback is unsupported outright.
inline constexpr double kMaxSupportedKbps = 8356.0;

// The known-good profile: 576x480 at 25 fps, VBR two-pass with soft target.
EncodingProfile reference_profile();

// Resolutions in the order they were tried; recommendations step down it.
const std::vector<std::pair<int, int>>& resolution_ladder();

ValidationReport validate_profile(const EncodingProfile& profile);

// Player quality setting for a bitrate: linear through the two published
// anchor points (4000 kbps, 0.475) and (7535 kbps, 0.9), clamped to [0, 1].
// Outside the anchors the line is an extrapolation, not a measurement.
double quality_for_bitrate(double bitrate_kbps);

EncodingProfile parse_profile_json(const std::string& text);
std::string serialize_profile_json(const EncodingProfile& profile);
EncodingProfile read_profile(const std::string& path);

std::string validation_report_json(const ValidationReport& report);
std::string validation_report_text(const ValidationReport& report);

}  // namespace avsync
