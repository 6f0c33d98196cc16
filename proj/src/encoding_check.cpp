#include "avsync/encoding_check.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "avsync/error.hpp"
#include "file_io.hpp"

namespace avsync {

using nlohmann::json;

namespace {

constexpr double kAnchorLowKbps = 4000.0;
constexpr double kAnchorLowQuality = 0.475;
constexpr double kAnchorHighKbps = 7535.0;
constexpr double kAnchorHighQuality = 0.9;

void require_well_formed(const EncodingProfile& p) {
  if (p.width <= 0 || p.height <= 0 || p.fps <= 0.0 ||
      p.video_bitrate_max <= 0.0 || p.audio_bitrate <= 0.0 ||
      p.audio_rate <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "profile fields must all be positive");
  }
  if (p.quality_factor < 0.0 || p.quality_factor > 1.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "quality_factor must lie in [0, 1]");
  }
}

}  // namespace

const char* to_string(EncodingVerdict verdict) {
  switch (verdict) {
    case EncodingVerdict::kOk: return "OK";
    case EncodingVerdict::kMarginal: return "MARGINAL";
    case EncodingVerdict::kReject: return "REJECT";
  }
  return "REJECT";
}

EncodingProfile reference_profile() { return EncodingProfile{}; }

const std::vector<std::pair<int, int>>& resolution_ladder() {
  // As tried, in order, including the odd 1080x720 step.
  static const std::vector<std::pair<int, int>> ladder = {
      {1280, 720}, {1080, 720}, {576, 480}};
  return ladder;
}

ValidationReport validate_profile(const EncodingProfile& p) {
  require_well_formed(p);
  ValidationReport report;
  bool hard_violation = false;

  if (p.video_bitrate_max > kMaxSupportedKbps) {
    hard_violation = true;
    std::ostringstream msg;
    msg << "video bitrate " << p.video_bitrate_max << " kbps exceeds the "
        << kMaxSupportedKbps << " kbps native ceiling";
    report.findings.push_back({"bitrate_cap", msg.str()});
  }

  if (p.width > 576 || p.height > 480) {
    std::ostringstream msg;
    msg << p.width << "x" << p.height
        << " plays with degraded fluency; 576x480 is the proven resolution";
    report.findings.push_back({"resolution", msg.str()});
  }

  if (p.bitrate_mode != BitrateMode::kVbr || !p.two_pass || !p.soft_target) {
    report.findings.push_back(
        {"encoder_options",
         "best fluency needs VBR with two-pass and soft-target enabled"});
  }

  if (p.fps != 25.0) {
    std::ostringstream msg;
    msg << "source is " << p.fps << " fps but playback always runs at 25 fps";
    report.findings.push_back({"fps", msg.str()});
  }

  if (hard_violation) {
    report.verdict = EncodingVerdict::kReject;
  } else if (!report.findings.empty()) {
    report.verdict = EncodingVerdict::kMarginal;
  } else {
    report.verdict = EncodingVerdict::kOk;
  }
  return report;
}

double quality_for_bitrate(double bitrate_kbps) {
  if (!(bitrate_kbps > 0.0) || bitrate_kbps > kMaxSupportedKbps) {
    throw Error(ErrorCode::kInvalidArgument,
                "bitrate must lie in (0, " +
                    std::to_string(kMaxSupportedKbps) + "] kbps");
  }
  // Return the anchors themselves bit-exactly; the line is only as good as
  // its two measured points.
  if (bitrate_kbps == kAnchorLowKbps) return kAnchorLowQuality;
  if (bitrate_kbps == kAnchorHighKbps) return kAnchorHighQuality;
  double q = kAnchorLowQuality +
             (bitrate_kbps - kAnchorLowKbps) *
                 (kAnchorHighQuality - kAnchorLowQuality) /
                 (kAnchorHighKbps - kAnchorLowKbps);
  if (q < 0.0) return 0.0;
  if (q > 1.0) return 1.0;
  return q;
}

EncodingProfile parse_profile_json(const std::string& text) {
  EncodingProfile p;
  try {
    json j = json::parse(text);
    p.width = j.at("width").get<int>();
    p.height = j.at("height").get<int>();
    p.fps = j.at("fps").get<double>();
    p.video_bitrate_max = j.at("video_bitrate_max").get<double>();
    std::string mode = j.at("bitrate_mode").get<std::string>();
    if (mode == "CBR") {
      p.bitrate_mode = BitrateMode::kCbr;
    } else if (mode == "VBR") {
      p.bitrate_mode = BitrateMode::kVbr;
    } else {
      throw Error(ErrorCode::kParseError,
                  "bitrate_mode must be CBR or VBR, got '" + mode + "'");
    }
    p.two_pass = j.at("two_pass").get<bool>();
    p.soft_target = j.at("soft_target").get<bool>();
    p.audio_bitrate = j.at("audio_bitrate").get<double>();
    p.audio_rate = j.at("audio_rate").get<double>();
    p.quality_factor = j.at("quality_factor").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("profile json: ") + e.what());
  }
  require_well_formed(p);
  return p;
}

std::string serialize_profile_json(const EncodingProfile& p) {
  json j;
  j["width"] = p.width;
  j["height"] = p.height;
  j["fps"] = p.fps;
  j["video_bitrate_max"] = p.video_bitrate_max;
  j["bitrate_mode"] = p.bitrate_mode == BitrateMode::kVbr ? "VBR" : "CBR";
  j["two_pass"] = p.two_pass;
  j["soft_target"] = p.soft_target;
  j["audio_bitrate"] = p.audio_bitrate;
  j["audio_rate"] = p.audio_rate;
  j["quality_factor"] = p.quality_factor;
  return j.dump(2) + "\n";
}

EncodingProfile read_profile(const std::string& path) {
  return parse_profile_json(detail::read_file(path));
}

std::string validation_report_json(const ValidationReport& report) {
  json j;
  j["schema"] = "avsync.encoding.v1";
  j["verdict"] = to_string(report.verdict);
  j["findings"] = json::array();
  for (const auto& f : report.findings) {
    j["findings"].push_back({{"rule", f.rule}, {"message", f.message}});
  }
  return j.dump(2) + "\n";
}

std::string validation_report_text(const ValidationReport& report) {
  std::ostringstream out;
  out << "verdict: " << to_string(report.verdict) << "\n";
  if (report.findings.empty()) {
    out << "no findings\n";
  }
  for (const auto& f : report.findings) {
    out << "  [" << f.rule << "] " << f.message << "\n";
  }
  return out.str();
}

}  // namespace avsync
