#include "avsync/av_offset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "file_io.hpp"

namespace avsync {

OffsetEstimate estimate_offset(const std::vector<OnsetPair>& pairs,
                               const Timebase& tb) {
  validate(tb);
  if (pairs.size() < 2) {
    throw Error(ErrorCode::kInsufficientPairs,
                "need >= 2 onset pairs, got " + std::to_string(pairs.size()));
  }
  std::vector<double> diffs;
  diffs.reserve(pairs.size());
  for (const OnsetPair& p : pairs) {
    if (!std::isfinite(p.video_onset) || !std::isfinite(p.audio_onset)) {
      throw Error(ErrorCode::kNonFinite, "onset pair '" + p.label + "'");
    }
    diffs.push_back(
        seconds_to_frames(p.audio_onset - p.video_onset, tb).frames);
  }
  std::sort(diffs.begin(), diffs.end());
  OffsetEstimate est;
  std::size_t n = diffs.size();
  est.offset_frames = (n % 2 == 1)
                          ? diffs[n / 2]
                          : 0.5 * (diffs[n / 2 - 1] + diffs[n / 2]);
  est.spread_frames = diffs.back() - diffs.front();
  est.is_constant = est.spread_frames <= 1.0;
  return est;
}

CompensationPlan build_advance_plan(const OffsetEstimate& estimate) {
  if (!estimate.is_constant) {
    throw Error(ErrorCode::kNonConstantOffset,
                "offset spread " + std::to_string(estimate.spread_frames) +
                    " frames exceeds 1 frame; single-value compensation "
                    "is invalid");
  }
  double rounded = std::floor(estimate.offset_frames + 0.5);  // half-up
  if (rounded < 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "audio leads video; an advance cannot compensate it");
  }
  CompensationPlan plan;
  plan.audio_advance_frames = static_cast<int>(rounded);
  plan.register_shift_frames = 0.0;
  std::ostringstream prov;
  prov << "audio advance from offset " << estimate.offset_frames
       << " frames (spread " << estimate.spread_frames << ")";
  plan.provenance = prov.str();
  return plan;
}

PcmAudio advance_audio(const PcmAudio& audio, int advance_frames,
                       const Timebase& tb) {
  validate(tb);
  if (advance_frames < 0) {
    throw Error(ErrorCode::kInvalidArgument, "advance_frames must be >= 0");
  }
  if (audio.channels <= 0 || audio.sample_rate <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "malformed audio");
  }
  if (audio.samples.size() % static_cast<std::size_t>(audio.channels) != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "sample count not divisible by channel count");
  }
  const std::size_t cut_per_channel = static_cast<std::size_t>(std::llround(
      static_cast<double>(advance_frames) * audio.sample_rate / tb.video_fps));
  const std::size_t cut =
      cut_per_channel * static_cast<std::size_t>(audio.channels);
  if (cut >= audio.samples.size() && cut != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "advance of " + std::to_string(advance_frames) +
                    " frames exceeds the audio duration");
  }
  PcmAudio out;
  out.sample_rate = audio.sample_rate;
  out.channels = audio.channels;
  out.samples.assign(audio.samples.begin() +
                         static_cast<std::ptrdiff_t>(cut),
                     audio.samples.end());
  out.samples.resize(audio.samples.size(), 0);
  return out;
}

VerifyResult verify_loop(const MeasureFn& run, const OffsetEstimate& initial,
                         int max_iterations, const Timebase& tb,
                         Tolerance tolerance) {
  if (max_iterations < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_iterations must be >= 1");
  }
  VerifyResult result;
  result.plan = build_advance_plan(initial);
  for (int iter = 1; iter <= max_iterations; ++iter) {
    std::vector<OnsetPair> pairs = run(result.plan);
    OffsetEstimate est = estimate_offset(pairs, tb);
    result.iterations = iter;
    result.residual_frames = est.offset_frames;
    result.residual_history.push_back(est.offset_frames);
    if (std::fabs(est.offset_frames) <= tolerance.frames) {
      std::ostringstream prov;
      prov << result.plan.provenance << "; verified after " << iter
           << " iteration(s), residual " << est.offset_frames << " frames";
      result.plan.provenance = prov.str();
      return result;
    }
    // Residual outside tolerance: nudge the advance a frame in the measured
    // direction and re-test.
    result.plan.audio_advance_frames += est.offset_frames > 0.0 ? 1 : -1;
    if (result.plan.audio_advance_frames < 0) {
      result.plan.audio_advance_frames = 0;
    }
  }
  std::ostringstream msg;
  msg << "no convergence after " << max_iterations << " iterations; residuals:";
  for (double r : result.residual_history) msg << " " << r;
  throw Error(ErrorCode::kNotConverged, msg.str());
}

std::vector<OnsetPair> parse_onsets_csv(const std::string& text,
                                        const std::string& origin) {
  std::vector<OnsetPair> pairs;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line_no == 1 && line.rfind("label,", 0) == 0) continue;  // header

    std::istringstream ls(line);
    std::string label, video_tok, audio_tok;
    if (!std::getline(ls, label, ',') || !std::getline(ls, video_tok, ',') ||
        !std::getline(ls, audio_tok)) {
      throw Error(ErrorCode::kParseError,
                  origin + ":" + std::to_string(line_no) +
                      ": expected label,video_onset_s,audio_onset_s");
    }
    OnsetPair p;
    p.label = label;
    try {
      p.video_onset = std::stod(video_tok);
      p.audio_onset = std::stod(audio_tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError,
                  origin + ":" + std::to_string(line_no) + ": bad onset value");
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<OnsetPair> read_onsets(const std::string& path) {
  return parse_onsets_csv(detail::read_file(path), path);
}

std::string serialize_onsets_csv(const std::vector<OnsetPair>& pairs) {
  std::string out = "label,video_onset_s,audio_onset_s\n";
  for (const OnsetPair& p : pairs) {
    out += p.label;
    out += ",";
    out += detail::format_seconds(p.video_onset);
    out += ",";
    out += detail::format_seconds(p.audio_onset);
    out += "\n";
  }
  return out;
}

void write_onsets(const std::vector<OnsetPair>& pairs,
                  const std::string& path) {
  detail::atomic_write_file(path, serialize_onsets_csv(pairs));
}

}  // namespace avsync
