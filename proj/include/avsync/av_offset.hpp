#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "avsync/register_log.hpp"
#include "avsync/timebase.hpp"

namespace avsync {

// One measured event: when its video frame appeared and when its sound was
// heard. Pairs come from comparing the filmed playback against the source
// clip in an editor; this module only does the arithmetic on them.
struct OnsetPair {
  double video_onset = 0.0;
  double audio_onset = 0.0;
  std::string label;
};

struct OffsetEstimate {
  double offset_frames = 0.0;  // audio minus video; positive = audio late
  double spread_frames = 0.0;  // max - min across pairs
  bool is_constant = true;     // spread <= 1 frame
};

// Interleaved signed 16-bit PCM.
struct PcmAudio {
  int sample_rate = 48000;
  int channels = 2;
  std::vector<std::int16_t> samples;

  std::size_t frames() const {
    return channels > 0 ? samples.size() / static_cast<std::size_t>(channels)
                        : 0;
  }
};

// Median of the per-pair differences; median so one mistranscribed pair
// cannot drag the estimate. Needs at least 2 pairs. A spread above 1 frame
// flags the estimate non-constant; it is returned anyway.
OffsetEstimate estimate_offset(const std::vector<OnsetPair>& pairs,
                               const Timebase& tb);

// Whole-frame audio advance, round-half-up: the observed offsets sit between
// integers, and either neighbour lands within the verification tolerance.
CompensationPlan build_advance_plan(const OffsetEstimate& estimate);

// Drops the first advance_frames worth of samples per channel and pads the
// tail with silence, so the container duration is unchanged.
PcmAudio advance_audio(const PcmAudio& audio, int advance_frames,
                       const Timebase& tb);

struct VerifyResult {
  CompensationPlan plan;
  int iterations = 0;
  double residual_frames = 0.0;
  std::vector<double> residual_history;
};

using MeasureFn =
    std::function<std::vector<OnsetPair>(const CompensationPlan&)>;

// The iterate-until-synchronized loop: apply the plan, re-measure, accept a
// residual within tolerance, otherwise nudge the advance by one frame and
// try again.
VerifyResult verify_loop(const MeasureFn& run, const OffsetEstimate& initial,
                         int max_iterations, const Timebase& tb,
                         Tolerance tolerance = {});

// Canonical RIFF WAVE, 16-bit little-endian integer samples.
PcmAudio read_wav(const std::string& path);
void write_wav(const PcmAudio& audio, const std::string& path);

// Onset pair CSV: `label,video_onset_s,audio_onset_s`, optional header line.
std::vector<OnsetPair> parse_onsets_csv(const std::string& text,
                                        const std::string& origin = "<string>");
std::vector<OnsetPair> read_onsets(const std::string& path);
std::string serialize_onsets_csv(const std::vector<OnsetPair>& pairs);
void write_onsets(const std::vector<OnsetPair>& pairs, const std::string& path);

}  // namespace avsync
