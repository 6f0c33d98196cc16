#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "avsync/capture.hpp"
#include "avsync/timebase.hpp"

namespace avsync {

// The temporal register text file: one row per timer tick, plus rows for the
// event marks that fired. File format (ASCII, '\n' terminated):
//
//   # register-log v1
//   # fps 25.000000
//   # audio uncompensated
//   -0.251793 TICK
//   0.014772 TICK
//   5.906908 CUT_MARK cut_0
//
// Times carry 6 decimals. Header lines are `# key value...` pairs and must
// precede the first row.
enum class RowKind { kTick, kSyncMark, kCutMark };

const char* to_string(RowKind kind);

struct RegisterRow {
  double time = 0.0;
  RowKind kind = RowKind::kTick;
  std::string label;  // empty when the row carries none
};

struct RegisterLog {
  Timebase timebase;
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<RegisterRow> rows;

  std::optional<std::string> header_value(const std::string& key) const;
  void set_header(const std::string& key, const std::string& value);
};

struct DeltaAnalysis {
  std::vector<double> deltas_seconds;  // delta[i] = time[i+1] - time[i]
  std::vector<double> deltas_frames;
  double baseline_frames = 0.0;  // median of non-stall deltas
  struct StallRow {
    std::size_t row_index;  // index of the row the long delta starts at
    double delta_frames;
    double excess_frames;
  };
  std::vector<StallRow> stall_rows;
};

struct CaptureDelayEstimate {
  double fractional_frames = 0.0;  // from stall excess at the capture rows
  int truncated_frames = 0;        // floor(fractional_frames)
  std::vector<int> per_capture_lags;
  std::map<int, double> distribution;  // lag -> percentage, sums to ~100
};

struct CompensationPlan {
  double register_shift_frames = 0.0;
  int audio_advance_frames = 0;
  std::string provenance;
};

RegisterLog parse_register(const std::string& path, const Timebase& tb = {});
RegisterLog parse_register_text(const std::string& text, const Timebase& tb,
                                const std::string& origin = "<string>");

std::string serialize_register(const RegisterLog& log);
// Whole-file atomic: writes a temp file in the same directory, then renames.
void write_register(const RegisterLog& log, const std::string& path);

DeltaAnalysis analyze_deltas(const RegisterLog& log);

CaptureDelayEstimate estimate_capture_delay(
    const RegisterLog& log, const std::vector<CaptureRecord>& captures);

// Shifts every row time by plan.register_shift_frames (converted to seconds).
// Kinds and labels are untouched. Pre-roll (negative) result times are legal.
RegisterLog compensate_register(const RegisterLog& log,
                                const CompensationPlan& plan);

// The two-measurement calibration against a sync-mark screenshot: the timer
// frame at the mark row minus the captured counter gives the first delay, the
// stall delta at the mark row minus the baseline gives the screenshot delay,
// and their (negated) sum is the register shift.
CompensationPlan calibrate_from_sync_mark(const RegisterLog& log,
                                          const CaptureRecord& sync_capture);

std::string serialize_plan_json(const CompensationPlan& plan);
CompensationPlan parse_plan_json(const std::string& text);
void write_plan(const CompensationPlan& plan, const std::string& path);
CompensationPlan read_plan(const std::string& path);

}  // namespace avsync
