#pragma once

#include <string>
#include <vector>

namespace avsync {

// One programmed screenshot: the timer value that triggered it and the frame
// counter actually visible when the capture completed.
struct CaptureRecord {
  double requested_time = 0.0;
  int displayed_counter = 0;
  std::string label;
};

// JSON-lines capture manifest: one object per capture with fields
// label, requested_time, displayed_counter.
std::string serialize_captures_jsonl(const std::vector<CaptureRecord>& captures);
std::vector<CaptureRecord> parse_captures_jsonl(const std::string& text);
void write_captures(const std::vector<CaptureRecord>& captures,
                    const std::string& path);
std::vector<CaptureRecord> read_captures(const std::string& path);

}  // namespace avsync
