#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "avsync/register_log.hpp"
#include "avsync/timebase.hpp"

namespace avsync {

// Event marker broadcast while the clip plays. Sequence ids are strictly
// increasing per session; the datagram channel is lossy by contract, so gaps
// in ids are how a receiver detects loss.
struct MarkerEvent {
  std::int64_t id = 0;
  double time = 0.0;  // sender timer value
  std::string label;  // single token, no whitespace

  bool operator==(const MarkerEvent&) const = default;
};

struct GazeSample {
  double time = 0.0;
  double x = 0.0;  // normalized [0, 1]
  double y = 0.0;

  bool operator==(const GazeSample&) const = default;
};

// ASCII line protocols, fixed decimals so goldens are bit-exact:
//   MARK <id> <time:%.6f> <label>\n
//   GAZE <time:%.6f> <x:%.3f> <y:%.3f>\n
std::string serialize_marker(const MarkerEvent& event);
MarkerEvent parse_marker(const std::string& line);
std::string serialize_gaze(const GazeSample& sample);
GazeSample parse_gaze(const std::string& line);

// Fire-and-forget UDP marker sender. Construction resolves the endpoint
// ("host:port"); send() never blocks longer than the budget.
class MarkerSender {
 public:
  explicit MarkerSender(const std::string& endpoint,
                        std::chrono::milliseconds budget =
                            std::chrono::milliseconds(50));
  ~MarkerSender();
  MarkerSender(MarkerSender&& other) noexcept;
  MarkerSender& operator=(MarkerSender&&) = delete;
  MarkerSender(const MarkerSender&) = delete;

  void send(const MarkerEvent& event);

 private:
  int fd_ = -1;
};

class MarkerReceiver {
 public:
  explicit MarkerReceiver(std::uint16_t port = 0);  // 0 = ephemeral
  ~MarkerReceiver();
  MarkerReceiver(MarkerReceiver&& other) noexcept;
  MarkerReceiver& operator=(MarkerReceiver&&) = delete;
  MarkerReceiver(const MarkerReceiver&) = delete;

  std::uint16_t port() const { return port_; }
  std::size_t malformed_count() const { return malformed_; }

  // Next valid marker, or nullopt once the timeout passes with none.
  std::optional<MarkerEvent> poll(std::chrono::milliseconds timeout);

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
  std::size_t malformed_ = 0;
};

struct GazeIngestOptions {
  std::chrono::milliseconds idle_timeout = std::chrono::milliseconds(2000);
  std::size_t max_samples = 0;  // 0 = until end of stream
};

struct GazeIngestStats {
  std::size_t received = 0;
  std::size_t malformed = 0;  // bad grammar or out-of-range coordinates
  bool timed_out = false;
};

// Connects to the TCP gaze source and feeds newline-delimited records to the
// sink until end-of-stream, the idle timeout, or max_samples.
GazeIngestStats ingest_gaze(const std::string& endpoint,
                            const std::function<void(const GazeSample&)>& sink,
                            const GazeIngestOptions& options = {});

// Chronologically merged session data. Receivers hand immutable events to
// the single owner of the log; entries keep arrival order for tie-breaking.
class SessionLog {
 public:
  struct Entry {
    enum class Source { kMarker, kGaze };
    Source source;
    double time;
    MarkerEvent marker;  // valid when source == kMarker
    GazeSample gaze;     // valid when source == kGaze
    std::uint64_t arrival;
  };

  void add(const MarkerEvent& event);
  void add(const GazeSample& sample);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t marker_gap_count() const { return marker_gaps_; }
  std::size_t markers_dropped() const { return markers_dropped_; }

 private:
  std::vector<Entry> entries_;
  std::uint64_t next_arrival_ = 0;
  std::int64_t last_marker_id_ = -1;
  std::size_t marker_gaps_ = 0;
  std::size_t markers_dropped_ = 0;
};

// Register-file view of a session: markers become CUT_MARK rows (SYNC_MARK
// when the label starts with "sync"), gaze samples become TICK rows labelled
// gaze:<x>,<y>. Times that would collide at the file's 6-decimal resolution
// are nudged forward one microsecond to keep rows strictly increasing.
RegisterLog session_to_register(const SessionLog& log, const Timebase& tb = {});

// Single atomic write of the merged chronological register file.
void finalize_session(const SessionLog& log, const std::string& path,
                      const Timebase& tb = {});

struct CaptureSessionOptions {
  std::uint16_t marker_port = 0;      // 0 = ephemeral
  std::string gaze_endpoint;          // empty = no gaze stream
  std::chrono::milliseconds idle_timeout = std::chrono::milliseconds(2000);
  std::chrono::milliseconds max_duration = std::chrono::milliseconds(0);
  std::size_t max_markers = 0;  // 0 = unlimited
  std::function<void(std::uint16_t)> on_listening;  // reports the bound port
};

// Runs the receive side of a session: markers over UDP, gaze over TCP, one
// writer merging both. Returns when idle, at max_duration, or after
// max_markers.
SessionLog run_capture_session(const CaptureSessionOptions& options);

}  // namespace avsync
