#include "avsync/marker_transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstring>
#include <deque>
#include <mutex>
#include <sstream>
#include <thread>

#include "file_io.hpp"

namespace avsync {
namespace {

struct ResolvedEndpoint {
  sockaddr_in addr{};
};

ResolvedEndpoint resolve_endpoint(const std::string& endpoint) {
  std::size_t colon = endpoint.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 >= endpoint.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "endpoint must be host:port, got '" + endpoint + "'");
  }
  std::string host = endpoint.substr(0, colon);
  std::string port = endpoint.substr(colon + 1);

  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = 0;
  addrinfo* result = nullptr;
  int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &result);
  if (rc != 0 || result == nullptr) {
    throw Error(ErrorCode::kNetworkError,
                "cannot resolve '" + endpoint + "': " + gai_strerror(rc));
  }
  ResolvedEndpoint out;
  std::memcpy(&out.addr, result->ai_addr,
              std::min(sizeof(out.addr), std::size_t(result->ai_addrlen)));
  ::freeaddrinfo(result);
  return out;
}

void set_timeout(int fd, int option, std::chrono::milliseconds ms) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(ms.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((ms.count() % 1000) * 1000);
  ::setsockopt(fd, SOL_SOCKET, option, &tv, sizeof tv);
}

}  // namespace

std::string serialize_marker(const MarkerEvent& event) {
  if (event.label.empty() ||
      event.label.find_first_of(" \t\r\n") != std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument,
                "marker label must be a single non-empty token");
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "MARK %lld %.6f ",
                static_cast<long long>(event.id), event.time);
  return std::string(buf) + event.label + "\n";
}

MarkerEvent parse_marker(const std::string& line) {
  std::istringstream in(line);
  std::string tag, label, extra;
  long long id = 0;
  double time = 0.0;
  if (!(in >> tag >> id >> time >> label) || tag != "MARK" || (in >> extra)) {
    throw Error(ErrorCode::kParseError, "bad marker record: " + line);
  }
  if (id < 0 || !std::isfinite(time)) {
    throw Error(ErrorCode::kParseError, "bad marker record: " + line);
  }
  return MarkerEvent{id, time, label};
}

std::string serialize_gaze(const GazeSample& sample) {
  if (sample.x < 0.0 || sample.x > 1.0 || sample.y < 0.0 || sample.y > 1.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "gaze coordinates must lie in [0, 1]");
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "GAZE %.6f %.3f %.3f\n", sample.time,
                sample.x, sample.y);
  return buf;
}

GazeSample parse_gaze(const std::string& line) {
  std::istringstream in(line);
  std::string tag, extra;
  double time = 0.0, x = 0.0, y = 0.0;
  if (!(in >> tag >> time >> x >> y) || tag != "GAZE" || (in >> extra)) {
    throw Error(ErrorCode::kParseError, "bad gaze record: " + line);
  }
  if (!std::isfinite(time) || x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0) {
    throw Error(ErrorCode::kParseError, "bad gaze record: " + line);
  }
  return GazeSample{time, x, y};
}

MarkerSender::MarkerSender(const std::string& endpoint,
                           std::chrono::milliseconds budget) {
  ResolvedEndpoint resolved = resolve_endpoint(endpoint);
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) {
    throw Error(ErrorCode::kNetworkError, "cannot create UDP socket");
  }
  set_timeout(fd_, SO_SNDTIMEO, budget);
  if (::connect(fd_, reinterpret_cast<const sockaddr*>(&resolved.addr),
                sizeof resolved.addr) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw Error(ErrorCode::kNetworkError,
                "cannot connect UDP socket to " + endpoint);
  }
}

MarkerSender::~MarkerSender() {
  if (fd_ >= 0) ::close(fd_);
}

MarkerSender::MarkerSender(MarkerSender&& other) noexcept : fd_(other.fd_) {
  other.fd_ = -1;
}

void MarkerSender::send(const MarkerEvent& event) {
  std::string payload = serialize_marker(event);
  ssize_t n = ::send(fd_, payload.data(), payload.size(), 0);
  if (n != static_cast<ssize_t>(payload.size())) {
    throw Error(ErrorCode::kNetworkError,
                std::string("marker send failed: ") + std::strerror(errno));
  }
}

MarkerReceiver::MarkerReceiver(std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) {
    throw Error(ErrorCode::kNetworkError, "cannot create UDP socket");
  }
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(port);
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw Error(ErrorCode::kNetworkError,
                "cannot bind UDP port " + std::to_string(port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

MarkerReceiver::~MarkerReceiver() {
  if (fd_ >= 0) ::close(fd_);
}

MarkerReceiver::MarkerReceiver(MarkerReceiver&& other) noexcept
    : fd_(other.fd_), port_(other.port_), malformed_(other.malformed_) {
  other.fd_ = -1;
}

std::optional<MarkerEvent> MarkerReceiver::poll(
    std::chrono::milliseconds timeout) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() < 0) left = std::chrono::milliseconds(0);
    pollfd pfd{fd_, POLLIN, 0};
    int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc == 0) return std::nullopt;
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kNetworkError,
                  std::string("poll failed: ") + std::strerror(errno));
    }
    char buf[512];
    ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw Error(ErrorCode::kNetworkError,
                  std::string("recv failed: ") + std::strerror(errno));
    }
    try {
      return parse_marker(std::string(buf, static_cast<std::size_t>(n)));
    } catch (const Error&) {
      ++malformed_;
      // keep polling until the deadline
    }
  }
}

GazeIngestStats ingest_gaze(const std::string& endpoint,
                            const std::function<void(const GazeSample&)>& sink,
                            const GazeIngestOptions& options) {
  ResolvedEndpoint resolved = resolve_endpoint(endpoint);
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) {
    throw Error(ErrorCode::kNetworkError, "cannot create TCP socket");
  }
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&resolved.addr),
                sizeof resolved.addr) != 0) {
    ::close(fd);
    throw Error(ErrorCode::kNetworkError,
                "cannot connect to gaze source " + endpoint);
  }
  set_timeout(fd, SO_RCVTIMEO, options.idle_timeout);

  GazeIngestStats stats;
  std::string pending;
  char buf[1024];
  for (;;) {
    ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    if (n == 0) break;  // end of stream
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) {
        stats.timed_out = true;
        break;
      }
      ::close(fd);
      throw Error(ErrorCode::kNetworkError,
                  std::string("gaze recv failed: ") + std::strerror(errno));
    }
    pending.append(buf, static_cast<std::size_t>(n));
    std::size_t eol;
    while ((eol = pending.find('\n')) != std::string::npos) {
      std::string line = pending.substr(0, eol);
      pending.erase(0, eol + 1);
      if (line.empty()) continue;
      try {
        GazeSample sample = parse_gaze(line);
        sink(sample);
        stats.received++;
        if (options.max_samples != 0 &&
            stats.received >= options.max_samples) {
          ::close(fd);
          return stats;
        }
      } catch (const Error&) {
        stats.malformed++;
      }
    }
  }
  ::close(fd);
  return stats;
}

void SessionLog::add(const MarkerEvent& event) {
  if (event.id <= last_marker_id_) {
    ++markers_dropped_;
    return;
  }
  if (last_marker_id_ >= 0 && event.id != last_marker_id_ + 1) {
    ++marker_gaps_;
  }
  last_marker_id_ = event.id;
  entries_.push_back(
      {Entry::Source::kMarker, event.time, event, {}, next_arrival_++});
}

void SessionLog::add(const GazeSample& sample) {
  entries_.push_back(
      {Entry::Source::kGaze, sample.time, {}, sample, next_arrival_++});
}

RegisterLog session_to_register(const SessionLog& log, const Timebase& tb) {
  validate(tb);
  std::vector<SessionLog::Entry> sorted = log.entries();
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SessionLog::Entry& a, const SessionLog::Entry& b) {
                     if (a.time != b.time) return a.time < b.time;
                     return a.arrival < b.arrival;
                   });

  RegisterLog out;
  out.timebase = tb;
  out.set_header("register-log", "v1");
  out.set_header("fps", detail::format_seconds(tb.video_fps));
  out.set_header("source", "capture-session");

  long long prev_us = std::numeric_limits<long long>::min();
  for (const auto& entry : sorted) {
    RegisterRow row;
    long long us = std::llround(entry.time * 1e6);
    if (us <= prev_us) us = prev_us + 1;  // keep 6-decimal times strict
    prev_us = us;
    row.time = static_cast<double>(us) / 1e6;
    if (entry.source == SessionLog::Entry::Source::kMarker) {
      row.kind = entry.marker.label.rfind("sync", 0) == 0 ? RowKind::kSyncMark
                                                          : RowKind::kCutMark;
      row.label = entry.marker.label;
    } else {
      row.kind = RowKind::kTick;
      char buf[48];
      std::snprintf(buf, sizeof buf, "gaze:%.3f,%.3f", entry.gaze.x,
                    entry.gaze.y);
      row.label = buf;
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

void finalize_session(const SessionLog& log, const std::string& path,
                      const Timebase& tb) {
  write_register(session_to_register(log, tb), path);
}

SessionLog run_capture_session(const CaptureSessionOptions& options) {
  struct Incoming {
    bool is_marker;
    MarkerEvent marker;
    GazeSample gaze;
  };
  std::deque<Incoming> queue;
  std::mutex mutex;
  std::condition_variable cv;
  std::atomic<bool> stop{false};

  MarkerReceiver receiver(options.marker_port);
  if (options.on_listening) options.on_listening(receiver.port());

  std::thread marker_thread([&] {
    try {
      while (!stop.load()) {
        auto event = receiver.poll(std::chrono::milliseconds(50));
        if (!event) continue;
        {
          std::lock_guard<std::mutex> lock(mutex);
          queue.push_back({true, *event, {}});
        }
        cv.notify_one();
      }
    } catch (const Error&) {
      // a dead receive socket ends the marker stream, not the process
    }
  });

  std::thread gaze_thread;
  std::atomic<bool> gaze_done{options.gaze_endpoint.empty()};
  if (!options.gaze_endpoint.empty()) {
    gaze_thread = std::thread([&] {
      try {
        GazeIngestOptions gopt;
        gopt.idle_timeout = options.idle_timeout;
        ingest_gaze(
            options.gaze_endpoint,
            [&](const GazeSample& sample) {
              {
                std::lock_guard<std::mutex> lock(mutex);
                queue.push_back({false, {}, sample});
              }
              cv.notify_one();
            },
            gopt);
      } catch (const Error&) {
        // a dead gaze source ends that stream, not the session
      }
      gaze_done.store(true);
      cv.notify_one();
    });
  }

  // Single writer: only this thread touches the SessionLog.
  SessionLog log;
  std::size_t marker_count = 0;
  auto session_start = std::chrono::steady_clock::now();
  auto last_event = session_start;
  for (;;) {
    std::unique_lock<std::mutex> lock(mutex);
    cv.wait_for(lock, std::chrono::milliseconds(50),
                [&] { return !queue.empty(); });
    while (!queue.empty()) {
      Incoming item = std::move(queue.front());
      queue.pop_front();
      lock.unlock();
      if (item.is_marker) {
        log.add(item.marker);
        ++marker_count;
      } else {
        log.add(item.gaze);
      }
      last_event = std::chrono::steady_clock::now();
      lock.lock();
    }
    lock.unlock();

    auto now = std::chrono::steady_clock::now();
    if (options.max_markers != 0 && marker_count >= options.max_markers &&
        gaze_done.load()) {
      break;
    }
    if (options.max_duration.count() > 0 &&
        now - session_start >= options.max_duration) {
      break;
    }
    if (options.idle_timeout.count() > 0 &&
        now - last_event >= options.idle_timeout) {
      break;
    }
  }

  stop.store(true);
  marker_thread.join();
  if (gaze_thread.joinable()) gaze_thread.join();
  return log;
}

}  // namespace avsync
