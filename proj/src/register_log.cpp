#include "avsync/register_log.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "file_io.hpp"

namespace avsync {
namespace {

using nlohmann::json;

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n == 0) return 0.0;
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

bool parse_kind(const std::string& token, RowKind& out) {
  if (token == "TICK") { out = RowKind::kTick; return true; }
  if (token == "SYNC_MARK") { out = RowKind::kSyncMark; return true; }
  if (token == "CUT_MARK") { out = RowKind::kCutMark; return true; }
  return false;
}

}  // namespace

const char* to_string(RowKind kind) {
  switch (kind) {
    case RowKind::kTick: return "TICK";
    case RowKind::kSyncMark: return "SYNC_MARK";
    case RowKind::kCutMark: return "CUT_MARK";
  }
  return "TICK";
}

std::optional<std::string> RegisterLog::header_value(
    const std::string& key) const {
  for (const auto& [k, v] : header) {
    if (k == key) return v;
  }
  return std::nullopt;
}

void RegisterLog::set_header(const std::string& key, const std::string& value) {
  for (auto& [k, v] : header) {
    if (k == key) { v = value; return; }
  }
  header.emplace_back(key, value);
}

RegisterLog parse_register_text(const std::string& text, const Timebase& tb,
                                const std::string& origin) {
  validate(tb);
  RegisterLog log;
  log.timebase = tb;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool saw_row = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      // `# key value...` lines ahead of the first row form the header; any
      // later `#` line is a plain comment.
      if (saw_row) continue;
      std::istringstream hs(line.substr(1));
      std::string key;
      if (!(hs >> key)) continue;
      std::string rest;
      std::getline(hs, rest);
      if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
      log.header.emplace_back(key, rest);
      continue;
    }

    std::istringstream rs(line);
    std::string time_tok, kind_tok, label_tok, extra;
    rs >> time_tok >> kind_tok;
    if (time_tok.empty() || kind_tok.empty()) {
      throw Error(ErrorCode::kParseError,
                  origin + ":" + std::to_string(line_no) + ": malformed row");
    }
    RegisterRow row;
    try {
      std::size_t pos = 0;
      row.time = std::stod(time_tok, &pos);
      if (pos != time_tok.size()) throw std::invalid_argument(time_tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError,
                  origin + ":" + std::to_string(line_no) + ": bad time '" +
                      time_tok + "'");
    }
    if (!parse_kind(kind_tok, row.kind)) {
      throw Error(ErrorCode::kParseError,
                  origin + ":" + std::to_string(line_no) + ": bad kind '" +
                      kind_tok + "'");
    }
    if (rs >> label_tok) row.label = label_tok;
    if (rs >> extra) {
      throw Error(ErrorCode::kParseError,
                  origin + ":" + std::to_string(line_no) +
                      ": trailing content '" + extra + "'");
    }

    if (!log.rows.empty() && row.time <= log.rows.back().time) {
      throw Error(ErrorCode::kNonMonotonic,
                  origin + ": rows " + std::to_string(log.rows.size()) +
                      " and " + std::to_string(log.rows.size() + 1) +
                      " are out of order (" +
                      detail::format_seconds(log.rows.back().time) + " then " +
                      detail::format_seconds(row.time) + ")");
    }
    log.rows.push_back(std::move(row));
    saw_row = true;
  }

  if (log.rows.empty()) {
    throw Error(ErrorCode::kEmptyLog, origin + ": no rows");
  }
  if (auto fps = log.header_value("fps")) {
    try {
      log.timebase.video_fps = std::stod(*fps);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError, origin + ": bad fps header");
    }
    validate(log.timebase);
  }
  return log;
}

RegisterLog parse_register(const std::string& path, const Timebase& tb) {
  return parse_register_text(detail::read_file(path), tb, path);
}

std::string serialize_register(const RegisterLog& log) {
  std::string out;
  for (const auto& [key, value] : log.header) {
    out += "# " + key;
    if (!value.empty()) out += " " + value;
    out += "\n";
  }
  for (const auto& row : log.rows) {
    out += detail::format_seconds(row.time);
    out += " ";
    out += to_string(row.kind);
    if (!row.label.empty()) {
      out += " ";
      out += row.label;
    }
    out += "\n";
  }
  return out;
}

void write_register(const RegisterLog& log, const std::string& path) {
  detail::atomic_write_file(path, serialize_register(log));
}

DeltaAnalysis analyze_deltas(const RegisterLog& log) {
  if (log.rows.size() < 3) {
    throw Error(ErrorCode::kTooFewRows,
                "delta analysis needs >= 3 rows, got " +
                    std::to_string(log.rows.size()));
  }
  const double fps = log.timebase.video_fps;
  DeltaAnalysis out;
  out.deltas_seconds.reserve(log.rows.size() - 1);
  for (std::size_t i = 0; i + 1 < log.rows.size(); ++i) {
    double ds = log.rows[i + 1].time - log.rows[i].time;
    out.deltas_seconds.push_back(ds);
    out.deltas_frames.push_back(ds * fps);
  }

  // Two passes: the overall median separates stalls out, then the baseline is
  // recomputed over non-stall deltas only.
  double coarse = median(out.deltas_frames);
  std::vector<double> normal;
  for (double df : out.deltas_frames) {
    if (df <= 2.0 * coarse) normal.push_back(df);
  }
  out.baseline_frames = normal.empty() ? coarse : median(normal);

  for (std::size_t i = 0; i < out.deltas_frames.size(); ++i) {
    double df = out.deltas_frames[i];
    if (df > 2.0 * out.baseline_frames) {
      out.stall_rows.push_back({i, df, df - out.baseline_frames});
    }
  }
  return out;
}

namespace {

// The register row a capture hangs off: exact time match first, then the
// nearest mark row within one baseline tick.
std::optional<std::size_t> find_capture_row(const RegisterLog& log,
                                            const CaptureRecord& capture,
                                            double baseline_seconds) {
  std::optional<std::size_t> best;
  double best_dist = baseline_seconds;
  for (std::size_t i = 0; i < log.rows.size(); ++i) {
    const auto& row = log.rows[i];
    double dist = std::fabs(row.time - capture.requested_time);
    if (dist < 1e-9) return i;
    if (row.kind != RowKind::kTick && dist < best_dist) {
      best = i;
      best_dist = dist;
    }
  }
  return best;
}

}  // namespace

CaptureDelayEstimate estimate_capture_delay(
    const RegisterLog& log, const std::vector<CaptureRecord>& captures) {
  if (captures.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no captures given");
  }
  const double fps = log.timebase.video_fps;
  const double t_first = log.rows.front().time;
  const double t_last = log.rows.back().time;
  const double max_counter = std::ceil(t_last * fps);

  DeltaAnalysis deltas = analyze_deltas(log);
  const double baseline_seconds = deltas.baseline_frames / fps;

  CaptureDelayEstimate out;
  std::vector<double> excesses;
  for (const auto& cap : captures) {
    if (cap.requested_time < t_first || cap.requested_time > t_last) {
      throw Error(ErrorCode::kInvalidArgument,
                  "capture '" + cap.label + "' requested at " +
                      detail::format_seconds(cap.requested_time) +
                      " lies outside the log time span");
    }
    if (cap.displayed_counter < 0 || cap.displayed_counter > max_counter) {
      throw Error(ErrorCode::kInvalidArgument,
                  "capture '" + cap.label + "' counter " +
                      std::to_string(cap.displayed_counter) +
                      " outside clip range");
    }
    int lag = cap.displayed_counter -
              static_cast<int>(std::floor(cap.requested_time * fps));
    out.per_capture_lags.push_back(lag);

    auto row = find_capture_row(log, cap, baseline_seconds);
    if (row && *row + 1 < log.rows.size()) {
      double df = (log.rows[*row + 1].time - log.rows[*row].time) * fps;
      excesses.push_back(df - deltas.baseline_frames);
    }
  }

  if (!excesses.empty()) {
    double sum = 0.0;
    for (double e : excesses) sum += e;
    out.fractional_frames = sum / static_cast<double>(excesses.size());
  }
  out.truncated_frames = static_cast<int>(std::floor(out.fractional_frames));

  std::map<int, std::size_t> counts;
  for (int lag : out.per_capture_lags) counts[lag]++;
  for (const auto& [lag, count] : counts) {
    out.distribution[lag] =
        100.0 * static_cast<double>(count) /
        static_cast<double>(out.per_capture_lags.size());
  }
  return out;
}

RegisterLog compensate_register(const RegisterLog& log,
                                const CompensationPlan& plan) {
  if (!std::isfinite(plan.register_shift_frames)) {
    throw Error(ErrorCode::kNonFinite, "register shift must be finite");
  }
  const double shift_seconds =
      frames_to_seconds(FrameDelta{plan.register_shift_frames}, log.timebase);
  RegisterLog out = log;
  for (auto& row : out.rows) row.time += shift_seconds;
  return out;
}

CompensationPlan calibrate_from_sync_mark(const RegisterLog& log,
                                          const CaptureRecord& sync_capture) {
  const double fps = log.timebase.video_fps;
  DeltaAnalysis deltas = analyze_deltas(log);
  const double baseline_seconds = deltas.baseline_frames / fps;

  std::optional<std::size_t> sync_index;
  double best_dist = 2.0 * baseline_seconds;
  for (std::size_t i = 0; i < log.rows.size(); ++i) {
    if (log.rows[i].kind != RowKind::kSyncMark) continue;
    double dist = std::fabs(log.rows[i].time - sync_capture.requested_time);
    if (dist < best_dist) {
      sync_index = i;
      best_dist = dist;
    }
  }
  if (!sync_index) {
    throw Error(ErrorCode::kNoSyncMark,
                "no SYNC_MARK row matches capture at " +
                    detail::format_seconds(sync_capture.requested_time));
  }
  if (*sync_index + 1 >= log.rows.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "SYNC_MARK is the last row; screenshot delay is unmeasurable");
  }

  const RegisterRow& sync_row = log.rows[*sync_index];
  double first_delay =
      sync_row.time * fps - static_cast<double>(sync_capture.displayed_counter);
  double screenshot_delay =
      (log.rows[*sync_index + 1].time - sync_row.time) * fps -
      deltas.baseline_frames;

  CompensationPlan plan;
  plan.register_shift_frames = -(first_delay + screenshot_delay);
  plan.audio_advance_frames = 0;
  std::ostringstream prov;
  prov << "sync_mark";
  if (!sync_row.label.empty()) prov << " " << sync_row.label;
  prov << " @" << detail::format_seconds(sync_row.time)
       << ": first_delay=" << first_delay
       << " screenshot_delay=" << screenshot_delay
       << " baseline=" << deltas.baseline_frames;
  plan.provenance = prov.str();
  return plan;
}

std::string serialize_plan_json(const CompensationPlan& plan) {
  json j;
  j["schema"] = "avsync.plan.v1";
  j["register_shift_frames"] = plan.register_shift_frames;
  j["audio_advance_frames"] = plan.audio_advance_frames;
  j["provenance"] = plan.provenance;
  return j.dump(2) + "\n";
}

CompensationPlan parse_plan_json(const std::string& text) {
  CompensationPlan plan;
  try {
    json j = json::parse(text);
    plan.register_shift_frames = j.at("register_shift_frames").get<double>();
    plan.audio_advance_frames = j.at("audio_advance_frames").get<int>();
    plan.provenance = j.value("provenance", "");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("plan json: ") + e.what());
  }
  if (plan.audio_advance_frames < 0) {
    throw Error(ErrorCode::kInvalidArgument, "audio_advance_frames < 0");
  }
  return plan;
}

void write_plan(const CompensationPlan& plan, const std::string& path) {
  detail::atomic_write_file(path, serialize_plan_json(plan));
}

CompensationPlan read_plan(const std::string& path) {
  return parse_plan_json(detail::read_file(path));
}

}  // namespace avsync
