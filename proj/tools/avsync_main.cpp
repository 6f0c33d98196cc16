// avsync: playback-synchronization toolkit CLI.
//
// The three protocol blocks map onto subcommands: check-encoding (block 1),
// compensate-audio (block 2), compensate-log (block 3), with simulate,
// analyze-fluency, analyze-register, capture-session and serve-markers
// around them. All artifacts are plain files.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "avsync/av_offset.hpp"
#include "avsync/encoding_check.hpp"
#include "avsync/fluency.hpp"
#include "avsync/marker_transport.hpp"
#include "avsync/playback_sim.hpp"
#include "avsync/register_log.hpp"
#include "avsync/timebase.hpp"

using namespace avsync;
using nlohmann::json;

namespace {

// Exit codes, also documented in the README:
//   0 clean verdict   1 marginal verdict        2 failed verdict
//   3 bad input       4 I/O failure             5 network failure
//   6 protocol order violated (see compensate-log)
constexpr int kExitOk = 0;
constexpr int kExitMarginal = 1;
constexpr int kExitVerdictFailed = 2;
constexpr int kExitBadInput = 3;
constexpr int kExitIo = 4;
constexpr int kExitNetwork = 5;
constexpr int kExitOrdering = 6;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kNonConstantOffset:
    case ErrorCode::kNotConverged:
      return kExitVerdictFailed;
    case ErrorCode::kIoError:
      return kExitIo;
    case ErrorCode::kNetworkError:
      return kExitNetwork;
    default:
      return kExitBadInput;
  }
}

struct GlobalOptions {
  double fps = 25.0;
  double camera_fps = 50.0;
  double tolerance_frames = 1.0;
  std::uint64_t seed = 1;
  std::string report = "text";

  Timebase timebase() const { return Timebase{fps, camera_fps}; }
};

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

int cmd_simulate(const GlobalOptions& global, const SimConfig& cfg_in,
                 const std::string& out_dir, bool emit_audio) {
  SimConfig cfg = cfg_in;
  cfg.timebase = global.timebase();
  cfg.rng_seed = global.seed;
  SimOutput out = run_simulation(cfg);

  std::filesystem::create_directories(out_dir);
  write_register(out.register_log, join_path(out_dir, "register.txt"));
  write_captures(out.captures, join_path(out_dir, "captures.jsonl"));

  std::vector<OnsetPair> pairs;
  for (std::size_t i = 0; i < out.video_onsets.size(); ++i) {
    pairs.push_back({out.video_onsets[i], out.audio_onsets[i],
                     "cut_" + std::to_string(i)});
  }
  write_onsets(pairs, join_path(out_dir, "onsets.csv"));

  if (emit_audio) {
    PcmAudio track;
    track.sample_rate = 48000;
    track.channels = 2;
    track.samples.assign(
        static_cast<std::size_t>((cfg.clip_duration + 1.0) * 48000) * 2, 0);
    for (double onset : out.audio_onsets) {
      auto frame = static_cast<std::size_t>(std::llround(onset * 48000));
      if ((frame + 1) * 2 <= track.samples.size()) {
        track.samples[frame * 2] = 20000;
        track.samples[frame * 2 + 1] = 20000;
      }
    }
    write_wav(track, join_path(out_dir, "audio.wav"));
  }

  std::printf("simulated %.3f s clip: %zu register rows, %zu captures, "
              "audio delay %.3f frames\n",
              cfg.clip_duration, out.register_log.rows.size(),
              out.captures.size(), out.audio_delay_frames);
  std::printf("wrote %s, %s, %s%s\n",
              join_path(out_dir, "register.txt").c_str(),
              join_path(out_dir, "captures.jsonl").c_str(),
              join_path(out_dir, "onsets.csv").c_str(),
              emit_audio ? (", " + join_path(out_dir, "audio.wav")).c_str()
                         : "");
  return kExitOk;
}

int cmd_check_encoding(const GlobalOptions& global, const std::string& path) {
  EncodingProfile profile = read_profile(path);
  ValidationReport report = validate_profile(profile);
  if (global.report == "json") {
    std::cout << validation_report_json(report);
  } else {
    std::cout << validation_report_text(report);
  }
  switch (report.verdict) {
    case EncodingVerdict::kOk: return kExitOk;
    case EncodingVerdict::kMarginal: return kExitMarginal;
    case EncodingVerdict::kReject: return kExitVerdictFailed;
  }
  return kExitVerdictFailed;
}

int cmd_analyze_fluency(const GlobalOptions& global, const std::string& path,
                        int expected_frames) {
  CameraObservationSequence obs =
      parse_observations(path, global.timebase());
  if (expected_frames <= 0) {
    double ratio = global.camera_fps / global.fps;
    expected_frames = static_cast<int>(std::llround(
        static_cast<double>(obs.observations.size()) / ratio));
  }
  FluencyReport report = analyze_fluency(obs, expected_frames);
  if (global.report == "json") {
    std::cout << fluency_report_json(report);
  } else {
    std::cout << fluency_report_text(report);
  }
  return report.verdict == FluencyVerdict::kFluent ? kExitOk
                                                   : kExitVerdictFailed;
}

int cmd_analyze_register(const GlobalOptions& global, const std::string& path,
                         const std::string& captures_path) {
  RegisterLog log = parse_register(path, global.timebase());
  DeltaAnalysis deltas = analyze_deltas(log);

  std::optional<CaptureDelayEstimate> capture_delay;
  if (!captures_path.empty()) {
    capture_delay = estimate_capture_delay(log, read_captures(captures_path));
  }

  if (global.report == "json") {
    json j;
    j["schema"] = "avsync.register.v1";
    j["rows"] = log.rows.size();
    j["baseline_frames"] = deltas.baseline_frames;
    j["stalls"] = json::array();
    for (const auto& s : deltas.stall_rows) {
      j["stalls"].push_back({{"row_index", s.row_index},
                             {"delta_frames", s.delta_frames},
                             {"excess_frames", s.excess_frames}});
    }
    if (capture_delay) {
      json cd;
      cd["fractional_frames"] = capture_delay->fractional_frames;
      cd["truncated_frames"] = capture_delay->truncated_frames;
      cd["distribution"] = json::object();
      for (const auto& [lag, pct] : capture_delay->distribution) {
        cd["distribution"][std::to_string(lag)] = pct;
      }
      j["capture_delay"] = cd;
    }
    std::cout << j.dump(2) << "\n";
  } else {
    std::printf("rows: %zu\n", log.rows.size());
    std::printf("baseline tick: %.6f frames\n", deltas.baseline_frames);
    std::printf("stalls: %zu\n", deltas.stall_rows.size());
    for (const auto& s : deltas.stall_rows) {
      std::printf("  row %zu at %.6f s: delta %.6f frames, excess %.6f\n",
                  s.row_index, log.rows[s.row_index].time, s.delta_frames,
                  s.excess_frames);
    }
    if (capture_delay) {
      std::printf("capture delay: %.3f frames fractional, %d truncated\n",
                  capture_delay->fractional_frames,
                  capture_delay->truncated_frames);
      for (const auto& [lag, pct] : capture_delay->distribution) {
        std::printf("  %d frames: %.1f%%\n", lag, pct);
      }
    }
  }
  return kExitOk;
}

int cmd_compensate_audio(const GlobalOptions& global,
                         const std::string& onsets_path,
                         const std::string& audio_path,
                         const std::string& out_path,
                         const std::string& plan_path,
                         const std::string& register_path) {
  std::vector<OnsetPair> pairs = read_onsets(onsets_path);
  OffsetEstimate est = estimate_offset(pairs, global.timebase());
  std::printf("offset: %.4f frames (spread %.4f)\n", est.offset_frames,
              est.spread_frames);
  if (!est.is_constant) {
    std::fprintf(stderr,
                 "NON_CONSTANT_OFFSET: spread %.4f frames exceeds 1 frame\n",
                 est.spread_frames);
    return kExitVerdictFailed;
  }
  CompensationPlan plan = build_advance_plan(est);
  PcmAudio audio = read_wav(audio_path);
  PcmAudio fixed =
      advance_audio(audio, plan.audio_advance_frames, global.timebase());
  write_wav(fixed, out_path);
  write_plan(plan, plan_path);

  if (!register_path.empty()) {
    RegisterLog log = parse_register(register_path, global.timebase());
    log.set_header("audio", "compensated");
    write_register(log, register_path);
  }
  std::printf("advanced audio by %d frames; wrote %s and %s\n",
              plan.audio_advance_frames, out_path.c_str(), plan_path.c_str());
  return kExitOk;
}

int cmd_compensate_log(const GlobalOptions& global,
                       const std::string& register_path,
                       const std::string& captures_path,
                       const std::string& out_path,
                       const std::string& plan_path, bool force) {
  RegisterLog log = parse_register(register_path, global.timebase());

  // Block 2 before block 3: audio compensation is baked into the source
  // video, so a log recorded against uncompensated audio cannot be fixed up
  // afterwards into a synchronized session.
  if (!force && log.header_value("audio") == std::string("uncompensated")) {
    std::fprintf(stderr,
                 "register header declares an uncompensated audio plan; "
                 "run compensate-audio first or pass --force\n");
    return kExitOrdering;
  }

  std::vector<CaptureRecord> captures = read_captures(captures_path);
  std::vector<CompensationPlan> plans;
  for (const auto& cap : captures) {
    if (cap.label.rfind("sync", 0) != 0) continue;
    plans.push_back(calibrate_from_sync_mark(log, cap));
  }
  if (plans.empty()) {
    throw Error(ErrorCode::kNoSyncMark,
                "no sync capture found in " + captures_path);
  }
  if (plans.size() > 1) {
    double disagreement = std::fabs(plans[0].register_shift_frames -
                                    plans[1].register_shift_frames);
    std::printf("sync marks agree within %.4f frames\n", disagreement);
    if (disagreement > global.tolerance_frames) {
      std::fprintf(stderr,
                   "sync marks disagree by %.4f frames (> %.2f); using the "
                   "first\n",
                   disagreement, global.tolerance_frames);
    }
  }
  CompensationPlan plan = plans.front();

  RegisterLog fixed = compensate_register(log, plan);
  if (!fixed.rows.empty() && log.rows.front().time >= 0.0 &&
      fixed.rows.front().time < 0.0) {
    std::fprintf(stderr,
                 "warning: compensation moved the first row before 0 "
                 "(pre-roll rows are legal)\n");
  }
  write_register(fixed, out_path);
  write_plan(plan, plan_path);
  std::printf("register shift: %.4f frames; wrote %s and %s\n",
              plan.register_shift_frames, out_path.c_str(), plan_path.c_str());
  return kExitOk;
}

int cmd_capture_session(const std::string& out_path,
                        CaptureSessionOptions options, const Timebase& tb) {
  options.on_listening = [](std::uint16_t port) {
    std::printf("listening for markers on udp port %u\n", port);
    std::fflush(stdout);
  };
  SessionLog log = run_capture_session(options);
  finalize_session(log, out_path, tb);
  std::printf("captured %zu entries (%zu marker gaps, %zu stale drops); "
              "wrote %s\n",
              log.entries().size(), log.marker_gap_count(),
              log.markers_dropped(), out_path.c_str());
  return kExitOk;
}

int cmd_serve_markers(const GlobalOptions& global,
                      const std::string& register_path,
                      const std::string& dest, int interval_ms) {
  RegisterLog log = parse_register(register_path, global.timebase());
  MarkerSender sender(dest);
  std::int64_t id = 0;
  for (const auto& row : log.rows) {
    if (row.kind == RowKind::kTick) continue;
    MarkerEvent event{id++, row.time,
                      row.label.empty() ? "mark" : row.label};
    sender.send(event);
    if (interval_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(interval_ms));
    }
  }
  std::printf("sent %lld markers to %s\n", static_cast<long long>(id),
              dest.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"audio-visual stimulus synchronization toolkit"};
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--fps", global.fps, "video frames per second")
      ->capture_default_str();
  app.add_option("--camera-fps", global.camera_fps,
                 "observation camera frames per second")
      ->capture_default_str();
  app.add_option("--tolerance-frames", global.tolerance_frames,
                 "agreement tolerance in frames")
      ->capture_default_str();
  app.add_option("--seed", global.seed, "rng seed")->capture_default_str();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run the playback simulator");
  SimConfig sim_cfg;
  std::string sim_out_dir = ".";
  bool emit_audio = false;
  std::vector<double> delay_range;
  simulate->add_option("--duration", sim_cfg.clip_duration, "clip seconds")
      ->capture_default_str();
  simulate->add_option("--cut", sim_cfg.cut_times, "cut time (repeatable)");
  simulate->add_option("--sync-mark", sim_cfg.sync_mark_times,
                       "sync mark time (repeatable)");
  simulate->add_option("--video-start-delay", sim_cfg.video_start_delay,
                       "timer pre-roll seconds")
      ->capture_default_str();
  simulate->add_option("--audio-delay-frames", sim_cfg.audio_delay_frames,
                       "constant audio lag in frames")
      ->capture_default_str();
  simulate
      ->add_option("--audio-delay-range", delay_range,
                   "draw the audio lag from LO HI per run")
      ->expected(2);
  simulate->add_option("--tick-period", sim_cfg.tick_period, "tick seconds")
      ->capture_default_str();
  simulate->add_option("--tick-jitter", sim_cfg.tick_jitter,
                       "uniform jitter half-width")
      ->capture_default_str();
  simulate->add_option("--screenshot-stall", sim_cfg.screenshot_stall,
                       "excess tick length per screenshot")
      ->capture_default_str();
  simulate->add_option("--out-dir", sim_out_dir, "output directory")
      ->capture_default_str();
  simulate->add_flag("--emit-audio", emit_audio,
                     "also write a click-track audio.wav");

  // check-encoding
  auto* check = app.add_subcommand("check-encoding",
                                   "validate an encoding profile");
  std::string profile_path;
  check->add_option("profile", profile_path, "profile JSON")->required();
  check->add_option("--report", global.report, "report format: text|json");

  // analyze-fluency
  auto* fluency = app.add_subcommand("analyze-fluency",
                                     "analyze a counter transcription");
  std::string obs_path;
  int expected_frames = 0;
  fluency->add_option("observations", obs_path, "observation file")->required();
  fluency->add_option("--expected-frames", expected_frames,
                      "expected video frame count (default: derived)");
  fluency->add_option("--report", global.report, "report format: text|json");

  // analyze-register
  auto* analyze = app.add_subcommand("analyze-register",
                                     "delta and capture-delay analysis");
  std::string register_path, captures_path;
  analyze->add_option("register", register_path, "register log")->required();
  analyze->add_option("--captures", captures_path, "capture manifest JSONL");
  analyze->add_option("--report", global.report, "report format: text|json");

  // compensate-audio
  auto* comp_audio = app.add_subcommand(
      "compensate-audio", "advance the soundtrack by the measured offset");
  std::string onsets_path, audio_in, audio_out = "compensated.wav",
                           plan_out = "plan.json", linked_register;
  comp_audio->add_option("onsets", onsets_path, "onset pair CSV")->required();
  comp_audio->add_option("audio", audio_in, "source WAV")->required();
  comp_audio->add_option("--out", audio_out, "compensated WAV path")
      ->capture_default_str();
  comp_audio->add_option("--plan", plan_out, "plan JSON path")
      ->capture_default_str();
  comp_audio->add_option(
      "--register", linked_register,
      "register log whose header should record the compensation");

  // compensate-log
  auto* comp_log = app.add_subcommand(
      "compensate-log", "shift register times from the sync-mark calibration");
  std::string cl_register, cl_captures, cl_out = "compensated_register.txt",
                           cl_plan = "register_plan.json";
  bool force = false;
  comp_log->add_option("register", cl_register, "register log")->required();
  comp_log->add_option("captures", cl_captures, "capture manifest JSONL")
      ->required();
  comp_log->add_option("--out", cl_out, "compensated register path")
      ->capture_default_str();
  comp_log->add_option("--plan", cl_plan, "plan JSON path")
      ->capture_default_str();
  comp_log->add_flag("--force", force,
                     "run even if the audio plan is uncompensated");

  // capture-session
  auto* capture = app.add_subcommand(
      "capture-session", "receive markers and gaze, write the merged log");
  CaptureSessionOptions session_options;
  std::string session_out = "session.txt";
  int idle_ms = 2000, duration_ms = 0;
  std::uint64_t max_markers = 0;
  capture->add_option("--listen", session_options.marker_port,
                      "udp marker port (0 = ephemeral)");
  capture->add_option("--gaze-src", session_options.gaze_endpoint,
                      "tcp gaze source host:port");
  capture->add_option("--out", session_out, "session register path")
      ->capture_default_str();
  capture->add_option("--idle-timeout-ms", idle_ms,
                      "stop after this long without events")
      ->capture_default_str();
  capture->add_option("--duration-ms", duration_ms, "hard session length");
  capture->add_option("--max-markers", max_markers,
                      "stop after this many markers");

  // serve-markers
  auto* serve = app.add_subcommand(
      "serve-markers", "broadcast a register log's marks over udp");
  std::string sm_register, marker_dest;
  int interval_ms = 0;
  serve->add_option("register", sm_register, "register log")->required();
  serve->add_option("--marker-dest", marker_dest, "udp destination host:port")
      ->required();
  serve->add_option("--interval-ms", interval_ms, "pause between markers");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      if (!delay_range.empty()) {
        sim_cfg.audio_delay_range = {{delay_range[0], delay_range[1]}};
      }
      return cmd_simulate(global, sim_cfg, sim_out_dir, emit_audio);
    }
    if (check->parsed()) return cmd_check_encoding(global, profile_path);
    if (fluency->parsed()) {
      return cmd_analyze_fluency(global, obs_path, expected_frames);
    }
    if (analyze->parsed()) {
      return cmd_analyze_register(global, register_path, captures_path);
    }
    if (comp_audio->parsed()) {
      return cmd_compensate_audio(global, onsets_path, audio_in, audio_out,
                                  plan_out, linked_register);
    }
    if (comp_log->parsed()) {
      return cmd_compensate_log(global, cl_register, cl_captures, cl_out,
                                cl_plan, force);
    }
    if (capture->parsed()) {
      session_options.idle_timeout = std::chrono::milliseconds(idle_ms);
      session_options.max_duration = std::chrono::milliseconds(duration_ms);
      session_options.max_markers = max_markers;
      return cmd_capture_session(session_out, session_options,
                                 global.timebase());
    }
    if (serve->parsed()) {
      return cmd_serve_markers(global, sm_register, marker_dest, interval_ms);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBadInput;
  }
  return kExitBadInput;
}
