#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "avsync/playback_sim.hpp"
#include "avsync/register_log.hpp"

using namespace avsync;

namespace {

// The nine published register timestamps around a screenshot.
const std::vector<double> kTable1Times = {
    5.840649, 5.857210, 5.873774, 5.890343, 5.906908,
    6.039409, 6.055976, 6.074334, 6.090903};

const std::vector<double> kTable1DeltaSeconds = {
    0.016561, 0.016564, 0.016569, 0.016565,
    0.132501, 0.016567, 0.018358, 0.016569};

const std::vector<double> kTable1DeltaFrames = {
    0.414025, 0.414100, 0.414225, 0.414125,
    3.312525, 0.414175, 0.458950, 0.414225};

RegisterLog make_log(const std::vector<double>& times) {
  RegisterLog log;
  for (double t : times) log.rows.push_back({t, RowKind::kTick, ""});
  return log;
}

}  // namespace

TEST_CASE("parse accepts the documented row grammar") {
  RegisterLog log = parse_register_text(
      "# register-log v1\n"
      "# fps 25.000000\n"
      "5.840649 TICK\n"
      "5.906908 CUT_MARK cut_3\n"
      "6.039409 SYNC_MARK sync_0\n",
      Timebase{});
  REQUIRE(log.rows.size() == 3);
  CHECK(log.rows[0].time == doctest::Approx(5.840649));
  CHECK(log.rows[0].kind == RowKind::kTick);
  CHECK(log.rows[0].label.empty());
  CHECK(log.rows[1].kind == RowKind::kCutMark);
  CHECK(log.rows[1].label == "cut_3");
  CHECK(log.rows[2].kind == RowKind::kSyncMark);
  CHECK(log.header_value("fps") == std::string("25.000000"));
  CHECK(log.timebase.video_fps == doctest::Approx(25.0));
}

TEST_CASE("parse rejects the documented error cases") {
  SUBCASE("empty file") {
    try {
      parse_register_text("", Timebase{});
      FAIL("expected EMPTY_LOG");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptyLog);
    }
  }
  SUBCASE("header only") {
    CHECK_THROWS_AS(parse_register_text("# fps 25\n", Timebase{}), Error);
  }
  SUBCASE("rows out of order") {
    try {
      parse_register_text("1.000000 TICK\n0.500000 TICK\n", Timebase{});
      FAIL("expected NON_MONOTONIC");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNonMonotonic);
    }
  }
  SUBCASE("equal times are non-monotonic") {
    CHECK_THROWS_AS(
        parse_register_text("1.000000 TICK\n1.000000 TICK\n", Timebase{}),
        Error);
  }
  SUBCASE("bad kind") {
    CHECK_THROWS_AS(parse_register_text("1.000000 BLIP\n", Timebase{}), Error);
  }
  SUBCASE("bad time") {
    CHECK_THROWS_AS(parse_register_text("abc TICK\n", Timebase{}), Error);
  }
  SUBCASE("trailing junk") {
    CHECK_THROWS_AS(
        parse_register_text("1.000000 TICK label extra\n", Timebase{}), Error);
  }
}

TEST_CASE("serialization is canonical and round trips") {
  RegisterLog log;
  log.set_header("register-log", "v1");
  log.set_header("fps", "25.000000");
  log.rows.push_back({-0.251793, RowKind::kTick, ""});
  log.rows.push_back({0.014772, RowKind::kTick, ""});
  log.rows.push_back({5.906908, RowKind::kCutMark, "cut_0"});

  const std::string expected =
      "# register-log v1\n"
      "# fps 25.000000\n"
      "-0.251793 TICK\n"
      "0.014772 TICK\n"
      "5.906908 CUT_MARK cut_0\n";
  CHECK(serialize_register(log) == expected);

  RegisterLog back = parse_register_text(expected, Timebase{});
  CHECK(serialize_register(back) == expected);
}

TEST_CASE("analyze_deltas reproduces both derived columns of the published excerpt") {
  RegisterLog log = make_log(kTable1Times);
  DeltaAnalysis analysis = analyze_deltas(log);

  REQUIRE(analysis.deltas_seconds.size() == kTable1DeltaSeconds.size());
  for (std::size_t i = 0; i < kTable1DeltaSeconds.size(); ++i) {
    CHECK(std::fabs(analysis.deltas_seconds[i] - kTable1DeltaSeconds[i]) <= 1e-6);
    CHECK(std::fabs(analysis.deltas_frames[i] - kTable1DeltaFrames[i]) <= 1e-6);
  }

  REQUIRE(analysis.stall_rows.size() == 1);
  CHECK(analysis.stall_rows[0].row_index == 4);
  CHECK(analysis.stall_rows[0].delta_frames == doctest::Approx(3.312525).epsilon(1e-9));
  CHECK(std::fabs(analysis.stall_rows[0].excess_frames - 2.89) < 0.01);
  CHECK(analysis.baseline_frames == doctest::Approx(0.414175).epsilon(1e-9));
}

TEST_CASE("analyze_deltas on a constant-delta log finds no stalls") {
  std::vector<double> times;
  for (int i = 0; i < 50; ++i) times.push_back(i * 0.016565);
  DeltaAnalysis analysis = analyze_deltas(make_log(times));
  CHECK(analysis.stall_rows.empty());
  CHECK(analysis.baseline_frames == doctest::Approx(0.016565 * 25.0));
}

TEST_CASE("analyze_deltas needs at least three rows") {
  try {
    analyze_deltas(make_log({0.0, 0.016565}));
    FAIL("expected TOO_FEW_ROWS");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTooFewRows);
  }
}

TEST_CASE("analyze_deltas recovers the injected stall from simulator output") {
  SimConfig cfg;
  cfg.clip_duration = 8.0;
  cfg.cut_times = {5.92};
  cfg.rng_seed = 11;
  SimOutput out = run_simulation(cfg);
  DeltaAnalysis analysis = analyze_deltas(out.register_log);
  REQUIRE(analysis.stall_rows.size() == 1);
  double expected_excess = cfg.screenshot_stall * cfg.timebase.video_fps;
  CHECK(std::fabs(analysis.stall_rows[0].excess_frames - expected_excess) <= 0.05);
}

TEST_CASE("estimate_capture_delay on the published stall") {
  RegisterLog log = make_log(kTable1Times);
  log.rows[4].kind = RowKind::kCutMark;
  log.rows[4].label = "cut_0";

  CaptureRecord cap;
  cap.requested_time = 5.906908;
  // floor(5.906908 * 25) = 147; the capture landed 2 frames late
  cap.displayed_counter = 149;
  cap.label = "cut_0";

  CaptureDelayEstimate est = estimate_capture_delay(log, {cap});
  CHECK(std::fabs(est.fractional_frames - 2.898) < 0.01);
  CHECK(est.truncated_frames == 2);
  REQUIRE(est.per_capture_lags.size() == 1);
  CHECK(est.per_capture_lags[0] == 2);
}

TEST_CASE("estimate_capture_delay reproduces the published lag distribution") {
  // 79 captures: 55 delayed 3 frames, 14 delayed 4, 10 delayed 2.
  std::vector<double> times;
  for (int i = 0; i < 200; ++i) times.push_back(i * 0.016565);
  RegisterLog log = make_log(times);

  std::vector<CaptureRecord> captures;
  std::vector<int> lags;
  for (int i = 0; i < 55; ++i) lags.push_back(3);
  for (int i = 0; i < 14; ++i) lags.push_back(4);
  for (int i = 0; i < 10; ++i) lags.push_back(2);
  for (std::size_t i = 0; i < lags.size(); ++i) {
    double t = 0.1 + static_cast<double>(i) * 0.02;
    captures.push_back(
        {t, static_cast<int>(std::floor(t * 25.0)) + lags[i], "c"});
  }

  CaptureDelayEstimate est = estimate_capture_delay(log, captures);
  REQUIRE(est.per_capture_lags.size() == 79);
  CHECK(std::fabs(est.distribution.at(3) - 69.6) <= 0.1);
  CHECK(std::fabs(est.distribution.at(4) - 17.7) <= 0.1);
  CHECK(std::fabs(est.distribution.at(2) - 12.7) <= 0.1);

  double total = 0.0;
  for (const auto& [lag, pct] : est.distribution) total += pct;
  CHECK(std::fabs(total - 100.0) <= 0.1);
}

TEST_CASE("estimate_capture_delay trivial and error cases") {
  std::vector<double> times;
  for (int i = 0; i < 10; ++i) times.push_back(i * 0.016565);
  RegisterLog log = make_log(times);

  SUBCASE("single capture, zero stall") {
    CaptureRecord cap{times[4], static_cast<int>(std::floor(times[4] * 25.0)),
                      "c"};
    CaptureDelayEstimate est = estimate_capture_delay(log, {cap});
    CHECK(est.per_capture_lags[0] == 0);
    CHECK(est.distribution.at(0) == doctest::Approx(100.0));
    CHECK(est.truncated_frames == 0);
  }
  SUBCASE("no captures") {
    CHECK_THROWS_AS(estimate_capture_delay(log, {}), Error);
  }
  SUBCASE("capture outside the log span") {
    CHECK_THROWS_AS(estimate_capture_delay(log, {{99.0, 5, "c"}}), Error);
  }
  SUBCASE("counter outside the clip range") {
    CHECK_THROWS_AS(estimate_capture_delay(log, {{times[4], -1, "c"}}), Error);
    CHECK_THROWS_AS(estimate_capture_delay(log, {{times[4], 100000, "c"}}),
                    Error);
  }
}

TEST_CASE("compensate_register shifts times and nothing else") {
  RegisterLog log = make_log(kTable1Times);
  log.rows[4].kind = RowKind::kCutMark;
  log.rows[4].label = "cut_0";

  SUBCASE("shift 0 is the identity, byte for byte") {
    RegisterLog same = compensate_register(log, CompensationPlan{});
    CHECK(serialize_register(same) == serialize_register(log));
  }
  SUBCASE("shift -3 frames moves the first row by -0.12 s") {
    CompensationPlan plan;
    plan.register_shift_frames = -3.0;
    RegisterLog shifted = compensate_register(log, plan);
    CHECK(shifted.rows[0].time == doctest::Approx(5.720649).epsilon(1e-12));
    CHECK(shifted.rows[4].kind == RowKind::kCutMark);
    CHECK(shifted.rows[4].label == "cut_0");
  }
  SUBCASE("compensate then inverse-compensate restores times") {
    CompensationPlan fwd, back;
    fwd.register_shift_frames = 2.898;
    back.register_shift_frames = -2.898;
    RegisterLog round = compensate_register(compensate_register(log, fwd), back);
    for (std::size_t i = 0; i < log.rows.size(); ++i) {
      CHECK(std::fabs(round.rows[i].time - log.rows[i].time) <= 1e-9);
    }
  }
}

TEST_CASE("calibrate_from_sync_mark recovers the timer-to-video delay") {
  SUBCASE("simulated run with a sync mark") {
    SimConfig cfg;
    cfg.clip_duration = 6.0;
    cfg.sync_mark_times = {0.2};
    cfg.cut_times = {3.0};
    cfg.rng_seed = 5;
    SimOutput out = run_simulation(cfg);
    REQUIRE(out.captures.size() == 2);
    const CaptureRecord& sync_cap = out.captures[0];
    CHECK(sync_cap.label == "sync_0");

    CompensationPlan plan = calibrate_from_sync_mark(out.register_log, sync_cap);
    // the simulated timer is exactly pre-wound, so the true shift is zero
    CHECK(std::fabs(plan.register_shift_frames) <= 1.0);
  }
  SUBCASE("two sync marks agree within a frame") {
    SimConfig cfg;
    cfg.clip_duration = 6.0;
    cfg.sync_mark_times = {0.2, 5.6};
    cfg.rng_seed = 21;
    SimOutput out = run_simulation(cfg);
    REQUIRE(out.captures.size() == 2);
    CompensationPlan first =
        calibrate_from_sync_mark(out.register_log, out.captures[0]);
    CompensationPlan second =
        calibrate_from_sync_mark(out.register_log, out.captures[1]);
    CHECK(std::fabs(first.register_shift_frames -
                    second.register_shift_frames) <= 1.0);
  }
  SUBCASE("no sync mark") {
    RegisterLog log = make_log(kTable1Times);
    try {
      calibrate_from_sync_mark(log, {5.906908, 147, "sync_0"});
      FAIL("expected NO_SYNC_MARK");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNoSyncMark);
    }
  }
}

TEST_CASE("estimate then compensate keeps cut marks within a frame") {
  std::mt19937_64 seeds(99);
  for (int trial = 0; trial < 20; ++trial) {
    SimConfig cfg;
    cfg.clip_duration = 6.0;
    cfg.video_start_delay = 0.1 + 0.3 * (trial / 19.0);
    cfg.sync_mark_times = {0.2};
    cfg.cut_times = {1.0, 2.48, 4.0};
    cfg.rng_seed = seeds();
    SimOutput out = run_simulation(cfg);

    CompensationPlan plan =
        calibrate_from_sync_mark(out.register_log, out.captures[0]);
    RegisterLog fixed = compensate_register(out.register_log, plan);

    std::size_t cut_index = 0;
    for (const auto& row : fixed.rows) {
      if (row.kind != RowKind::kCutMark) continue;
      double onset = out.video_onsets[cut_index++];
      CHECK(within_tolerance(row.time, onset, Tolerance{1.0}, cfg.timebase));
    }
    CHECK(cut_index == cfg.cut_times.size());
  }
}

TEST_CASE("register file write is atomic and parseable") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "avsync_reg_test";
  fs::create_directories(dir);
  fs::path path = dir / "register.txt";

  RegisterLog log = make_log(kTable1Times);
  log.set_header("register-log", "v1");
  log.set_header("fps", "25.000000");
  write_register(log, path.string());
  CHECK(!fs::exists(path.string() + ".tmp"));

  RegisterLog back = parse_register(path.string());
  CHECK(serialize_register(back) == serialize_register(log));
  fs::remove_all(dir);
}

TEST_CASE("compensation plan JSON round trips") {
  CompensationPlan plan;
  plan.register_shift_frames = -2.898;
  plan.audio_advance_frames = 5;
  plan.provenance = "sync_mark sync_0 @0.207500";
  CompensationPlan back = parse_plan_json(serialize_plan_json(plan));
  CHECK(back.register_shift_frames == doctest::Approx(plan.register_shift_frames));
  CHECK(back.audio_advance_frames == plan.audio_advance_frames);
  CHECK(back.provenance == plan.provenance);
}
