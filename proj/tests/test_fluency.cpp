#include <doctest.h>

#include <random>
#include <set>

#include "avsync/fluency.hpp"
#include "avsync/playback_sim.hpp"

using namespace avsync;

namespace {

CameraObservationSequence perfect_sequence(int frames) {
  CameraObservationSequence seq;
  for (int f = 0; f < frames; ++f) {
    seq.observations.push_back({f, false});
    seq.observations.push_back({f, false});
  }
  return seq;
}

}  // namespace

TEST_CASE("a perfect two-per-frame sequence is fluent") {
  FluencyReport report = analyze_fluency(perfect_sequence(250), 250);
  CHECK(report.verdict == FluencyVerdict::kFluent);
  CHECK(report.stalls.empty());
  CHECK(report.jumps.empty());
  CHECK(report.double_exposure_count == 0);
  CHECK(report.total_duration_frames == doctest::Approx(250.0));
  CHECK(report.expected_duration_frames == doctest::Approx(250.0));
}

TEST_CASE("a held counter plus a jump is degraded") {
  // counter 100 spans 6 camera frames, then playback continues at 103
  CameraObservationSequence seq;
  for (int f = 0; f < 100; ++f) {
    seq.observations.push_back({f, false});
    seq.observations.push_back({f, false});
  }
  for (int i = 0; i < 6; ++i) seq.observations.push_back({100, false});
  for (int f = 103; f < 250; ++f) {
    seq.observations.push_back({f, false});
    seq.observations.push_back({f, false});
  }

  FluencyReport report = analyze_fluency(seq, 250);
  CHECK(report.verdict == FluencyVerdict::kDegraded);
  REQUIRE(report.stalls.size() == 1);
  CHECK(report.stalls[0].counter_value == 100);
  CHECK(report.stalls[0].held_camera_frames == 6);
  CHECK(report.stalls[0].excess_frames == doctest::Approx(2.0));
  REQUIRE(report.jumps.size() == 1);
  CHECK(report.jumps[0].from_counter == 100);
  CHECK(report.jumps[0].to_counter == 103);
  CHECK(report.jumps[0].skipped_count == 2);
}

TEST_CASE("boundary double exposures alone stay fluent") {
  SimConfig cfg;
  cfg.clip_duration = 10.0;
  CameraObservationSequence seq = inject_fluency_defects(cfg, {}, 0.007);
  FluencyReport report = analyze_fluency(seq, 250);
  CHECK(report.verdict == FluencyVerdict::kFluent);
  CHECK(report.double_exposure_count > 0);
}

TEST_CASE("verdict is invariant under counter start offset") {
  auto shifted = [](int offset) {
    CameraObservationSequence seq;
    for (int f = 0; f < 50; ++f) {
      seq.observations.push_back({f + offset, false});
      seq.observations.push_back({f + offset, false});
    }
    return seq;
  };
  CHECK(analyze_fluency(shifted(0), 50).verdict == FluencyVerdict::kFluent);
  CHECK(analyze_fluency(shifted(1000), 50).verdict == FluencyVerdict::kFluent);
}

TEST_CASE("decreasing counters are corrupt input, not a playback defect") {
  CameraObservationSequence seq;
  seq.observations = {{5, false}, {6, false}, {4, false}};
  try {
    analyze_fluency(seq, 10);
    FAIL("expected CORRUPT_INPUT");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCorruptInput);
  }
}

TEST_CASE("empty observation lists are rejected") {
  CameraObservationSequence seq;
  CHECK_THROWS_AS(analyze_fluency(seq, 10), Error);
}

TEST_CASE("fluency analysis recovers exactly what the simulator injected") {
  SimConfig cfg;
  cfg.clip_duration = 10.0;  // 250 frames
  std::mt19937_64 rng(2024);

  for (int trial = 0; trial < 600; ++trial) {
    std::set<int> used;
    std::vector<FluencyDefect> defects;
    int defect_count = static_cast<int>(rng() % 6);  // 0..5 stalls
    std::uniform_int_distribution<int> frame_dist(0, 240);
    std::uniform_int_distribution<int> hold_dist(1, 3);
    int attempts = 0;
    while (static_cast<int>(defects.size()) < defect_count && attempts++ < 200) {
      int f = frame_dist(rng);
      int h = hold_dist(rng);
      bool clear = true;
      for (int k = f - 4; k <= f + h + 1; ++k) {
        if (used.count(k)) clear = false;
      }
      if (!clear) continue;
      for (int k = f; k <= f + h; ++k) used.insert(k);
      defects.push_back({f, h});
    }

    // alternate between an aligned camera and a random shutter phase
    double phase = (trial % 2 == 0)
                       ? 0.0
                       : std::uniform_real_distribution<double>(0.0, 0.0199)(rng);
    CameraObservationSequence seq = inject_fluency_defects(cfg, defects, phase);
    FluencyReport report = analyze_fluency(seq, 250);

    std::set<int> expected_stalls;
    long long expected_skips = 0;
    for (const auto& d : defects) {
      expected_stalls.insert(d.frame_index);
      expected_skips += d.hold_extra_frames;
    }

    std::set<int> reported_stalls;
    for (const auto& s : report.stalls) reported_stalls.insert(s.counter_value);
    CHECK(reported_stalls == expected_stalls);

    long long reported_skips = 0;
    for (const auto& j : report.jumps) reported_skips += j.skipped_count;
    CHECK(reported_skips == expected_skips);

    CHECK(std::fabs(report.total_duration_frames - 250.0) <= 1.0);
    CHECK((report.verdict == FluencyVerdict::kFluent) == defects.empty());
  }
}

TEST_CASE("observation files parse per the line grammar") {
  CameraObservationSequence seq = parse_observations_text(
      "# transcription of camera footage\n"
      "7: 101\n"
      "8: 101|102\n"
      "9: 102\n",
      Timebase{});
  REQUIRE(seq.observations.size() == 3);
  CHECK(seq.observations[0].counter == 101);
  CHECK(!seq.observations[0].double_exposed);
  CHECK(seq.observations[1].counter == 101);
  CHECK(seq.observations[1].double_exposed);
  CHECK(seq.observations[1].max_value() == 102);
}

TEST_CASE("malformed observation lines carry their line number") {
  SUBCASE("non-adjacent double exposure") {
    try {
      parse_observations_text("8: 101|103\n", Timebase{});
      FAIL("expected PARSE_ERROR");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParseError);
      CHECK(std::string(e.what()).find(":1:") != std::string::npos);
    }
  }
  SUBCASE("missing colon") {
    CHECK_THROWS_AS(parse_observations_text("8 101\n", Timebase{}), Error);
  }
  SUBCASE("non-increasing camera index") {
    CHECK_THROWS_AS(parse_observations_text("8: 101\n8: 102\n", Timebase{}),
                    Error);
  }
  SUBCASE("garbage counter") {
    CHECK_THROWS_AS(parse_observations_text("8: abc\n", Timebase{}), Error);
  }
}

TEST_CASE("serialize and reparse observations") {
  SimConfig cfg;
  cfg.clip_duration = 4.0;
  CameraObservationSequence seq = inject_fluency_defects(cfg, {{30, 1}}, 0.004);
  CameraObservationSequence back =
      parse_observations_text(serialize_observations(seq), cfg.timebase);
  REQUIRE(back.observations.size() == seq.observations.size());
  for (std::size_t i = 0; i < seq.observations.size(); ++i) {
    CHECK(back.observations[i].counter == seq.observations[i].counter);
    CHECK(back.observations[i].double_exposed ==
          seq.observations[i].double_exposed);
  }
}
