#include <doctest.h>

#include <cmath>

#include "avsync/encoding_check.hpp"
#include "avsync/error.hpp"

using namespace avsync;

TEST_CASE("the reference profile validates OK") {
  ValidationReport report = validate_profile(reference_profile());
  CHECK(report.verdict == EncodingVerdict::kOk);
  CHECK(report.findings.empty());
}

TEST_CASE("oversized resolution is marginal with a resolution finding") {
  EncodingProfile p = reference_profile();
  p.width = 1280;
  p.height = 720;
  p.video_bitrate_max = 7000.0;
  ValidationReport report = validate_profile(p);
  CHECK(report.verdict == EncodingVerdict::kMarginal);
  REQUIRE(report.findings.size() == 1);
  CHECK(report.findings[0].rule == "resolution");
}

TEST_CASE("bitrate above the native ceiling is rejected") {
  EncodingProfile p = reference_profile();
  p.video_bitrate_max = 9000.0;
  CHECK(validate_profile(p).verdict == EncodingVerdict::kReject);

  SUBCASE("the boundary itself is accepted") {
    p.video_bitrate_max = 8356.0;
    CHECK(validate_profile(p).verdict == EncodingVerdict::kOk);
    p.video_bitrate_max = 8357.0;
    CHECK(validate_profile(p).verdict == EncodingVerdict::kReject);
  }
  SUBCASE("rejection is monotone in bitrate") {
    EncodingVerdict prev = EncodingVerdict::kOk;
    for (double b = 1000.0; b <= 12000.0; b += 250.0) {
      p.video_bitrate_max = b;
      EncodingVerdict v = validate_profile(p).verdict;
      if (prev == EncodingVerdict::kReject) {
        CHECK(v == EncodingVerdict::kReject);
      }
      prev = v;
    }
  }
}

TEST_CASE("encoder options and frame rate findings") {
  EncodingProfile p = reference_profile();
  SUBCASE("CBR") {
    p.bitrate_mode = BitrateMode::kCbr;
    ValidationReport report = validate_profile(p);
    CHECK(report.verdict == EncodingVerdict::kMarginal);
    CHECK(report.findings[0].rule == "encoder_options");
  }
  SUBCASE("single pass") {
    p.two_pass = false;
    CHECK(validate_profile(p).verdict == EncodingVerdict::kMarginal);
  }
  SUBCASE("non-25 fps source") {
    p.fps = 30.0;
    ValidationReport report = validate_profile(p);
    CHECK(report.verdict == EncodingVerdict::kMarginal);
    CHECK(report.findings[0].rule == "fps");
  }
}

TEST_CASE("quality_for_bitrate reproduces the two anchors exactly") {
  CHECK(quality_for_bitrate(4000.0) == 0.475);
  CHECK(quality_for_bitrate(7535.0) == 0.9);
  CHECK(quality_for_bitrate(5767.5) == doctest::Approx(0.6875).epsilon(1e-12));
}

TEST_CASE("quality_for_bitrate is monotone and clamped") {
  double prev = -1.0;
  for (double b = 50.0; b <= 8356.0; b += 50.0) {
    double q = quality_for_bitrate(b);
    CHECK(q >= prev);
    CHECK(q >= 0.0);
    CHECK(q <= 1.0);
    prev = q;
  }
  CHECK_THROWS_AS(quality_for_bitrate(8357.0), Error);
  CHECK_THROWS_AS(quality_for_bitrate(0.0), Error);
  CHECK_THROWS_AS(quality_for_bitrate(-5.0), Error);
}

TEST_CASE("profile json round trips and rejects malformed input") {
  EncodingProfile p = reference_profile();
  p.width = 720;
  p.quality_factor = 0.6;
  EncodingProfile back = parse_profile_json(serialize_profile_json(p));
  CHECK(back.width == 720);
  CHECK(back.quality_factor == doctest::Approx(0.6));
  CHECK(back.bitrate_mode == BitrateMode::kVbr);

  CHECK_THROWS_AS(parse_profile_json("{}"), Error);
  CHECK_THROWS_AS(parse_profile_json("not json"), Error);
  CHECK_THROWS_AS(
      parse_profile_json(
          R"({"width":0,"height":480,"fps":25,"video_bitrate_max":4000,
              "bitrate_mode":"VBR","two_pass":true,"soft_target":true,
              "audio_bitrate":192,"audio_rate":48000,"quality_factor":0.5})"),
      Error);
}

TEST_CASE("the resolution ladder steps down as tried") {
  const auto& ladder = resolution_ladder();
  REQUIRE(ladder.size() == 3);
  CHECK(ladder[0] == std::make_pair(1280, 720));
  CHECK(ladder[1] == std::make_pair(1080, 720));
  CHECK(ladder[2] == std::make_pair(576, 480));
}
