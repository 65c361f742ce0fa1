#include <doctest.h>

#include <random>

#include "test_support.hpp"
#include "vidreason/transcript.hpp"

using namespace vidreason;
using test_support::error_kind_of;

namespace {

std::vector<TimeInterval> intervals(const ClipPlan& plan) { return plan.clips; }

}  // namespace

TEST_CASE("plan_clips examples") {
  CHECK(intervals(plan_clips(10, 4)) == std::vector<TimeInterval>{{0, 4}, {4, 8}, {8, 10}});
  CHECK(intervals(plan_clips(8, 4)) == std::vector<TimeInterval>{{0, 4}, {4, 8}});
  CHECK(intervals(plan_clips(3, 4)) == std::vector<TimeInterval>{{0, 3}});
  CHECK(plan_clips(10, 4).clip_length == 4);
}

TEST_CASE("plan_clips rejects non-positive input") {
  CHECK(error_kind_of([] { plan_clips(0, 4); }) == ErrorKind::NonPositiveInput);
  CHECK(error_kind_of([] { plan_clips(10, 0); }) == ErrorKind::NonPositiveInput);
  CHECK(error_kind_of([] { plan_clips(-1, 4); }) == ErrorKind::NonPositiveInput);
  CHECK(error_kind_of([] { plan_clips(10, -2); }) == ErrorKind::NonPositiveInput);
}

TEST_CASE("plan_clips tiles the video exactly") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> duration(0.01, 14400.0);
  std::uniform_real_distribution<double> exponent(-3.0, 12.0);
  for (int trial = 0; trial < 3000; ++trial) {
    const double d = duration(rng);
    const double length = std::pow(2.0, exponent(rng));
    const auto plan = plan_clips(d, length);
    REQUIRE(!plan.clips.empty());
    CHECK(plan.clips.front().start == 0.0);
    CHECK(plan.clips.back().end == d);
    double covered = 0.0;
    for (std::size_t i = 0; i < plan.clips.size(); ++i) {
      const auto& c = plan.clips[i];
      CHECK(c.start < c.end);
      if (i + 1 < plan.clips.size()) {
        CHECK(c.end == plan.clips[i + 1].start);
        CHECK(c.length() == doctest::Approx(length).epsilon(1e-9));
      } else {
        CHECK(c.length() <= length * (1 + 1e-12));
      }
      covered += c.length();
    }
    CHECK(covered == doctest::Approx(d).epsilon(1e-9));
    const auto n = static_cast<double>(plan.clips.size());
    CHECK(n * length >= d);
    CHECK((n - 1) * length < d);
    CHECK(plan_clips(d, 2 * length).clips.size() <= plan.clips.size());
  }
}

TEST_CASE("render_timestamp examples") {
  CHECK(render_timestamp(24) == "00:00:24");
  CHECK(render_timestamp(0) == "00:00:00");
  CHECK(render_timestamp(3661) == "01:01:01");
  CHECK(render_timestamp(59.999) == "00:00:59");
  CHECK(render_timestamp(360000) == "100:00:00");
  CHECK(error_kind_of([] { render_timestamp(-0.5); }) == ErrorKind::NegativeTime);
}

TEST_CASE("render_timestamp is monotone") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> t(0.0, 359999.0);
  for (int trial = 0; trial < 5000; ++trial) {
    double a = t(rng);
    double b = t(rng);
    if (a > b) std::swap(a, b);
    const auto ra = render_timestamp(a);
    const auto rb = render_timestamp(b);
    CHECK(ra <= rb);
    CHECK((ra == rb) == (std::floor(a) == std::floor(b)));
  }
}

TEST_CASE("caption block rendering") {
  const std::vector<ClipCaption> one = {{24, 32, "A clear glass bottle is placed on the table."}};
  CHECK(render_caption_block(one, true) == "00:00:24 --> 00:00:32: A clear glass bottle is placed on the table.");
  CHECK(render_caption_block({}, true).empty());
  CHECK(render_caption_block({{0, 4, "first"}, {4, 8, "second"}}, false) == "first\nsecond");
  CHECK(render_caption_block({{0, 4.9, "first"}, {4.9, 8, "second"}}, true) ==
        "00:00:00 --> 00:00:04: first\n00:00:04 --> 00:00:08: second");
}

TEST_CASE("build_transcript layout") {
  const auto counter = TokenCounter::heuristic();
  SUBCASE("captions only") {
    const auto t = build_transcript({}, {{0, 8, "a cat"}}, 8, counter);
    CHECK(t.full_text == t.caption_block);
    CHECK(t.subtitle_block.empty());
  }
  SUBCASE("subtitles precede captions") {
    const auto t = build_transcript({{1, 2, "hello"}}, {{0, 8, "a cat"}}, 8, counter);
    CHECK(t.full_text == "00:00:01 --> 00:00:02: hello\n00:00:00 --> 00:00:08: a cat");
    CHECK(t.subtitle_lines.size() == 1);
    CHECK(t.caption_lines.size() == 1);
    CHECK(t.token_count == counter.count(t.full_text));
  }
  SUBCASE("subtitles keep timestamps when captions do not") {
    const auto t = build_transcript({{1, 2, "hello"}}, {{0, 8, "a cat"}}, 8, counter, false);
    CHECK(t.full_text == "00:00:01 --> 00:00:02: hello\na cat");
  }
  SUBCASE("empty transcript") {
    const auto t = build_transcript({}, {}, 1, counter);
    CHECK(t.full_text.empty());
    CHECK(t.token_count == 0);
  }
}

TEST_CASE("token count grows with the number of caption lines") {
  const auto counter = TokenCounter::heuristic();
  std::mt19937 rng(9);
  const std::vector<SubtitleSegment> subs = {{0, 3, "we begin"}, {5, 9, "and continue"}};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ClipCaption> caps;
    std::size_t prev = build_transcript(subs, caps, 4, counter).token_count;
    const int n = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) {
      caps.push_back({4.0 * i, 4.0 * (i + 1), std::string(rng() % 30, 'x')});
      const auto now = build_transcript(subs, caps, 4, counter).token_count;
      CHECK(now >= prev);
      prev = now;
    }
  }
}
