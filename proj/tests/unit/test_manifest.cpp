#include <doctest.h>

#include <random>

#include "test_support.hpp"
#include "vidreason/manifest.hpp"

using namespace vidreason;
using test_support::error_kind_of;
using test_support::TempDir;
using test_support::write_text;

namespace {

const char* kTwoQuestionRecord =
    R"({"schema_version":1,"video_id":"cooking","media_uri":"file:///media/cooking.mp4","duration":120,)"
    R"("questions":[)"
    R"({"question_id":"q1","text":"What is added first?","kind":"multiple_choice",)"
    R"("options":[{"letter":"A","text":"salt"},{"letter":"B","text":"oil"}],"ground_truth":"B"},)"
    R"({"question_id":"q2","text":"What is added last?","kind":"multiple_choice",)"
    R"("options":[{"letter":"A","text":"salt"},{"letter":"B","text":"oil"},{"letter":"C","text":"pepper"}],)"
    R"("ground_truth":"C"}]})";

std::string grounded_record(const std::string& interval, double duration = 10) {
  return R"({"schema_version":1,"video_id":"g","media_uri":"file:///g.mp4","duration":)" +
         std::to_string(duration) +
         R"(,"questions":[{"question_id":"q","text":"Where is the clue?","kind":"grounded_qa","ground_truth":[)" +
         interval + "]}]}";
}

std::vector<VideoManifest> load_text(const TempDir& dir, const std::string& text) {
  write_text(dir / "m.jsonl", text);
  return load_manifest(dir / "m.jsonl");
}

}  // namespace

TEST_CASE("a file with one video and two choice questions loads") {
  TempDir dir;
  const auto videos = load_text(dir, std::string(kTwoQuestionRecord) + "\n");
  REQUIRE(videos.size() == 1);
  CHECK(videos[0].video_id == "cooking");
  CHECK(videos[0].duration == 120.0);
  REQUIRE(videos[0].questions.size() == 2);
  CHECK(videos[0].questions[1].options.size() == 3);
  CHECK(std::get<LetterAnswer>(videos[0].questions[1].ground_truth).letter == 'C');
}

TEST_CASE("grounded ground truth [[5,7]] in a 10 s video is accepted") {
  TempDir dir;
  const auto videos = load_text(dir, grounded_record("[5,7]"));
  const auto& spans = std::get<IntervalAnswer>(videos.at(0).questions.at(0).ground_truth).intervals;
  REQUIRE(spans.size() == 1);
  CHECK(spans[0] == TimeInterval{5, 7});
}

TEST_CASE("inverted or out-of-range grounded intervals violate invariants") {
  TempDir dir;
  CHECK(error_kind_of([&] { load_text(dir, grounded_record("[8,5]")); }) == ErrorKind::InvariantViolation);
  CHECK(error_kind_of([&] { load_text(dir, grounded_record("[5,5]")); }) == ErrorKind::InvariantViolation);
  CHECK(error_kind_of([&] { load_text(dir, grounded_record("[5,11]")); }) == ErrorKind::InvariantViolation);
  CHECK(error_kind_of([&] { load_text(dir, grounded_record("")); }) == ErrorKind::InvariantViolation);
}

TEST_CASE("malformed records report the line number") {
  TempDir dir;
  const std::string text = std::string(kTwoQuestionRecord) + "\n\n{not json}\n";
  try {
    load_text(dir, text);
    FAIL("expected MalformedRecord");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MalformedRecord);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("strict decoding rejects unknown fields, wrong types and schema versions") {
  TempDir dir;
  auto with = [](const std::string& from, const std::string& to) {
    std::string s = kTwoQuestionRecord;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  CHECK(error_kind_of([&] { load_text(dir, with(R"("duration":120,)", R"("duration":120,"fps":30,)")); }) ==
        ErrorKind::MalformedRecord);
  CHECK(error_kind_of([&] { load_text(dir, with(R"("schema_version":1)", R"("schema_version":2)")); }) ==
        ErrorKind::MalformedRecord);
  CHECK(error_kind_of([&] { load_text(dir, with(R"("duration":120)", R"("duration":"120")")); }) ==
        ErrorKind::MalformedRecord);
  CHECK(error_kind_of([&] { load_text(dir, with(R"("kind":"multiple_choice")", R"("kind":"essay")")); }) ==
        ErrorKind::MalformedRecord);
  CHECK(error_kind_of([&] { load_text(dir, with(R"("ground_truth":"B")", R"("ground_truth":"BC")")); }) ==
        ErrorKind::MalformedRecord);
}

TEST_CASE("duplicate video ids are rejected") {
  TempDir dir;
  const std::string rec = kTwoQuestionRecord;
  CHECK(error_kind_of([&] { load_text(dir, rec + "\n" + rec + "\n"); }) == ErrorKind::DuplicateVideoId);
}

TEST_CASE("question invariants") {
  auto video = test_support::simple_video(60);
  video.questions.push_back(test_support::mcq("q1", "?", 'B'));
  CHECK_NOTHROW(validate(video));

  SUBCASE("duplicate question ids") {
    video.questions.push_back(test_support::mcq("q1", "?", 'A'));
    CHECK(error_kind_of([&] { validate(video); }) == ErrorKind::InvariantViolation);
  }
  SUBCASE("fewer than two options") {
    video.questions[0].options.resize(1);
    video.questions[0].ground_truth = LetterAnswer{'A'};
    CHECK(error_kind_of([&] { validate(video); }) == ErrorKind::InvariantViolation);
  }
  SUBCASE("letters out of order") {
    std::swap(video.questions[0].options[0], video.questions[0].options[1]);
    CHECK(error_kind_of([&] { validate(video); }) == ErrorKind::InvariantViolation);
  }
  SUBCASE("gold letter not among options") {
    video.questions[0].ground_truth = LetterAnswer{'F'};
    CHECK(error_kind_of([&] { validate(video); }) == ErrorKind::InvariantViolation);
  }
  SUBCASE("category label for an unknown question") {
    video.category_labels["q9"] = "Temporal Reasoning";
    CHECK(error_kind_of([&] { validate(video); }) == ErrorKind::InvariantViolation);
  }
  SUBCASE("non-positive duration") {
    video.duration = 0;
    CHECK(error_kind_of([&] { validate(video); }) == ErrorKind::InvariantViolation);
  }
}

TEST_CASE("knowledge questions come in pre/post pairs") {
  auto video = test_support::simple_video(60);
  auto pre = test_support::mcq("lesson::pre", "?", 'A');
  pre.kind = QuestionKind::KnowledgePair;
  pre.pre_post_role = PrePostRole::Pre;
  video.questions.push_back(pre);
  CHECK(error_kind_of([&] { validate(video); }) == ErrorKind::InvariantViolation);

  auto post = pre;
  post.question_id = "lesson::post";
  post.pre_post_role = PrePostRole::Post;
  video.questions.push_back(post);
  CHECK_NOTHROW(validate(video));
  CHECK(video.questions[0].pair_id() == std::optional<std::string>("lesson"));

  video.questions[1].pre_post_role = PrePostRole::Pre;
  CHECK(error_kind_of([&] { validate(video); }) == ErrorKind::InvariantViolation);
}

TEST_CASE("normalize_subtitles examples") {
  CHECK(normalize_subtitles({}).empty());
  CHECK(normalize_subtitles({{0, 2, "a"}, {1, 3, "b"}}) == std::vector<SubtitleSegment>{{0, 3, "a b"}});
  CHECK(normalize_subtitles({{5, 6, "x"}, {0, 1, "y"}}) == std::vector<SubtitleSegment>{{0, 1, "y"}, {5, 6, "x"}});
  CHECK(normalize_subtitles({{0, 1, "   "}, {2, 3, " keep "}}) == std::vector<SubtitleSegment>{{2, 3, "keep"}});
  CHECK(normalize_subtitles({{0, 4, "long"}, {1, 2, "inside"}}) ==
        std::vector<SubtitleSegment>{{0, 4, "long inside"}});
  // Touching segments stay separate.
  CHECK(normalize_subtitles({{0, 1, "a"}, {1, 2, "b"}}).size() == 2);
}

TEST_CASE("normalize_subtitles is idempotent and yields sorted disjoint segments") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> start(0.0, 100.0);
  std::uniform_real_distribution<double> length(0.0, 10.0);
  std::uniform_int_distribution<int> count(0, 30);
  const std::vector<std::string> texts = {"hello", "", "  ", "world", "x"};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<SubtitleSegment> raw;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      const double s = start(rng);
      raw.push_back({s, s + length(rng), texts[rng() % texts.size()]});
    }
    const auto once = normalize_subtitles(raw);
    CHECK(normalize_subtitles(once) == once);
    for (std::size_t i = 0; i < once.size(); ++i) {
      CHECK(once[i].start < once[i].end);
      CHECK(!once[i].text.empty());
      if (i + 1 < once.size()) CHECK(once[i].end <= once[i + 1].start);
    }
  }
}

TEST_CASE("manifests survive a save/load round trip") {
  std::mt19937 rng(11);
  TempDir dir;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<VideoManifest> videos;
    const int n_videos = 1 + static_cast<int>(rng() % 4);
    for (int v = 0; v < n_videos; ++v) {
      auto video = test_support::simple_video(10.0 + static_cast<double>(rng() % 5000) / 7.0, "v" + std::to_string(v));
      const int n_q = static_cast<int>(rng() % 5);
      for (int k = 0; k < n_q; ++k) {
        const std::string id = "q" + std::to_string(k);
        switch (rng() % 3) {
          case 0: video.questions.push_back(test_support::mcq(id, "Which one? \"quoted\" ü", 'A' + rng() % 4)); break;
          case 1: {
            Question q;
            q.question_id = id;
            q.text = "What happens?";
            q.kind = QuestionKind::OpenEnded;
            q.ground_truth = TextAnswer{"a dog barks"};
            video.questions.push_back(q);
            break;
          }
          default: {
            Question q;
            q.question_id = id;
            q.text = "Where?";
            q.kind = QuestionKind::GroundedQA;
            q.ground_truth = IntervalAnswer{{{0.5, 2.25}, {3, 4}}};
            video.questions.push_back(q);
          }
        }
        if (rng() % 2) video.category_labels[id] = "Category " + std::to_string(rng() % 3);
      }
      videos.push_back(video);
    }
    save_manifest(dir / "rt.jsonl", videos);
    CHECK(load_manifest(dir / "rt.jsonl") == videos);
  }
}

TEST_CASE("missing manifest file is an I/O error") {
  CHECK(error_kind_of([] { load_manifest("/nonexistent/manifest.jsonl"); }) == ErrorKind::IoError);
}
