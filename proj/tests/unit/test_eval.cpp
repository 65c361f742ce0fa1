#include <doctest.h>

#include <random>

#include "test_support.hpp"
#include "vidreason/eval.hpp"

using namespace vidreason;
using test_support::error_kind_of;

namespace {

// Fraction of 1 ms cells covered by both sets over cells covered by either.
double grid_iou(const std::vector<TimeInterval>& a, const std::vector<TimeInterval>& b, int horizon_ms) {
  std::vector<char> in_a(horizon_ms, 0), in_b(horizon_ms, 0);
  auto paint = [](std::vector<char>& cells, const std::vector<TimeInterval>& spans) {
    for (const auto& s : spans) {
      for (auto ms = static_cast<int>(std::lround(s.start * 1000)); ms < std::lround(s.end * 1000); ++ms) cells[ms] = 1;
    }
  };
  paint(in_a, a);
  paint(in_b, b);
  long both = 0, either = 0;
  for (int i = 0; i < horizon_ms; ++i) {
    both += in_a[i] && in_b[i];
    either += in_a[i] || in_b[i];
  }
  return either == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(either);
}

std::vector<TimeInterval> random_spans(std::mt19937& rng, int horizon_ms) {
  std::vector<TimeInterval> out;
  const int n = 1 + static_cast<int>(rng() % 5);
  for (int i = 0; i < n; ++i) {
    const int s = static_cast<int>(rng() % (horizon_ms - 1));
    const int e = s + 1 + static_cast<int>(rng() % std::min(2000, horizon_ms - s - 1 + 1));
    out.push_back({s / 1000.0, std::min(e, horizon_ms) / 1000.0});
  }
  return out;
}

Verdict verdict(const std::string& q, QuestionKind kind, bool correct) {
  Verdict v;
  v.video_id = "v";
  v.question_id = q;
  v.kind = kind;
  v.correct = correct;
  v.predicted = correct ? "A" : "B";
  v.gold = "A";
  return v;
}

Verdict grounded_verdict(const std::string& q, std::optional<double> iou) {
  Verdict v = verdict(q, QuestionKind::GroundedQA, false);
  v.iou = iou.value_or(0.0);
  v.abstained = !iou.has_value();
  return v;
}

}  // namespace

TEST_CASE("choice accuracy") {
  CHECK(score_mcq({{'A', 'A'}, {'B', 'B'}, {'C', 'C'}, {'D', 'D'}}) == 100.0);
  CHECK(score_mcq({{'A', 'A'}, {'B', 'B'}, {'C', 'C'}, {'A', 'D'}}) == 75.0);
  CHECK(score_mcq({{'A', 'A'}, {'B', 'B'}, {'C', 'C'}, {std::nullopt, 'D'}}) == 75.0);
  CHECK(error_kind_of([] { score_mcq({}); }) == ErrorKind::EmptyInput);
}

TEST_CASE("interval IoU examples") {
  CHECK(interval_iou(std::vector<TimeInterval>{{5, 7}}, {{5, 7}}) == doctest::Approx(1.0));
  CHECK(interval_iou(std::vector<TimeInterval>{{5, 7}}, {{6, 8}}) == doctest::Approx(1.0 / 3.0));
  CHECK(interval_iou(std::vector<TimeInterval>{{0, 2}}, {{1, 5}}) == doctest::Approx(0.2));
  CHECK(interval_iou(std::vector<TimeInterval>{{0, 2}}, {{3, 5}}) == 0.0);
  CHECK(interval_iou(IntervalPrediction{{{5, 6}, {6, 7}}}, {{5, 7}}) == doctest::Approx(1.0));
  CHECK(union_intervals({{3, 4}, {0, 2}, {1, 3}, {6, 6}}) == std::vector<TimeInterval>{{0, 4}});
}

TEST_CASE("interval IoU agrees with a millisecond grid and is symmetric") {
  std::mt19937 rng(29);
  constexpr int kHorizon = 20000;
  for (int trial = 0; trial < 400; ++trial) {
    const auto a = random_spans(rng, kHorizon);
    const auto b = random_spans(rng, kHorizon);
    const double iou = interval_iou(a, b);
    CHECK(iou == doctest::Approx(grid_iou(a, b, kHorizon)).epsilon(1e-9));
    CHECK(iou == doctest::Approx(interval_iou(b, a)).epsilon(1e-12));
    CHECK(iou >= 0.0);
    CHECK(iou <= 1.0);
    CHECK(interval_iou(a, a) == doctest::Approx(1.0));
  }
}

TEST_CASE("mean IoU as a percentage") {
  CHECK(mean_iou({1.0, 0.0}) == doctest::Approx(50.0));
  CHECK(mean_iou({1.0 / 3.0, 0.2}) == doctest::Approx(26.6667).epsilon(1e-5));
  CHECK(mean_iou({1.0, std::nullopt}) == doctest::Approx(50.0));
  CHECK(error_kind_of([] { mean_iou({}); }) == ErrorKind::EmptyInput);
}

TEST_CASE("knowledge gain anchors") {
  CHECK(delta_knowledge(40, 70) == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(delta_knowledge(0, 100) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(delta_knowledge(50, 25) == doctest::Approx(-50.0).epsilon(1e-12));
  CHECK(delta_knowledge(20, 20) == 0.0);
  CHECK(error_kind_of([] { delta_knowledge(100, 100); }) == ErrorKind::DegenerateBaseline);
  CHECK(error_kind_of([] { delta_knowledge(-1, 50); }) == ErrorKind::InvariantViolation);
  CHECK(error_kind_of([] { delta_knowledge(50, 101); }) == ErrorKind::InvariantViolation);
}

TEST_CASE("knowledge gain grows with post accuracy") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> pct(0.0, 99.9);
  for (int trial = 0; trial < 2000; ++trial) {
    const double pre = pct(rng);
    double a = pct(rng), b = pct(rng);
    if (a > b) std::swap(a, b);
    CHECK(delta_knowledge(pre, a) <= delta_knowledge(pre, b));
    CHECK(delta_knowledge(pre, 100.0) == doctest::Approx(100.0));
  }
}

TEST_CASE("open answers compare loosely") {
  CHECK(open_answer_matches("A paper boat.", "a paper boat"));
  CHECK(open_answer_matches("  Two   kites ", "two kites"));
  CHECK_FALSE(open_answer_matches("three kites", "two kites"));
  CHECK_FALSE(open_answer_matches("", ""));
}

TEST_CASE("report aggregates accuracy, categories, mIoU and knowledge gain") {
  std::vector<Verdict> verdicts = {
      verdict("q1", QuestionKind::MultipleChoice, true),
      verdict("q2", QuestionKind::MultipleChoice, false),
      verdict("q3", QuestionKind::OpenEnded, true),
      verdict("q4", QuestionKind::MultipleChoice, true),
      grounded_verdict("g1", 1.0 / 3.0),
      grounded_verdict("g2", std::nullopt),
  };
  const auto report = build_report(verdicts, {{"v/q1", "Recall"}, {"v/q2", "Recall"}, {"v/q3", "Counting"}});
  CHECK(report.accuracy_overall == doctest::Approx(75.0));
  CHECK(report.accuracy_by_category.at("Recall") == doctest::Approx(50.0));
  CHECK(report.accuracy_by_category.at("Counting") == doctest::Approx(100.0));
  CHECK(report.category_counts.at("Recall") == 2);
  CHECK(report.miou == doctest::Approx(100.0 / 6.0));
  CHECK(report.counts.total == 6);
  CHECK(report.counts.accuracy_scored == 4);
  CHECK(report.counts.grounded == 2);
  CHECK(report.counts.abstentions == 1);
  CHECK_FALSE(report.knowledge.has_value());
  CHECK(report.verdicts[0].category == std::optional<std::string>("Recall"));

  CHECK(error_kind_of([&] { build_report(verdicts, {{"v/q9", "Recall"}}); }) == ErrorKind::UnknownCategoryLabel);
  CHECK(error_kind_of([] { build_report({}); }) == ErrorKind::EmptyInput);
}

TEST_CASE("report knowledge gain from pre/post questions") {
  auto pre = [](const std::string& id, bool ok) {
    auto v = verdict(id, QuestionKind::KnowledgePair, ok);
    v.pre_post_role = PrePostRole::Pre;
    return v;
  };
  auto post = [](const std::string& id, bool ok) {
    auto v = verdict(id, QuestionKind::KnowledgePair, ok);
    v.pre_post_role = PrePostRole::Post;
    return v;
  };
  const auto report = build_report({pre("a::pre", false), post("a::post", true), pre("b::pre", true),
                                    post("b::post", true)});
  REQUIRE(report.knowledge.has_value());
  CHECK(report.knowledge->acc_pre == 50.0);
  CHECK(report.knowledge->acc_post == 100.0);
  CHECK(report.knowledge->delta_knowledge == doctest::Approx(100.0));

  const auto degenerate = build_report({pre("a::pre", true), post("a::post", false)});
  REQUIRE(degenerate.knowledge.has_value());
  CHECK_FALSE(degenerate.knowledge->delta_knowledge.has_value());
  CHECK_FALSE(degenerate.knowledge->note.empty());
}

TEST_CASE("overall accuracy is the count-weighted mean of category accuracies") {
  std::mt19937 rng(37);
  const std::vector<std::string> labels = {"Recall", "Counting", "Temporal", "Causal"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Verdict> verdicts;
    std::map<std::string, std::string> categories;
    const int n = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) {
      const auto id = "q" + std::to_string(i);
      verdicts.push_back(verdict(id, QuestionKind::MultipleChoice, rng() % 2 == 0));
      categories["v/" + id] = labels[rng() % labels.size()];
    }
    const auto report = build_report(verdicts, categories);
    double weighted = 0.0;
    std::size_t total = 0;
    for (const auto& [label, acc] : report.accuracy_by_category) {
      weighted += acc * static_cast<double>(report.category_counts.at(label));
      total += report.category_counts.at(label);
    }
    CHECK(total == static_cast<std::size_t>(n));
    CHECK(*report.accuracy_overall == doctest::Approx(weighted / static_cast<double>(total)));
  }
}

TEST_CASE("verdicts survive JSON round trips and reports render") {
  auto v = grounded_verdict("g", 0.25);
  v.category = "Grounding";
  v.note = "parsed";
  v.predicted = "[[5, 7]]";
  v.gold = "[[6, 8]]";
  CHECK(verdict_from_json(to_json(v)) == v);
  auto m = verdict("q1", QuestionKind::MultipleChoice, false);
  m.abstained = true;
  m.failed = true;
  m.predicted.clear();
  CHECK(verdict_from_json(to_json(m)) == m);

  const auto report = build_report({v, m});
  const auto jsonl = report_jsonl(report);
  CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == 3);
  const auto agg = aggregate_record(report);
  CHECK(agg["type"] == "aggregate");
  CHECK(agg["accuracy_overall"] == 0.0);
  CHECK(agg["miou"] == doctest::Approx(25.0));
  CHECK(report_table(report).find("mIoU") != std::string::npos);
}
