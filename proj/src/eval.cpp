#include "vidreason/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>

#include "vidreason/error.hpp"

namespace vidreason {

using nlohmann::json;

std::string Verdict::key() const { return video_id.empty() ? question_id : video_id + "/" + question_id; }

json to_json(const Verdict& v) {
  json j = {{"type", "verdict"},
            {"video_id", v.video_id},
            {"question_id", v.question_id},
            {"kind", std::string(to_string(v.kind))},
            {"predicted", v.predicted},
            {"gold", v.gold},
            {"correct", v.correct},
            {"abstained", v.abstained},
            {"failed", v.failed}};
  if (v.pre_post_role != PrePostRole::None) j["pre_post_role"] = std::string(to_string(v.pre_post_role));
  if (v.iou) j["iou"] = *v.iou;
  if (v.category) j["category"] = *v.category;
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

Verdict verdict_from_json(const json& j) {
  Verdict v;
  v.video_id = j.at("video_id").get<std::string>();
  v.question_id = j.at("question_id").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  for (auto k : {QuestionKind::MultipleChoice, QuestionKind::OpenEnded, QuestionKind::GroundedQA,
                 QuestionKind::KnowledgePair}) {
    if (to_string(k) == kind) v.kind = k;
  }
  const auto role = j.value("pre_post_role", std::string("none"));
  v.pre_post_role = role == "pre" ? PrePostRole::Pre : role == "post" ? PrePostRole::Post : PrePostRole::None;
  v.predicted = j.at("predicted").get<std::string>();
  v.gold = j.at("gold").get<std::string>();
  v.correct = j.at("correct").get<bool>();
  v.abstained = j.at("abstained").get<bool>();
  v.failed = j.value("failed", false);
  if (j.contains("iou")) v.iou = j["iou"].get<double>();
  if (j.contains("category")) v.category = j["category"].get<std::string>();
  v.note = j.value("note", std::string());
  return v;
}

double score_mcq(const std::vector<std::pair<std::optional<char>, char>>& predictions) {
  if (predictions.empty()) throw Error(ErrorKind::EmptyInput, "no predictions to score");
  std::size_t correct = 0;
  for (const auto& [pred, gold] : predictions) {
    if (pred && *pred == gold) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(predictions.size());
}

std::vector<TimeInterval> union_intervals(std::vector<TimeInterval> intervals) {
  std::erase_if(intervals, [](const TimeInterval& iv) { return !(iv.end > iv.start); });
  std::sort(intervals.begin(), intervals.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  std::vector<TimeInterval> out;
  for (const auto& iv : intervals) {
    if (!out.empty() && iv.start <= out.back().end) {
      out.back().end = std::max(out.back().end, iv.end);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

namespace {

double total_length(const std::vector<TimeInterval>& merged) {
  double sum = 0.0;
  for (const auto& iv : merged) sum += iv.length();
  return sum;
}

double intersection_length(const std::vector<TimeInterval>& a, const std::vector<TimeInterval>& b) {
  double sum = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    const double lo = std::max(a[i].start, b[j].start);
    const double hi = std::min(a[i].end, b[j].end);
    if (hi > lo) sum += hi - lo;
    if (a[i].end < b[j].end) {
      ++i;
    } else {
      ++j;
    }
  }
  return sum;
}

std::string format_percent(std::optional<double> value) {
  if (!value) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *value);
  return buf;
}

std::string normalize_answer(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc) || std::ispunct(uc)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(uc));
  }
  return out;
}

}  // namespace

double interval_iou(const std::vector<TimeInterval>& pred, const std::vector<TimeInterval>& gold) {
  const auto p = union_intervals(pred);
  const auto g = union_intervals(gold);
  const double inter = intersection_length(p, g);
  const double uni = total_length(p) + total_length(g) - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double interval_iou(const IntervalPrediction& pred, const std::vector<TimeInterval>& gold) {
  std::vector<TimeInterval> spans;
  spans.reserve(pred.intervals.size());
  for (const auto& iv : pred.intervals) {
    spans.push_back({static_cast<double>(iv.start), static_cast<double>(iv.end)});
  }
  return interval_iou(spans, gold);
}

double mean_iou(const std::vector<std::optional<double>>& ious) {
  if (ious.empty()) throw Error(ErrorKind::EmptyInput, "no grounded predictions");
  double sum = 0.0;
  for (const auto& v : ious) sum += v.value_or(0.0);
  return 100.0 * sum / static_cast<double>(ious.size());
}

double delta_knowledge(double acc_pre, double acc_post) {
  if (!(acc_pre >= 0.0 && acc_pre <= 100.0) || !(acc_post >= 0.0 && acc_post <= 100.0)) {
    throw Error(ErrorKind::InvariantViolation, "accuracies must lie in [0, 100]");
  }
  if (acc_pre == 100.0) throw Error(ErrorKind::DegenerateBaseline, "pre-video accuracy is 100%");
  return (acc_post - acc_pre) / (100.0 - acc_pre) * 100.0;
}

bool open_answer_matches(std::string_view predicted, std::string_view gold) {
  const auto p = normalize_answer(predicted);
  return !p.empty() && p == normalize_answer(gold);
}

EvalReport build_report(std::vector<Verdict> verdicts, const std::map<std::string, std::string>& category_labels) {
  if (verdicts.empty()) throw Error(ErrorKind::EmptyInput, "no verdicts");
  std::set<std::string> keys;
  for (const auto& v : verdicts) keys.insert(v.key());
  for (const auto& [key, _] : category_labels) {
    if (!keys.contains(key)) throw Error(ErrorKind::UnknownCategoryLabel, "no question '" + key + "'");
  }

  EvalReport report;
  auto& counts = report.counts;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_category;  // correct, total
  std::vector<std::optional<double>> ious;
  std::size_t pre_total = 0, pre_correct = 0, post_total = 0, post_correct = 0;

  for (auto& v : verdicts) {
    if (auto it = category_labels.find(v.key()); it != category_labels.end()) v.category = it->second;
    ++counts.total;
    if (v.abstained) ++counts.abstentions;
    if (v.failed) ++counts.failures;
    if (v.kind == QuestionKind::GroundedQA) {
      ++counts.grounded;
      ious.push_back(v.abstained ? std::nullopt : v.iou);
      continue;
    }
    ++counts.accuracy_scored;
    if (v.correct) ++counts.correct;
    if (v.category) {
      auto& [c, t] = per_category[*v.category];
      c += v.correct ? 1 : 0;
      ++t;
    }
    if (v.pre_post_role == PrePostRole::Pre) {
      ++pre_total;
      pre_correct += v.correct ? 1 : 0;
    } else if (v.pre_post_role == PrePostRole::Post) {
      ++post_total;
      post_correct += v.correct ? 1 : 0;
    }
  }

  if (counts.accuracy_scored > 0) {
    report.accuracy_overall =
        100.0 * static_cast<double>(counts.correct) / static_cast<double>(counts.accuracy_scored);
  }
  for (const auto& [label, ct] : per_category) {
    report.accuracy_by_category[label] = 100.0 * static_cast<double>(ct.first) / static_cast<double>(ct.second);
    report.category_counts[label] = ct.second;
  }
  if (!ious.empty()) report.miou = mean_iou(ious);
  if (pre_total > 0 && post_total > 0) {
    KnowledgeGain gain;
    gain.acc_pre = 100.0 * static_cast<double>(pre_correct) / static_cast<double>(pre_total);
    gain.acc_post = 100.0 * static_cast<double>(post_correct) / static_cast<double>(post_total);
    try {
      gain.delta_knowledge = delta_knowledge(gain.acc_pre, gain.acc_post);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateBaseline) throw;
      gain.note = e.what();
    }
    report.knowledge = gain;
  }
  report.verdicts = std::move(verdicts);
  return report;
}

json aggregate_record(const EvalReport& report) {
  json j = {{"type", "aggregate"}, {"schema_version", kReportSchemaVersion}};
  j["accuracy_overall"] = report.accuracy_overall ? json(*report.accuracy_overall) : json(nullptr);
  j["accuracy_by_category"] = report.accuracy_by_category;
  j["category_counts"] = report.category_counts;
  j["miou"] = report.miou ? json(*report.miou) : json(nullptr);
  if (report.knowledge) {
    const auto& k = *report.knowledge;
    j["knowledge"] = {{"acc_pre", k.acc_pre},
                      {"acc_post", k.acc_post},
                      {"delta_knowledge", k.delta_knowledge ? json(*k.delta_knowledge) : json(nullptr)}};
    if (!k.note.empty()) j["knowledge"]["note"] = k.note;
  } else {
    j["knowledge"] = nullptr;
  }
  const auto& c = report.counts;
  j["counts"] = {{"total", c.total},       {"accuracy_scored", c.accuracy_scored}, {"correct", c.correct},
                 {"grounded", c.grounded}, {"abstentions", c.abstentions},         {"failures", c.failures}};
  return j;
}

std::string report_jsonl(const EvalReport& report) {
  std::string out;
  for (const auto& v : report.verdicts) out += to_json(v).dump() + "\n";
  out += aggregate_record(report).dump() + "\n";
  return out;
}

std::string report_table(const EvalReport& report) {
  std::string out;
  char line[256];
  auto row = [&](const std::string& name, const std::string& value) {
    std::snprintf(line, sizeof line, "%-40s %10s\n", name.c_str(), value.c_str());
    out += line;
  };
  out += "# evaluation report v" + std::to_string(kReportSchemaVersion) + "\n";
  row("metric", "value");
  row("accuracy (overall)", format_percent(report.accuracy_overall));
  for (const auto& [label, acc] : report.accuracy_by_category) {
    row("accuracy [" + label + "] (n=" + std::to_string(report.category_counts.at(label)) + ")",
        format_percent(acc));
  }
  row("mIoU (grounded)", format_percent(report.miou));
  if (report.knowledge) {
    row("acc_pre", format_percent(report.knowledge->acc_pre));
    row("acc_post", format_percent(report.knowledge->acc_post));
    row("delta_knowledge", report.knowledge->delta_knowledge ? format_percent(report.knowledge->delta_knowledge)
                                                             : std::string("degenerate"));
  }
  const auto& c = report.counts;
  row("questions", std::to_string(c.total));
  row("correct / scored", std::to_string(c.correct) + "/" + std::to_string(c.accuracy_scored));
  row("grounded", std::to_string(c.grounded));
  row("abstentions", std::to_string(c.abstentions));
  row("backend failures", std::to_string(c.failures));
  return out;
}

}  // namespace vidreason
