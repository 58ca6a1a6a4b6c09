#include "cubesort/eval.hpp"

#include <cstdio>
#include <optional>
#include <sstream>

#include "json.hpp"

#include "cubesort/annotation.hpp"
#include "cubesort/error.hpp"

namespace cubesort::eval {

namespace {

bool is_defect(std::string_view category) {
  if (category == kDefect) return true;
  if (category == kIntact) return false;
  throw Error(ErrorCode::UnknownCategory, "class '" + std::string(category) + "'");
}

template <typename F>
std::optional<double> try_rate(F&& f, const ConfusionMatrix& cm) {
  try {
    return f(cm);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::string rate_text(std::optional<double> r) { return r ? percent(*r) + "%" : "n/a"; }

}  // namespace

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) noexcept {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  tn += other.tn;
  return *this;
}

void accumulate(ConfusionMatrix& cm, std::string_view predicted, std::string_view actual) {
  const bool p = is_defect(predicted);
  const bool a = is_defect(actual);
  if (p && a) ++cm.tp;
  else if (p) ++cm.fp;
  else if (a) ++cm.fn;
  else ++cm.tn;
}

double accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorCode::EmptyMatrix, "no outcomes recorded");
  return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
}

double precision(const ConfusionMatrix& cm) {
  if (cm.tp + cm.fp == 0) throw Error(ErrorCode::NoPositivePredictions, "tp + fp == 0");
  return static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
}

double recall(const ConfusionMatrix& cm) {
  if (cm.tp + cm.fn == 0) throw Error(ErrorCode::NoActualPositives, "tp + fn == 0");
  return static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
  return buf;
}

std::string report(const ConfusionMatrix& cm, std::string_view split_description) {
  const auto row = [](const char* label, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-16s %16llu %16llu %8llu\n", label, static_cast<unsigned long long>(a),
                  static_cast<unsigned long long>(b), static_cast<unsigned long long>(c));
    return std::string(buf);
  };
  std::ostringstream os;
  os << split_description << "  (N = " << cm.total() << ")\n";
  char head[128];
  std::snprintf(head, sizeof head, "%-16s %16s %16s %8s\n", "", "Intact pred (-)", "Defect pred (+)", "Total");
  os << head;
  os << row("Intact actual", cm.tn, cm.fp, cm.tn + cm.fp);
  os << row("Defect actual", cm.fn, cm.tp, cm.fn + cm.tp);
  os << row("Total", cm.tn + cm.fn, cm.fp + cm.tp, cm.total());
  os << "accuracy " << rate_text(try_rate(accuracy, cm)) << '\n';
  os << "precision " << rate_text(try_rate(precision, cm)) << '\n';
  os << "recall " << rate_text(try_rate(recall, cm)) << '\n';
  return os.str();
}

std::string report_markdown(const ConfusionMatrix& cm, std::string_view split_description) {
  std::ostringstream os;
  os << "### " << split_description << " (N = " << cm.total() << ")\n\n"
     << "| | Intact predicted (negative) | Defect predicted (positive) | Total |\n"
     << "|---|---|---|---|\n"
     << "| Intact actual | " << cm.tn << " (TN) | " << cm.fp << " (FP) | " << cm.tn + cm.fp << " |\n"
     << "| Defect actual | " << cm.fn << " (FN) | " << cm.tp << " (TP) | " << cm.fn + cm.tp << " |\n"
     << "| Total | " << cm.tn + cm.fn << " | " << cm.fp + cm.tp << " | " << cm.total() << " |\n\n"
     << "| Accuracy | Precision | Recall |\n|---|---|---|\n"
     << "| " << rate_text(try_rate(accuracy, cm)) << " | " << rate_text(try_rate(precision, cm)) << " | "
     << rate_text(try_rate(recall, cm)) << " |\n";
  return os.str();
}

std::string summary_json(const ConfusionMatrix& cm) {
  nlohmann::ordered_json j;
  j["tp"] = cm.tp;
  j["fp"] = cm.fp;
  j["fn"] = cm.fn;
  j["tn"] = cm.tn;
  const auto put = [&](const char* key, std::optional<double> v) {
    if (v) j[key] = *v;
    else j[key] = nullptr;
  };
  put("accuracy", try_rate(accuracy, cm));
  put("precision", try_rate(precision, cm));
  put("recall", try_rate(recall, cm));
  return j.dump();
}

}  // namespace cubesort::eval
