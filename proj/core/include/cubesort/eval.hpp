#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace cubesort::eval {

/// Defect is the positive category.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }

  ConfusionMatrix& operator+=(const ConfusionMatrix& other) noexcept;
  friend ConfusionMatrix operator+(ConfusionMatrix a, const ConfusionMatrix& b) noexcept { return a += b; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Throws UnknownCategory for anything but "defect" / "intact".
void accumulate(ConfusionMatrix& cm, std::string_view predicted, std::string_view actual);

/// Throws EmptyMatrix.
double accuracy(const ConfusionMatrix& cm);
/// Throws NoPositivePredictions.
double precision(const ConfusionMatrix& cm);
/// Throws NoActualPositives.
double recall(const ConfusionMatrix& cm);

/// Percentage with two decimals, e.g. 0.81132 -> "81.13". Undefined -> "n/a".
std::string percent(double fraction);

/// Confusion table with margins recomputed from the cells plus the three rates.
std::string report(const ConfusionMatrix& cm, std::string_view split_description);

/// Same content as `report` as a markdown table.
std::string report_markdown(const ConfusionMatrix& cm, std::string_view split_description);

/// {"tp":..,"fp":..,"fn":..,"tn":..,"accuracy":..,"precision":..,"recall":..};
/// undefined rates are null.
std::string summary_json(const ConfusionMatrix& cm);

}  // namespace cubesort::eval
