#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cubesort/annotation.hpp"

namespace cubesort::data {

inline constexpr std::string_view kCsvHeader = "filename,width,height,class,xmin,ymin,xmax,ymax\n";

/// True for non-empty names drawn from [A-Za-z0-9._-].
bool valid_filename(std::string_view name) noexcept;

/// Throws InvalidBox unless 0 <= xmin < xmax <= width and likewise for y,
/// and UnknownCategory unless the class is "defect" or "intact".
void validate_annotation(const Annotation& a);

/// labelImg-style VOC subset with exactly one <object>. Throws MalformedXml,
/// MissingElement (message names the element), InvalidBox, UnknownCategory.
Annotation parse_annotation_xml(std::string_view xml);

/// Inverse of parse_annotation_xml for the supported subset.
std::string annotation_to_xml(const Annotation& a);

/// Header plus one unquoted comma-joined row per annotation, '\n' endings.
std::string annotations_to_csv(std::span<const Annotation> annotations);

/// Throws BadHeader, or BadRow naming the 1-based line number.
std::vector<Annotation> parse_csv(std::string_view csv);

/// Floors all coordinates and dimensions by `factor` (only 0.5 is
/// supported). Throws InvalidBox if the halved box degenerates.
Annotation scale_annotation(const Annotation& a, double factor = 0.5);

struct DatasetSplit {
  std::vector<Annotation> train;
  std::vector<Annotation> test;
  double ratio = 0.0;
  std::uint64_t seed = 0;
};

/// Seeded Fisher-Yates shuffle, then the first round(ratio * N) items train.
/// Throws EmptyDataset, or InvalidArgument when ratio is outside (0, 1).
DatasetSplit split_dataset(std::span<const Annotation> annotations, double ratio, std::uint64_t seed);

// XML directory helpers used by the xml2csv command.
std::vector<Annotation> read_xml_directory(const std::string& dir);

}  // namespace cubesort::data
