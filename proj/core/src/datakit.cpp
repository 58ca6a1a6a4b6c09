#include "cubesort/datakit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "cubesort/error.hpp"
#include "cubesort/rng.hpp"

namespace cubesort::data {

namespace pt = boost::property_tree;

namespace {

std::string_view trim(std::string_view s) noexcept {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

bool parse_int(std::string_view text, int& out) noexcept {
  text = trim(text);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out, 10);
  return ec == std::errc() && ptr == text.data() + text.size();
}

const pt::ptree& child(const pt::ptree& node, const std::string& name, const std::string& path) {
  const auto found = node.get_child_optional(name);
  if (!found) throw Error(ErrorCode::MissingElement, path);
  return *found;
}

std::string text_of(const pt::ptree& node, const std::string& name, const std::string& path) {
  return std::string(trim(child(node, name, path).data()));
}

int int_of(const pt::ptree& node, const std::string& name, const std::string& path) {
  const std::string text = text_of(node, name, path);
  int v = 0;
  if (!parse_int(text, v)) throw Error(ErrorCode::MalformedXml, path + " is not an integer: '" + text + "'");
  return v;
}

}  // namespace

bool valid_filename(std::string_view name) noexcept {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' ||
           c == '_' || c == '-';
  });
}

void validate_annotation(const Annotation& a) {
  if (a.category != kDefect && a.category != kIntact) {
    throw Error(ErrorCode::UnknownCategory, "class '" + a.category + "'");
  }
  const bool ok = 0 <= a.xmin && a.xmin < a.xmax && a.xmax <= a.width && 0 <= a.ymin &&
                  a.ymin < a.ymax && a.ymax <= a.height;
  if (!ok) {
    std::ostringstream os;
    os << "box (" << a.xmin << "," << a.ymin << "," << a.xmax << "," << a.ymax << ") in "
       << a.width << "x" << a.height;
    throw Error(ErrorCode::InvalidBox, os.str());
  }
}

Annotation parse_annotation_xml(std::string_view xml) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::MalformedXml, e.message() + " at line " + std::to_string(e.line()));
  }
  if (tree.empty()) throw Error(ErrorCode::MalformedXml, "no root element");
  const pt::ptree& root = child(tree, "annotation", "annotation");

  Annotation a;
  a.filename = text_of(root, "filename", "annotation/filename");
  const pt::ptree& size = child(root, "size", "annotation/size");
  a.width = int_of(size, "width", "annotation/size/width");
  a.height = int_of(size, "height", "annotation/size/height");

  const auto objects = root.equal_range("object");
  const auto count = std::distance(objects.first, objects.second);
  if (count == 0) throw Error(ErrorCode::MissingElement, "annotation/object");
  if (count > 1) {
    throw Error(ErrorCode::MalformedXml, "expected exactly one object, found " + std::to_string(count));
  }
  const pt::ptree& object = objects.first->second;
  a.category = text_of(object, "name", "annotation/object/name");
  const pt::ptree& box = child(object, "bndbox", "annotation/object/bndbox");
  a.xmin = int_of(box, "xmin", "annotation/object/bndbox/xmin");
  a.ymin = int_of(box, "ymin", "annotation/object/bndbox/ymin");
  a.xmax = int_of(box, "xmax", "annotation/object/bndbox/xmax");
  a.ymax = int_of(box, "ymax", "annotation/object/bndbox/ymax");
  validate_annotation(a);
  return a;
}

std::string annotation_to_xml(const Annotation& a) {
  std::ostringstream os;
  os << "<annotation>\n"
     << "\t<folder>images</folder>\n"
     << "\t<filename>" << a.filename << "</filename>\n"
     << "\t<size>\n"
     << "\t\t<width>" << a.width << "</width>\n"
     << "\t\t<height>" << a.height << "</height>\n"
     << "\t\t<depth>3</depth>\n"
     << "\t</size>\n"
     << "\t<object>\n"
     << "\t\t<name>" << a.category << "</name>\n"
     << "\t\t<bndbox>\n"
     << "\t\t\t<xmin>" << a.xmin << "</xmin>\n"
     << "\t\t\t<ymin>" << a.ymin << "</ymin>\n"
     << "\t\t\t<xmax>" << a.xmax << "</xmax>\n"
     << "\t\t\t<ymax>" << a.ymax << "</ymax>\n"
     << "\t\t</bndbox>\n"
     << "\t</object>\n"
     << "</annotation>\n";
  return os.str();
}

std::string annotations_to_csv(std::span<const Annotation> annotations) {
  std::string out(kCsvHeader);
  for (const Annotation& a : annotations) {
    out += a.filename + ',' + std::to_string(a.width) + ',' + std::to_string(a.height) + ',' +
           a.category + ',' + std::to_string(a.xmin) + ',' + std::to_string(a.ymin) + ',' +
           std::to_string(a.xmax) + ',' + std::to_string(a.ymax) + '\n';
  }
  return out;
}

std::vector<Annotation> parse_csv(std::string_view csv) {
  const std::string_view header = kCsvHeader.substr(0, kCsvHeader.size() - 1);
  const std::size_t first_nl = csv.find('\n');
  std::string_view first = csv.substr(0, first_nl);
  if (!first.empty() && first.back() == '\r') first.remove_suffix(1);
  if (first != header) throw Error(ErrorCode::BadHeader, "expected '" + std::string(header) + "'");

  std::vector<Annotation> out;
  if (first_nl == std::string_view::npos) return out;
  std::size_t pos = first_nl + 1;
  std::size_t line_no = 1;
  while (pos < csv.size()) {
    ++line_no;
    const std::size_t nl = csv.find('\n', pos);
    std::string_view line = csv.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? csv.size() : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    const auto bad = [&](const std::string& why) {
      return Error(ErrorCode::BadRow, "line " + std::to_string(line_no) + ": " + why);
    };
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 8) throw bad("expected 8 columns, found " + std::to_string(fields.size()));

    Annotation a;
    a.filename = std::string(fields[0]);
    a.category = std::string(fields[3]);
    if (!valid_filename(a.filename)) throw bad("invalid filename '" + a.filename + "'");
    int* ints[] = {&a.width, &a.height, nullptr, &a.xmin, &a.ymin, &a.xmax, &a.ymax};
    for (std::size_t i = 0; i < 7; ++i) {
      if (ints[i] && !parse_int(fields[i + 1], *ints[i])) {
        throw bad("column " + std::to_string(i + 2) + " is not an integer");
      }
    }
    try {
      validate_annotation(a);
    } catch (const Error& e) {
      throw bad(e.what());
    }
    out.push_back(std::move(a));
  }
  return out;
}

Annotation scale_annotation(const Annotation& a, double factor) {
  if (factor != 0.5) throw Error(ErrorCode::InvalidArgument, "only a 0.5 scale factor is supported");
  Annotation s = a;
  s.width = a.width / 2;
  s.height = a.height / 2;
  s.xmin = a.xmin / 2;
  s.ymin = a.ymin / 2;
  s.xmax = a.xmax / 2;
  s.ymax = a.ymax / 2;
  validate_annotation(s);
  return s;
}

DatasetSplit split_dataset(std::span<const Annotation> annotations, double ratio, std::uint64_t seed) {
  if (annotations.empty()) throw Error(ErrorCode::EmptyDataset, "nothing to split");
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorCode::InvalidArgument, "split ratio must lie in (0, 1)");
  std::vector<std::size_t> order(annotations.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Xoshiro256ss rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(annotations.size())));

  DatasetSplit split{{}, {}, ratio, seed};
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? split.train : split.test).push_back(annotations[order[i]]);
  }
  return split;
}

std::vector<Annotation> read_xml_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::IoError, dir + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Annotation> out;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + f.string());
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
      out.push_back(parse_annotation_xml(text));
    } catch (const Error& e) {
      throw Error(e.code(), f.filename().string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace cubesort::data
