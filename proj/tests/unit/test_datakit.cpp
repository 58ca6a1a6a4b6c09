#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cubesort/datakit.hpp"
#include "cubesort/error.hpp"
#include "cubesort/rng.hpp"

using namespace cubesort;
using namespace cubesort::data;

namespace {

std::string read_text(const std::string& name) {
  std::ifstream in(std::string(CUBESORT_TEST_DATA) + "/" + name, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

Annotation random_annotation(Xoshiro256ss& rng) {
  Annotation a;
  a.filename = (rng.below(2) ? "defect" : "intact") + std::to_string(rng.below(1000)) + ".jpg";
  a.width = static_cast<int>(rng.between(2, 800));
  a.height = static_cast<int>(rng.between(2, 800));
  a.category = rng.below(2) ? kDefect : kIntact;
  a.xmin = static_cast<int>(rng.below(a.width - 1));
  a.xmax = static_cast<int>(rng.between(a.xmin + 1, a.width));
  a.ymin = static_cast<int>(rng.below(a.height - 1));
  a.ymax = static_cast<int>(rng.between(a.ymin + 1, a.height));
  return a;
}

const Annotation kRow0{"defect0.jpg", 540, 610, "defect", 64, 92, 352, 322};

}  // namespace

TEST(Xml, LabelledFileParses) { EXPECT_EQ(parse_annotation_xml(read_text("defect0.xml")), kRow0); }

TEST(Xml, WhitespaceTrimmed) {
  const std::string xml =
      "<annotation><filename>  a.jpg \n</filename><size><width> 10 </width><height>10</height></size>"
      "<object><name> intact </name><bndbox><xmin>1</xmin><ymin>2</ymin><xmax>3</xmax><ymax> 4</ymax>"
      "</bndbox></object></annotation>";
  EXPECT_EQ(parse_annotation_xml(xml), (Annotation{"a.jpg", 10, 10, "intact", 1, 2, 3, 4}));
}

TEST(Xml, RoundTrip) {
  Xoshiro256ss rng(1);
  for (int i = 0; i < 200; ++i) {
    const Annotation a = random_annotation(rng);
    EXPECT_EQ(parse_annotation_xml(annotation_to_xml(a)), a);
  }
}

TEST(Xml, Errors) {
  std::string xml = read_text("defect0.xml");
  auto replaced = [&](const std::string& from, const std::string& to) {
    std::string s = xml;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  EXPECT_EQ(code_of([&] { parse_annotation_xml(replaced("<xmin>64", "<xmin>400")); }), ErrorCode::InvalidBox);
  EXPECT_EQ(code_of([&] { parse_annotation_xml(replaced("<name>defect", "<name>broken")); }),
            ErrorCode::UnknownCategory);
  EXPECT_EQ(code_of([&] { parse_annotation_xml(replaced("<ymax>322</ymax>", "")); }), ErrorCode::MissingElement);
  EXPECT_EQ(code_of([&] { parse_annotation_xml(replaced("<width>540", "<width>5x0")); }), ErrorCode::MalformedXml);
  EXPECT_EQ(code_of([&] { parse_annotation_xml("<annotation><filename>"); }), ErrorCode::MalformedXml);
  EXPECT_EQ(code_of([&] { parse_annotation_xml(""); }), ErrorCode::MalformedXml);
  EXPECT_EQ(code_of([&] { parse_annotation_xml("   \n"); }), ErrorCode::MalformedXml);
  const std::size_t obj = xml.find("<object>"), end = xml.find("</object>") + 9;
  std::string two = xml;
  two.insert(end, xml.substr(obj, end - obj));
  EXPECT_EQ(code_of([&] { parse_annotation_xml(two); }), ErrorCode::MalformedXml);
  std::string none = xml;
  none.erase(obj, end - obj);
  EXPECT_EQ(code_of([&] { parse_annotation_xml(none); }), ErrorCode::MissingElement);
  try {
    parse_annotation_xml(replaced("<ymax>322</ymax>", ""));
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("ymax"), std::string::npos);
  }
}

TEST(Xml, FuzzedTruncationsGiveStructuredErrors) {
  const std::string xml = read_text("defect0.xml");
  for (std::size_t n = 0; n + 1 < xml.size(); ++n) {
    try {
      parse_annotation_xml(std::string_view(xml).substr(0, n));
    } catch (const Error&) {
    }
  }
  Xoshiro256ss rng(2);
  for (int i = 0; i < 2000; ++i) {
    std::string s = xml;
    for (int k = 0; k < 3; ++k) s[rng.below(s.size())] = static_cast<char>(rng.below(256));
    try {
      const Annotation a = parse_annotation_xml(s);
      EXPECT_NO_THROW(validate_annotation(a));
    } catch (const Error&) {
    }
  }
}

TEST(Csv, EmptyListIsHeaderOnly) {
  EXPECT_EQ(annotations_to_csv({}), std::string(kCsvHeader));
  EXPECT_TRUE(parse_csv(kCsvHeader).empty());
}

TEST(Csv, RowZeroLine) {
  const std::vector<Annotation> v{kRow0};
  EXPECT_EQ(annotations_to_csv(v), std::string(kCsvHeader) + "defect0.jpg,540,610,defect,64,92,352,322\n");
}

TEST(Csv, LabelledRowsRoundTrip) {
  const std::string text = read_text("labelled_rows.csv");
  const auto rows = parse_csv(text);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], kRow0);
  EXPECT_EQ(rows[1], (Annotation{"defect1.jpg", 540, 610, "defect", 66, 61, 352, 340}));
  EXPECT_EQ(annotations_to_csv(rows), text);
}

TEST(Csv, RandomRoundTrip) {
  Xoshiro256ss rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Annotation> v;
    for (std::size_t i = 0, n = rng.below(20); i < n; ++i) v.push_back(random_annotation(rng));
    EXPECT_EQ(parse_csv(annotations_to_csv(v)), v);
  }
}

TEST(Csv, CarriageReturnsTolerated) {
  EXPECT_EQ(parse_csv("filename,width,height,class,xmin,ymin,xmax,ymax\r\ndefect0.jpg,540,610,defect,64,92,352,322\r\n"),
            std::vector<Annotation>{kRow0});
}

TEST(Csv, Errors) {
  EXPECT_EQ(code_of([] { parse_csv("filename,width\n"); }), ErrorCode::BadHeader);
  EXPECT_EQ(code_of([] { parse_csv(""); }), ErrorCode::BadHeader);
  const std::string h(kCsvHeader);
  EXPECT_EQ(code_of([&] { parse_csv(h + "a.jpg,1,2\n"); }), ErrorCode::BadRow);
  EXPECT_EQ(code_of([&] { parse_csv(h + "a.jpg,10,10,defect,1,1,x,5\n"); }), ErrorCode::BadRow);
  EXPECT_EQ(code_of([&] { parse_csv(h + "a.jpg,10,10,defect,5,1,2,5\n"); }), ErrorCode::BadRow);
  try {
    parse_csv(h + "defect0.jpg,540,610,defect,64,92,352,322\nbad\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Csv, FuzzedInputsGiveStructuredErrors) {
  const std::string text = read_text("labelled_rows.csv");
  Xoshiro256ss rng(4);
  for (int i = 0; i < 3000; ++i) {
    std::string s = text.substr(0, rng.below(text.size() + 1));
    if (!s.empty() && rng.below(2)) s[rng.below(s.size())] = static_cast<char>(rng.below(256));
    try {
      for (const auto& a : parse_csv(s)) EXPECT_NO_THROW(validate_annotation(a));
    } catch (const Error&) {
    }
  }
}

TEST(Scale, Examples) {
  EXPECT_EQ(scale_annotation(kRow0), (Annotation{"defect0.jpg", 270, 305, "defect", 32, 46, 176, 161}));
  EXPECT_EQ(scale_annotation({"a.jpg", 4, 4, "intact", 0, 0, 2, 2}), (Annotation{"a.jpg", 2, 2, "intact", 0, 0, 1, 1}));
  EXPECT_EQ(code_of([] { scale_annotation({"a.jpg", 4, 4, "intact", 0, 0, 1, 2}); }), ErrorCode::InvalidBox);
  EXPECT_EQ(code_of([] { scale_annotation(kRow0, 0.25); }), ErrorCode::InvalidArgument);
}

TEST(Scale, PreservesInvariantsOrThrows) {
  Xoshiro256ss rng(5);
  for (int i = 0; i < 5000; ++i) {
    const Annotation a = random_annotation(rng);
    try {
      const Annotation s = scale_annotation(a);
      EXPECT_NO_THROW(validate_annotation(s));
      EXPECT_EQ(s.xmax, a.xmax / 2);
      EXPECT_EQ(s.height, a.height / 2);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidBox);
    }
  }
}

TEST(Split, StandardRatioSizes) {
  std::vector<Annotation> all;
  for (int i = 0; i < 400; ++i) all.push_back({"f" + std::to_string(i) + ".jpg", 10, 10, "defect", 0, 0, 5, 5});
  const auto s7 = split_dataset(all, 0.7, 1);
  EXPECT_EQ(s7.train.size(), 280u);
  EXPECT_EQ(s7.test.size(), 120u);
  const auto s9 = split_dataset(all, 0.9, 1);
  EXPECT_EQ(s9.train.size(), 360u);
  EXPECT_EQ(s9.test.size(), 40u);
  EXPECT_EQ(split_dataset(all, 0.8, 1).test.size(), 80u);
}

TEST(Split, PartitionAndDeterminism) {
  Xoshiro256ss rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Annotation> all;
    const std::size_t n = 1 + rng.below(100);
    for (std::size_t i = 0; i < n; ++i) all.push_back({"f" + std::to_string(i) + ".jpg", 10, 10, "intact", 0, 0, 5, 5});
    const double ratio = rng.uniform(0.05, 0.95);
    const std::uint64_t seed = rng();
    const auto a = split_dataset(all, ratio, seed);
    const auto b = split_dataset(all, ratio, seed);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.test, b.test);
    EXPECT_EQ(a.train.size(), static_cast<std::size_t>(std::llround(ratio * n)));
    std::set<std::string> names;
    for (const auto& x : a.train) names.insert(x.filename);
    for (const auto& x : a.test) names.insert(x.filename);
    EXPECT_EQ(names.size(), n);
    EXPECT_EQ(a.train.size() + a.test.size(), n);
  }
}

TEST(Split, Errors) {
  EXPECT_EQ(code_of([] { split_dataset({}, 0.8, 1); }), ErrorCode::EmptyDataset);
  const std::vector<Annotation> one{kRow0};
  EXPECT_EQ(code_of([&] { split_dataset(one, 1.0, 1); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { split_dataset(one, 0.0, 1); }), ErrorCode::InvalidArgument);
}

TEST(Filename, Charset) {
  EXPECT_TRUE(valid_filename("defect0.jpg"));
  EXPECT_TRUE(valid_filename("a_b-c.ppm"));
  EXPECT_FALSE(valid_filename(""));
  EXPECT_FALSE(valid_filename("a,b.jpg"));
  EXPECT_FALSE(valid_filename("a b.jpg"));
}

TEST(XmlDirectory, ReadsSorted) {
  const auto dir = std::filesystem::temp_directory_path() / "cubesort_xmldir_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  Annotation b = kRow0;
  b.filename = "b.jpg";
  Annotation a = kRow0;
  a.filename = "a.jpg";
  std::ofstream(dir / "b.xml") << annotation_to_xml(b);
  std::ofstream(dir / "a.xml") << annotation_to_xml(a);
  std::ofstream(dir / "notes.txt") << "ignored";
  EXPECT_EQ(read_xml_directory(dir.string()), (std::vector<Annotation>{a, b}));
  std::filesystem::remove_all(dir);
}
