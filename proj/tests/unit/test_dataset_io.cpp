#include <gtest/gtest.h>

#include <sstream>

#include "leafdet/dataset_io.hpp"
#include "leafdet/error.hpp"
#include "leafdet/json_format.hpp"

namespace leafdet {
namespace {

std::string error_of(const std::string& text, bool detections = false) {
  std::istringstream in(text);
  try {
    if (detections) {
      parse_detections(in);
    } else {
      parse_annotations(in);
    }
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

TEST(FormatDecimalTest, Examples) {
  EXPECT_EQ(format_decimal(12.5), "12.5");
  EXPECT_EQ(format_decimal(3.0), "3");
  EXPECT_EQ(format_decimal(0.1234567), "0.123457");
  EXPECT_EQ(format_decimal(-0.0), "0");
  EXPECT_EQ(format_decimal(-0.0000001), "0");
  EXPECT_EQ(format_decimal(-2.25), "-2.25");
}

TEST(QuoteJsonTest, Escapes) {
  EXPECT_EQ(quote_json("a\"b\\c\n"), "\"a\\\"b\\\\c\\n\"");
}

TEST(AnnotationsTest, ParseCanonicalLine) {
  std::istringstream in(
      R"({"image":"a.png","width":100,"height":50,"objects":[{"label":"leaf","box":[0,0,10,20.5]}]})"
      "\n\n");
  const auto images = parse_annotations(in);
  ASSERT_EQ(images.size(), 1u);
  EXPECT_EQ(images[0].size, ImageSize(100, 50));
  EXPECT_EQ(images[0].objects[0].box, BBox(0, 0, 10, 20.5));
  EXPECT_EQ(format_annotations(images),
            R"({"image":"a.png","width":100,"height":50,"objects":[{"label":"leaf","box":[0,0,10,20.5]}]})"
            "\n");
}

TEST(AnnotationsTest, RoundTrip) {
  const std::vector<AnnotatedImage> images{
      {"x.ppm", ImageSize(64, 48), {{BBox(1.25, 2, 30.5, 40), "rust"}, {BBox(0, 0, 64, 48), "blight"}}},
      {"y.ppm", ImageSize(10, 10), {}}};
  std::istringstream in(format_annotations(images));
  EXPECT_EQ(parse_annotations(in), images);
}

TEST(DetectionsTest, RoundTrip) {
  const std::vector<DetectionRecord> recs{
      {"x.ppm", {ScoredBox(BBox(1, 2, 3, 4), 0.875, "rust"), ScoredBox(BBox(5, 5, 9, 9), 1, "rust")}},
      {"y.ppm", {}}};
  const std::string text = format_detections(recs);
  EXPECT_NE(text.find(R"("score":0.875)"), std::string::npos);
  std::istringstream in(text);
  EXPECT_EQ(parse_detections(in), recs);
}

TEST(AnnotationsTest, InvalidBoxNamesLine) {
  const std::string msg = error_of(
      "{\"image\":\"a\",\"width\":50,\"height\":50,\"objects\":[]}\n"
      "{\"image\":\"b\",\"width\":50,\"height\":50,\"objects\":[{\"label\":\"l\",\"box\":[10,10,5,20]}]}\n");
  EXPECT_NE(msg.find("x2 <= x1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("at line 2"), std::string::npos) << msg;
}

TEST(AnnotationsTest, Rejections) {
  EXPECT_NE(error_of("{not json}\n").find("at line 1"), std::string::npos);
  EXPECT_NE(error_of(R"({"image":"a","width":50,"height":50})").find("objects"), std::string::npos);
  EXPECT_NE(error_of(R"({"image":"a","width":50,"height":50,"objects":[],"extra":1})").find("extra"),
            std::string::npos);
  EXPECT_FALSE(error_of(R"({"image":"a","width":10,"height":10,"objects":[{"label":"l","box":[0,0,11,5]}]})").empty());
  EXPECT_FALSE(error_of(R"({"image":"a","width":0,"height":10,"objects":[]})").empty());
  EXPECT_FALSE(error_of(R"({"image":"a","width":10,"height":10,"objects":[{"label":"l","box":[0,0,1]}]})").empty());
  EXPECT_FALSE(error_of(R"({"image":5,"width":10,"height":10,"objects":[]})").empty());
}

TEST(DetectionsTest, Rejections) {
  EXPECT_NE(error_of(R"({"image":"a","detections":[{"label":"l","score":1.5,"box":[0,0,1,1]}]})", true)
                .find("at line 1"),
            std::string::npos);
  EXPECT_FALSE(error_of(R"({"image":"a","detections":[{"label":"l","box":[0,0,1,1]}]})", true).empty());
}

TEST(DetectionsTest, ClassListEnforced) {
  const std::vector<std::string> classes{"rust"};
  std::istringstream in(R"({"image":"a","detections":[{"label":"mold","score":0.5,"box":[0,0,1,1]}]})");
  EXPECT_THROW(parse_detections(in, classes), ValidationError);
}

TEST(ClassListTest, ParseAndReject) {
  EXPECT_EQ(parse_class_list(R"(["a","b"])"), (std::vector<std::string>{"a", "b"}));
  EXPECT_THROW(parse_class_list(R"(["a","a"])"), ValidationError);
  EXPECT_THROW(parse_class_list(R"({"a":1})"), ValidationError);
  EXPECT_THROW(parse_class_list(R"([1])"), ValidationError);
}

TEST(KeyedViewsTest, DuplicateAnnotationRejectedDetectionsMerged) {
  const std::vector<AnnotatedImage> dup{{"a", ImageSize(5, 5), {}}, {"a", ImageSize(5, 5), {}}};
  EXPECT_THROW(to_ground_truth(dup), ValidationError);
  const std::vector<DetectionRecord> recs{{"a", {ScoredBox(BBox(0, 0, 1, 1), 0.5, "l")}},
                                          {"a", {ScoredBox(BBox(1, 1, 2, 2), 0.4, "l")}}};
  EXPECT_EQ(to_detections(recs).at("a").size(), 2u);
}

TEST(FileTest, MissingFileIsIoError) {
  EXPECT_THROW(read_annotations("/nonexistent/gt.jsonl"), IoError);
  EXPECT_THROW(read_class_list("/nonexistent/classes.json"), IoError);
}

}  // namespace
}  // namespace leafdet
