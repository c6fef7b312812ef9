#include <gtest/gtest.h>

#include <random>

#include <specshape/label_map.hpp>

#include "test_support.hpp"

using namespace specshape;
using testutil::TempDir;

namespace {

ClassTable table(std::size_t n) {
    ClassTable t;
    for (std::size_t i = 1; i <= n; ++i) t[ClassId(i)] = {"class-" + std::to_string(i), default_class_color(ClassId(i))};
    return t;
}

LabelMap round_trip(const LabelMap& m, const TempDir& dir, const std::string& name = "m.png") {
    write_label_map(m, dir / name);
    return read_label_map(dir / name, m.rows, m.cols);
}

}  // namespace

TEST(LabelMap, SinglePixelZero) {
    TempDir dir;
    LabelMap m(1, 1);
    EXPECT_EQ(round_trip(m, dir), m);
}

TEST(LabelMap, TwoByTwo) {
    TempDir dir;
    LabelMap m(2, 2, table(2));
    m.labels = {0, 1, 2, 1};
    const auto back = round_trip(m, dir);
    EXPECT_EQ(back, m);
    EXPECT_EQ(back.class_table.at(2).name, "class-2");
}

TEST(LabelMap, RandomSevenClasses) {
    TempDir dir;
    std::mt19937 rng(64);
    LabelMap m(64, 64, table(7));
    for (auto& l : m.labels) l = ClassId(rng() % 8);
    EXPECT_EQ(round_trip(m, dir), m);
    // Deterministic encoding: same map, same bytes.
    write_label_map(m, dir / "again.png");
    EXPECT_EQ(testutil::read_file(dir / "m.png"), testutil::read_file(dir / "again.png"));
}

TEST(LabelMap, FullPaletteAndNames) {
    TempDir dir;
    LabelMap m(1, 255, table(255));
    for (std::size_t i = 0; i < 255; ++i) m.labels[i] = ClassId(i + 1);
    m.class_table[7].name = "PF-black";
    m.class_table[9].name = "name with spaces";
    EXPECT_EQ(round_trip(m, dir), m);
}

TEST(LabelMap, PaletteOverflow) {
    TempDir dir;
    LabelMap big(1, 1, table(256));
    EXPECT_THROW(write_label_map(big, dir / "x.png"), IoError);
    LabelMap id(1, 1, {{300, {"hi", {}}}});
    id.labels[0] = 300;
    EXPECT_THROW(write_label_map(id, dir / "y.png"), IoError);
}

TEST(LabelMap, MissingClassEntryIsRejected) {
    TempDir dir;
    LabelMap m(1, 2, table(1));
    m.labels = {1, 2};
    EXPECT_THROW(write_label_map(m, dir / "x.png"), IoError);
}

TEST(LabelMap, DimensionMismatchOnRead) {
    TempDir dir;
    LabelMap m(3, 4, table(1));
    write_label_map(m, dir / "m.png");
    EXPECT_NO_THROW(read_label_map(dir / "m.png", 3, 4));
    EXPECT_THROW(read_label_map(dir / "m.png", 4, 3), IoError);
    EXPECT_THROW(read_label_map(dir / "m.png", 3, 5), IoError);
}

TEST(LabelMap, ReadErrors) {
    TempDir dir;
    EXPECT_THROW(read_label_map(dir / "missing.png"), IoError);
    testutil::write_file(dir / "junk.png", "not a png at all");
    EXPECT_THROW(read_label_map(dir / "junk.png"), IoError);
    // Truncated PNG.
    LabelMap m(8, 8, table(2));
    m.labels[5] = 2;
    write_label_map(m, dir / "ok.png");
    const auto bytes = testutil::read_file(dir / "ok.png");
    testutil::write_file(dir / "cut.png", bytes.substr(0, bytes.size() / 2));
    EXPECT_THROW(read_label_map(dir / "cut.png"), IoError);
}

TEST(LabelMap, ClassTableSidecar) {
    const ClassTable t{{1, {"PE", {255, 0, 16}}}, {12, {"PF-black", {0, 1, 2}}}};
    const auto text = format_class_table(t);
    EXPECT_EQ(text, "1\tPE\t#FF0010\n12\tPF-black\t#000102\n");
    EXPECT_EQ(parse_class_table(text), t);
    EXPECT_EQ(class_table_path("out/labels.png"), std::filesystem::path("out/labels.classes.tsv"));
    EXPECT_THROW(parse_class_table("1\tPE\n"), IoError);
    EXPECT_THROW(parse_class_table("x\tPE\t#000000\n"), IoError);
    EXPECT_THROW(parse_class_table("1\tPE\t#00000\n"), IoError);
}
