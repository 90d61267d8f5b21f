#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>

#include <unistd.h>

#include "hklab/io.hpp"
#include "hklab/plot.hpp"

using namespace hklab;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hklab_io_" + name + "_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

std::string code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return std::string(error_name(e.code()));
  }
  return "no error";
}

}  // namespace

TEST(Json, PeriodDataRoundTrip) {
  PeriodData pd;
  pd.tau1.terms = {{0, {1.0, 0.0}}};
  pd.tau2.terms = {{0, {0.0, 1.0}}, {1, {0.1, -0.2}}};
  pd.g.terms = {{-1, {0.5, 0.25}}};
  pd.a = 1.5;
  const PeriodData back = period_data_from_json(period_data_to_json(pd));
  EXPECT_EQ(back.tau2.terms, pd.tau2.terms);
  EXPECT_EQ(back.g.terms, pd.g.terms);
  EXPECT_EQ(back.a, 1.5);
  EXPECT_EQ(code_of([] { period_data_from_json(json{{"a", 1.0}, {"tau3", json::array()}}); }), "ConfigError");
  EXPECT_EQ(code_of([] { period_data_from_json(json{{"a", -1.0}}); }), "ConfigError");
  EXPECT_EQ(code_of([] { laurent_from_json(json::array({json::array({0.5, 1, 0})}), "x"); }), "ConfigError");
}

TEST(Json, PeriodVectorRoundTrip) {
  const HomologyBasis b = alh_basis();
  PeriodVector pv;
  pv.c = Eigen::MatrixXd::Random(3, 8);
  pv.f_faces = Mat3::Random();
  pv.f_long = Mat3::Random();
  pv.V = 0.75;
  const PeriodVector back = period_vector_from_json(period_vector_to_json(pv), b);
  EXPECT_EQ(back.c, pv.c);
  EXPECT_EQ(back.f_faces, pv.f_faces);
  EXPECT_EQ(back.V, pv.V);
  json bad = period_vector_to_json(pv);
  EXPECT_EQ(code_of([&] { period_vector_from_json(bad, k3_basis()); }), "ConfigError");
  bad["extra"] = 1;
  EXPECT_EQ(code_of([&] { period_vector_from_json(bad, b); }), "ConfigError");
  EXPECT_EQ(code_of([] { mat3_from_json(json::array({1, 2, 3}), "m"); }), "ConfigError");
}

TEST(Json, FileErrors) {
  const fs::path d = scratch_dir("json");
  EXPECT_EQ(code_of([&] { read_json_file((d / "missing.json").string()); }), "IoError");
  write_text_file((d / "broken.json").string(), "{\"kind\": ");
  EXPECT_EQ(code_of([&] { read_json_file((d / "broken.json").string()); }), "ConfigError");
  fs::remove_all(d);
}

TEST(Field, RoundTripAndHeader) {
  const fs::path d = scratch_dir("field");
  FieldSnapshot f;
  f.kind = FieldKind::TorusTwoForm;
  f.dims = {2, 3, 4, 5};
  f.components = 2;
  f.metadata = {8.0, 1e-8};
  for (std::uint64_t k = 0; k < f.points() * f.components; ++k) f.data.push_back(0.5 * double(k) - 3.0);
  const std::string path = (d / "x.fld").string();
  write_field(path, f);
  EXPECT_EQ(fs::file_size(path), 64u + 8u * (f.metadata.size() + f.data.size()));
  {
    std::ifstream in(path, std::ios::binary);
    char magic[8];
    in.read(magic, 8);
    EXPECT_EQ(std::string(magic, 8), "HKLABFLD");
  }
  const FieldSnapshot g = read_field(path);
  EXPECT_EQ(g.kind, f.kind);
  EXPECT_EQ(g.dims, f.dims);
  EXPECT_EQ(g.components, f.components);
  EXPECT_EQ(g.metadata, f.metadata);
  EXPECT_EQ(g.data, f.data);

  // truncation and a foreign file are both rejected
  fs::resize_file(path, 100);
  EXPECT_EQ(code_of([&] { read_field(path); }), "IoError");
  write_text_file(path, std::string(80, 'x'));
  EXPECT_EQ(code_of([&] { read_field(path); }), "IoError");
  f.data.pop_back();
  EXPECT_EQ(code_of([&] { write_field(path, f); }), "InvalidArgument");
  fs::remove_all(d);
}

TEST(Csv, RoundTripIsExact) {
  Table t{{"x", "y"}, {{0.1, 1.0 / 3.0, -2e-300}, {std::nan(""), 1e300, 4.0}}};
  const Table back = parse_csv(to_csv(t));
  EXPECT_EQ(back.header, t.header);
  EXPECT_TRUE(std::isnan(back.columns[1][0]));
  EXPECT_EQ(back.columns[0], t.columns[0]);
  EXPECT_EQ(back.columns[1][1], 1e300);
  EXPECT_EQ(code_of([] { parse_csv("a,b\n1\n"); }), "IoError");
  EXPECT_EQ(code_of([] { parse_csv("a\nfoo\n"); }), "IoError");
}

TEST(Plot, ConstantSlopeSeries) {
  Series s{"decay", "rho", "sup", {}, {}};
  for (int k = 0; k < 6; ++k) {
    s.x.push_back(2.0 + k);
    s.y.push_back(3.0 * std::exp(-1.7 * (2.0 + k)));
  }
  const Plot p = emit_plot(s);
  EXPECT_NEAR(p.fit.slope, -1.7, 1e-12);
  EXPECT_NE(p.svg.find("<svg"), std::string::npos);
  EXPECT_NE(p.svg.find("slope d(ln y)/dx = -1.7"), std::string::npos);
  EXPECT_NE(p.svg.find("decay"), std::string::npos);
}

TEST(Plot, FlatSeriesHasZeroSlope) {
  const Plot p = emit_plot(Series{"flat", "x", "y", {0, 1, 2}, {5, 5, 5}});
  EXPECT_NE(p.svg.find("slope d(ln y)/dx = 0<"), std::string::npos);
}

TEST(Plot, Errors) {
  EXPECT_EQ(code_of([] { emit_plot(Series{"t", "x", "y", {}, {}}); }), "EmptySeries");
  EXPECT_EQ(code_of([] { emit_plot(Series{"t", "x", "y", {1}, {1}}); }), "EmptySeries");
  EXPECT_EQ(code_of([] { emit_plot(Series{"t", "x", "y", {1, 2}, {1, 0}}); }), "InvalidArgument");
  EXPECT_EQ(code_of([] { emit_plot(Series{"t", "x", "y", {1, 2}, {1}}); }), "InvalidArgument");
}
