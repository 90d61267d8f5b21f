#pragma once

// File formats: JSON records for period data, binary field snapshots with a
// 64-byte header, and CSV series.

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hklab/error.hpp"
#include "hklab/lattice_recovery.hpp"
#include "hklab/period_lattice.hpp"
#include "hklab/semi_flat.hpp"

namespace hklab {

using json = nlohmann::json;

// ---- JSON ----

inline double json_number(const json& j, const std::string& what) {
  if (!j.is_number()) fail(ErrorCode::ConfigError, what + " must be a number");
  return j.get<double>();
}

inline Mat3 mat3_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) fail(ErrorCode::ConfigError, what + " must be a 3x3 array");
  Mat3 m;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_array() || j[i].size() != 3) fail(ErrorCode::ConfigError, what + " must be a 3x3 array");
    for (int k = 0; k < 3; ++k) m(i, k) = json_number(j[i][k], what);
  }
  return m;
}

inline json mat_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    out.push_back(row);
  }
  return out;
}

inline Vec3 vec3_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) fail(ErrorCode::ConfigError, what + " must have three entries");
  return Vec3(json_number(j[0], what), json_number(j[1], what), json_number(j[2], what));
}

// [[exponent, re, im], ...]
inline LaurentSeries laurent_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) fail(ErrorCode::ConfigError, what + " must be a list of [exponent, re, im]");
  LaurentSeries s;
  for (const auto& t : j) {
    if (!t.is_array() || t.size() != 3 || !t[0].is_number_integer())
      fail(ErrorCode::ConfigError, what + " terms must be [integer exponent, re, im]");
    s.terms.emplace_back(t[0].get<int>(), cplx(json_number(t[1], what), json_number(t[2], what)));
  }
  return s;
}

inline json laurent_to_json(const LaurentSeries& s) {
  json out = json::array();
  for (const auto& [e, c] : s.terms) out.push_back({e, c.real(), c.imag()});
  return out;
}

inline PeriodData period_data_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, "period data must be an object");
  PeriodData pd;
  for (const auto& [key, value] : j.items()) {
    if (key == "tau1") pd.tau1 = laurent_from_json(value, key);
    else if (key == "tau2") pd.tau2 = laurent_from_json(value, key);
    else if (key == "g") pd.g = laurent_from_json(value, key);
    else if (key == "sigma") pd.sigma = laurent_from_json(value, key);
    else if (key == "a") pd.a = json_number(value, key);
    else fail(ErrorCode::ConfigError, "unknown period data field '" + key + "'");
  }
  if (!(pd.a > 0.0)) fail(ErrorCode::ConfigError, "fiber area a must be positive");
  return pd;
}

inline json period_data_to_json(const PeriodData& pd) {
  return {{"tau1", laurent_to_json(pd.tau1)},
          {"tau2", laurent_to_json(pd.tau2)},
          {"g", laurent_to_json(pd.g)},
          {"sigma", laurent_to_json(pd.sigma)},
          {"a", pd.a}};
}

inline PeriodVector period_vector_from_json(const json& j, const HomologyBasis& b) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, "period vector must be an object");
  PeriodVector pv;
  pv.c = Eigen::MatrixXd::Zero(3, b.curves());
  for (const auto& [key, value] : j.items()) {
    if (key == "c") {
      if (!value.is_array() || value.size() != 3) fail(ErrorCode::ConfigError, "c must have three rows");
      for (int i = 0; i < 3; ++i) {
        if (!value[i].is_array() || int(value[i].size()) != b.curves())
          fail(ErrorCode::ConfigError, "c rows must have " + std::to_string(b.curves()) + " entries");
        for (int a = 0; a < b.curves(); ++a) pv.c(i, a) = json_number(value[i][a], "c");
      }
    } else if (key == "f_faces") {
      pv.f_faces = mat3_from_json(value, key);
    } else if (key == "f_long") {
      pv.f_long = mat3_from_json(value, key);
    } else if (key == "V") {
      pv.V = json_number(value, key);
    } else {
      fail(ErrorCode::ConfigError, "unknown period vector field '" + key + "'");
    }
  }
  return pv;
}

inline json period_vector_to_json(const PeriodVector& pv) {
  return {{"c", mat_to_json(pv.c)}, {"f_faces", mat_to_json(pv.f_faces)}, {"f_long", mat_to_json(pv.f_long)}, {"V", pv.V}};
}

inline json face_periods_to_json(const FacePeriods& fp) { return mat_to_json(fp.f); }

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ConfigError, path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

// ---- binary fields ----
//
// Header (64 bytes, little-endian):
//   0  char[8]  magic "HKLABFLD"
//   8  u32      version
//  12  u32      kind
//  16  u32[4]   dims (unused trailing dims are 1)
//  32  u32      components
//  36  u32      metadata count (doubles following the header)
//  40  u64      payload count (doubles following the metadata)
//  48  pad to 64
// The payload is component-major: data[c * prod(dims) + point].

inline constexpr char kFieldMagic[8] = {'H', 'K', 'L', 'A', 'B', 'F', 'L', 'D'};
inline constexpr std::uint32_t kFieldVersion = 1;

enum class FieldKind : std::uint32_t { Generic = 0, TorusTwoForm = 1, NeckTwoForm = 2, TorusOneForm = 3 };

struct FieldSnapshot {
  FieldKind kind = FieldKind::Generic;
  std::array<std::uint32_t, 4> dims{1, 1, 1, 1};
  std::uint32_t components = 1;
  std::vector<double> metadata;
  std::vector<double> data;

  std::uint64_t points() const { return std::uint64_t(dims[0]) * dims[1] * dims[2] * dims[3]; }
};

namespace detail {

template <class T>
void put(std::vector<char>& buf, std::size_t offset, T v) {
  std::memcpy(buf.data() + offset, &v, sizeof(T));
}

template <class T>
T get(const std::vector<char>& buf, std::size_t offset) {
  T v;
  std::memcpy(&v, buf.data() + offset, sizeof(T));
  return v;
}

}  // namespace detail

inline void write_field(const std::string& path, const FieldSnapshot& f) {
  if (f.data.size() != f.points() * f.components)
    fail(ErrorCode::InvalidArgument, "field payload does not match dims * components");
  std::vector<char> header(64, 0);
  std::memcpy(header.data(), kFieldMagic, 8);
  detail::put<std::uint32_t>(header, 8, kFieldVersion);
  detail::put<std::uint32_t>(header, 12, static_cast<std::uint32_t>(f.kind));
  for (int k = 0; k < 4; ++k) detail::put<std::uint32_t>(header, 16 + 4 * k, f.dims[k]);
  detail::put<std::uint32_t>(header, 32, f.components);
  detail::put<std::uint32_t>(header, 36, static_cast<std::uint32_t>(f.metadata.size()));
  detail::put<std::uint64_t>(header, 40, f.data.size());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out.write(header.data(), 64);
  out.write(reinterpret_cast<const char*>(f.metadata.data()), std::streamsize(f.metadata.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(f.data.data()), std::streamsize(f.data.size() * sizeof(double)));
  if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

inline FieldSnapshot read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::vector<char> header(64);
  if (!in.read(header.data(), 64)) fail(ErrorCode::IoError, path + ": truncated header");
  if (std::memcmp(header.data(), kFieldMagic, 8) != 0) fail(ErrorCode::IoError, path + ": not a field file");
  if (detail::get<std::uint32_t>(header, 8) != kFieldVersion) fail(ErrorCode::IoError, path + ": unsupported version");
  FieldSnapshot f;
  f.kind = static_cast<FieldKind>(detail::get<std::uint32_t>(header, 12));
  for (int k = 0; k < 4; ++k) f.dims[k] = detail::get<std::uint32_t>(header, 16 + 4 * k);
  f.components = detail::get<std::uint32_t>(header, 32);
  f.metadata.resize(detail::get<std::uint32_t>(header, 36));
  const auto count = detail::get<std::uint64_t>(header, 40);
  if (count != f.points() * f.components) fail(ErrorCode::IoError, path + ": payload count mismatch");
  f.data.resize(count);
  in.read(reinterpret_cast<char*>(f.metadata.data()), std::streamsize(f.metadata.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(f.data.data()), std::streamsize(f.data.size() * sizeof(double)));
  if (!in) fail(ErrorCode::IoError, path + ": truncated payload");
  return f;
}

// ---- CSV ----

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
};

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string to_csv(const Table& t) {
  std::ostringstream os;
  for (std::size_t k = 0; k < t.header.size(); ++k) os << (k ? "," : "") << t.header[k];
  os << "\n";
  const std::size_t rows = t.columns.empty() ? 0 : t.columns[0].size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < t.columns.size(); ++k) os << (k ? "," : "") << format_double(t.columns[k][r]);
    os << "\n";
  }
  return os.str();
}

inline Table parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Table t;
  if (!std::getline(in, line)) return t;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.header.push_back(cell);
  }
  t.columns.resize(t.header.size());
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::size_t k = 0;
    while (std::getline(ls, cell, ',')) {
      if (k >= t.columns.size()) fail(ErrorCode::IoError, "csv line " + std::to_string(lineno) + ": too many cells");
      try {
        t.columns[k].push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail(ErrorCode::IoError, "csv line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
      ++k;
    }
    if (k != t.columns.size()) fail(ErrorCode::IoError, "csv line " + std::to_string(lineno) + ": too few cells");
  }
  return t;
}

inline Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

}  // namespace hklab
