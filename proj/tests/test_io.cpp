#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <sstream>
#include <unistd.h>

#include "qpot/errors.hpp"
#include "qpot/io.hpp"
#include "support.hpp"

using namespace qpot;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qpot_io_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

ScalarField awkward_scalar_field() {
  const Grid g(7, 5, Domain{-1.25, 3.5, 0.1, 0.7});
  ScalarField u(g, 0.0);
  for (double& v : u.values) v = testing::uniform(-1e3, 1e3);
  u[0] = kInfinity;
  u[1] = -kInfinity;
  u[2] = std::numeric_limits<double>::quiet_NaN();
  u[3] = std::numeric_limits<double>::denorm_min();
  u[4] = -0.0;
  u[5] = std::numeric_limits<double>::max();
  return u;
}

std::uint32_t bitwise_crc32(std::string_view data) {
  std::uint32_t crc = 0xFFFFFFFFu;
  for (unsigned char byte : data) {
    crc ^= byte;
    for (int k = 0; k < 8; ++k) crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
  }
  return ~crc;
}

}  // namespace

TEST_CASE("scalar field round trip is bit exact") {
  const ScalarField u = awkward_scalar_field();
  const std::string bytes = encode_field(u);
  CHECK(bytes.size() == kFieldHeaderBytes + 4 + 4 + 32 + 1 + 8 * u.values.size());
  CHECK(bytes.substr(0, 8) == "QPOTFLD1");
  CHECK(peek_field_type(bytes) == FieldType::Scalar);
  const ScalarField v = decode_scalar_field(bytes);
  CHECK(v.grid.nx() == u.grid.nx());
  CHECK(v.grid.ny() == u.grid.ny());
  CHECK(v.grid.domain().xmin == u.grid.domain().xmin);
  CHECK(v.grid.domain().ymax == u.grid.domain().ymax);
  for (NodeIndex n = 0; n < u.values.size(); ++n) CHECK(same_bits(u[n], v[n]));
}

TEST_CASE("vector and label fields round trip") {
  const Grid g(6, 9, Domain{0, 1, -2, 2});
  VectorField w(g, Vec2{});
  LabelField labels(g, NodeLabel::Unknown);
  for (NodeIndex n = 0; n < g.size(); ++n) {
    w[n] = {testing::uniform(-1, 1), testing::uniform(-1, 1)};
    labels[n] = static_cast<NodeLabel>(n % 4);
  }
  w[3] = {kNaN, kInfinity};
  const VectorField w2 = decode_vector_field(encode_field(w));
  for (NodeIndex n = 0; n < g.size(); ++n) {
    CHECK(same_bits(w[n].x, w2[n].x));
    CHECK(same_bits(w[n].y, w2[n].y));
  }
  const LabelField l2 = decode_label_field(encode_field(labels));
  CHECK(l2.values == labels.values);
  CHECK(peek_field_type(encode_field(labels)) == FieldType::Labels);
}

TEST_CASE("field files round trip through disk") {
  const fs::path dir = scratch_dir("disk");
  const ScalarField u = awkward_scalar_field();
  write_field(dir / "u.bin", u);
  const ScalarField v = read_scalar_field(dir / "u.bin");
  for (NodeIndex n = 0; n < u.values.size(); ++n) CHECK(same_bits(u[n], v[n]));
  CHECK_THROWS_AS(read_vector_field(dir / "u.bin"), FormatError);
  CHECK_THROWS(read_scalar_field(dir / "missing.bin"));
  fs::remove_all(dir);
}

TEST_CASE("malformed field files are rejected") {
  const std::string good = encode_field(awkward_scalar_field());
  CHECK_THROWS_AS(decode_scalar_field(good.substr(0, good.size() - 1)), FormatError);
  CHECK_THROWS_AS(decode_scalar_field(good + "x"), FormatError);
  CHECK_THROWS_AS(decode_scalar_field(good.substr(0, 40)), FormatError);
  CHECK_THROWS_AS(decode_scalar_field(""), FormatError);

  std::string bad_magic = good;
  bad_magic[3] = 'X';
  CHECK_THROWS_AS(decode_scalar_field(bad_magic), FormatError);

  std::string bad_tag = good;
  bad_tag[kFieldHeaderBytes + 40] = 9;
  CHECK_THROWS_AS(decode_scalar_field(bad_tag), FormatError);
  CHECK_THROWS_AS(decode_vector_field(good), FormatError);
  CHECK_THROWS_AS(decode_label_field(good), FormatError);

  std::string bad_shape = good;
  std::uint32_t one = 1;
  std::memcpy(bad_shape.data() + kFieldHeaderBytes, &one, 4);
  CHECK_THROWS_AS(decode_scalar_field(bad_shape), FormatError);

  std::string bad_domain = good;
  const double flipped = 10.0;
  std::memcpy(bad_domain.data() + kFieldHeaderBytes + 8, &flipped, 8);  // xmin > xmax
  CHECK_THROWS_AS(decode_scalar_field(bad_domain), FormatError);
}

TEST_CASE("shortest round-trip number text") {
  for (int k = 0; k < 2000; ++k) {
    const double x = std::ldexp(testing::uniform(-1, 1), static_cast<int>(testing::uniform(-300, 300)));
    CHECK(same_bits(parse_double(format_double(x)), x));
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(kInfinity) == "inf");
  CHECK(format_double(-kInfinity) == "-inf");
  CHECK(format_double(kNaN) == "nan");
  CHECK(std::isinf(parse_double("inf")));
  CHECK(std::isnan(parse_double("nan")));
  CHECK(parse_double("1e-3") == 0.001);
  CHECK_THROWS_AS(parse_double("1.5x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_double(""), std::invalid_argument);
}

TEST_CASE("field CSV round trip") {
  const ScalarField u = awkward_scalar_field();
  std::istringstream in(field_csv(u));
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,y,u");
  std::size_t finite = 0;
  for (double v : u.values) finite += std::isfinite(v);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const Vec2 p{parse_double(line.substr(0, c1)), parse_double(line.substr(c1 + 1, c2 - c1 - 1))};
    const double value = parse_double(line.substr(c2 + 1));
    const auto i = static_cast<std::size_t>(std::lround((p.x - u.grid.domain().xmin) / u.grid.h1()));
    const auto j = static_cast<std::size_t>(std::lround((p.y - u.grid.domain().ymin) / u.grid.h2()));
    CHECK(same_bits(u.at(i, j), value));
    ++rows;
  }
  CHECK(rows == finite);
}

TEST_CASE("path CSV") {
  const Path p({{0, 0}, {3, 4}, {3, 5}});
  CHECK(path_csv(p) == "s,x,y\n0,0,0\n5,3,4\n6,3,5\n");
}

TEST_CASE("crc32 matches the reference algorithm") {
  CHECK(crc32_of("123456789") == 0xCBF43926u);
  CHECK(crc32_of("") == 0u);
  for (int k = 0; k < 50; ++k) {
    std::string data(static_cast<std::size_t>(testing::uniform(0, 500)), '\0');
    for (char& c : data) c = static_cast<char>(testing::uniform(0, 256));
    CHECK(crc32_of(data) == bitwise_crc32(data));
  }
  const fs::path dir = scratch_dir("crc");
  atomic_write(dir / "f.txt", "123456789");
  CHECK(crc32_of_file(dir / "f.txt") == 0xCBF43926u);
  fs::remove_all(dir);
}

TEST_CASE("atomic write replaces content and leaves no temporaries") {
  const fs::path dir = scratch_dir("atomic");
  const fs::path target = dir / "nested" / "out.txt";
  atomic_write(target, "first");
  CHECK(read_file(target) == "first");
  atomic_write(target, "second version");
  CHECK(read_file(target) == "second version");
  std::size_t entries = 0;
  for (const auto& e : fs::directory_iterator(target.parent_path())) {
    ++entries;
    CHECK(e.path().filename() == "out.txt");
  }
  CHECK(entries == 1);
  CHECK_THROWS(read_file(dir / "absent"));
  fs::remove_all(dir);
}
