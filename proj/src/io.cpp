#include "qpot/io.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <system_error>
#include <unistd.h>

#include "qpot/errors.hpp"

namespace qpot {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((bits >> (8 * k)) & 0xFF));
}

/// Sequential little-endian reader over a byte buffer.
class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t{static_cast<std::uint8_t>(bytes_[pos_ + k])} << (8 * k);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t{static_cast<std::uint8_t>(bytes_[pos_ + k])} << (8 * k);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("field file is truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

struct Header {
  std::uint32_t nx;
  std::uint32_t ny;
  Domain domain;
  FieldType type;
};

std::string encode_header(const Grid& g, FieldType type) {
  if (g.nx() > std::numeric_limits<std::uint32_t>::max() ||
      g.ny() > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError("grid is too large for the field file format");
  }
  std::string out(kFieldMagic);
  out.resize(kFieldHeaderBytes, '\0');
  put_u32(out, static_cast<std::uint32_t>(g.nx()));
  put_u32(out, static_cast<std::uint32_t>(g.ny()));
  const Domain& d = g.domain();
  put_f64(out, d.xmin);
  put_f64(out, d.xmax);
  put_f64(out, d.ymin);
  put_f64(out, d.ymax);
  out.push_back(static_cast<char>(type));
  return out;
}

Header decode_header(Reader& in, std::string_view bytes) {
  if (bytes.size() < kFieldHeaderBytes) throw FormatError("field file is truncated");
  if (bytes.substr(0, kFieldMagic.size()) != kFieldMagic) {
    throw FormatError("not a field file (bad magic)");
  }
  for (std::size_t k = 0; k < kFieldHeaderBytes; ++k) in.u8();
  Header h;
  h.nx = in.u32();
  h.ny = in.u32();
  h.domain.xmin = in.f64();
  h.domain.xmax = in.f64();
  h.domain.ymin = in.f64();
  h.domain.ymax = in.f64();
  const std::uint8_t tag = in.u8();
  if (tag < 1 || tag > 3) throw FormatError("unknown field type tag " + std::to_string(tag));
  h.type = static_cast<FieldType>(tag);
  if (h.nx < 2 || h.ny < 2) throw FormatError("field shape must be at least 2 x 2");
  const bool finite = std::isfinite(h.domain.xmin) && std::isfinite(h.domain.xmax) &&
                      std::isfinite(h.domain.ymin) && std::isfinite(h.domain.ymax);
  if (!finite || !(h.domain.xmax > h.domain.xmin) || !(h.domain.ymax > h.domain.ymin)) {
    throw FormatError("field domain is empty or not finite");
  }
  return h;
}

Header checked_header(Reader& in, std::string_view bytes, FieldType expected,
                      std::size_t bytes_per_node) {
  const Header h = decode_header(in, bytes);
  if (h.type != expected) {
    throw FormatError("field type tag " + std::to_string(static_cast<int>(h.type)) +
                      " does not match the requested type " +
                      std::to_string(static_cast<int>(expected)));
  }
  const std::size_t nodes = std::size_t{h.nx} * h.ny;
  if (in.remaining() != nodes * bytes_per_node) {
    std::ostringstream msg;
    msg << "field payload has " << in.remaining() << " bytes, expected " << nodes * bytes_per_node
        << " for a " << h.nx << " x " << h.ny << " grid";
    throw FormatError(msg.str());
  }
  return h;
}

}  // namespace

std::string encode_field(const ScalarField& field) {
  std::string out = encode_header(field.grid, FieldType::Scalar);
  out.reserve(out.size() + 8 * field.values.size());
  for (double v : field.values) put_f64(out, v);
  return out;
}

std::string encode_field(const VectorField& field) {
  std::string out = encode_header(field.grid, FieldType::Vector);
  out.reserve(out.size() + 16 * field.values.size());
  for (Vec2 v : field.values) {
    put_f64(out, v.x);
    put_f64(out, v.y);
  }
  return out;
}

std::string encode_field(const LabelField& field) {
  std::string out = encode_header(field.grid, FieldType::Labels);
  for (NodeLabel v : field.values) out.push_back(static_cast<char>(v));
  return out;
}

ScalarField decode_scalar_field(std::string_view bytes) {
  Reader in(bytes);
  const Header h = checked_header(in, bytes, FieldType::Scalar, 8);
  ScalarField field(Grid(h.nx, h.ny, h.domain), 0.0);
  for (double& v : field.values) v = in.f64();
  return field;
}

VectorField decode_vector_field(std::string_view bytes) {
  Reader in(bytes);
  const Header h = checked_header(in, bytes, FieldType::Vector, 16);
  VectorField field(Grid(h.nx, h.ny, h.domain), Vec2{});
  for (Vec2& v : field.values) {
    v.x = in.f64();
    v.y = in.f64();
  }
  return field;
}

LabelField decode_label_field(std::string_view bytes) {
  Reader in(bytes);
  const Header h = checked_header(in, bytes, FieldType::Labels, 1);
  LabelField field(Grid(h.nx, h.ny, h.domain), NodeLabel::Unknown);
  for (NodeLabel& v : field.values) {
    const std::uint8_t raw = in.u8();
    if (raw > static_cast<std::uint8_t>(NodeLabel::Accepted)) {
      throw FormatError("invalid node label " + std::to_string(raw));
    }
    v = static_cast<NodeLabel>(raw);
  }
  return field;
}

FieldType peek_field_type(std::string_view bytes) {
  Reader in(bytes);
  return decode_header(in, bytes).type;
}

void write_field(const std::filesystem::path& path, const ScalarField& field) {
  atomic_write(path, encode_field(field));
}
void write_field(const std::filesystem::path& path, const VectorField& field) {
  atomic_write(path, encode_field(field));
}
void write_field(const std::filesystem::path& path, const LabelField& field) {
  atomic_write(path, encode_field(field));
}
ScalarField read_scalar_field(const std::filesystem::path& path) {
  return decode_scalar_field(read_file(path));
}
VectorField read_vector_field(const std::filesystem::path& path) {
  return decode_vector_field(read_file(path));
}
LabelField read_label_field(const std::filesystem::path& path) {
  return decode_label_field(read_file(path));
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf.data(), end);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || end != text.data() + text.size()) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::string field_csv(const ScalarField& field) {
  std::string out = "x,y,u\n";
  for (NodeIndex n = 0; n < field.values.size(); ++n) {
    if (!std::isfinite(field[n])) continue;
    const Vec2 p = field.grid.position(n);
    out += format_double(p.x);
    out += ',';
    out += format_double(p.y);
    out += ',';
    out += format_double(field[n]);
    out += '\n';
  }
  return out;
}

std::string path_csv(const Path& path) {
  std::string out = "s,x,y\n";
  for (std::size_t k = 0; k < path.size(); ++k) {
    out += format_double(path.arclength()[k]);
    out += ',';
    out += format_double(path.vertices()[k].x);
    out += ',';
    out += format_double(path.vertices()[k].y);
    out += '\n';
  }
  return out;
}

void atomic_write(const std::filesystem::path& path, std::string_view data) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw std::runtime_error("failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw std::runtime_error("cannot move '" + tmp.string() + "' to '" + path.string() +
                             "': " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw std::runtime_error("failed reading '" + path.string() + "'");
  return std::move(buf).str();
}

std::uint32_t crc32_of(std::string_view data) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  const auto* p = reinterpret_cast<const Bytef*>(data.data());
  std::size_t left = data.size();
  while (left > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    crc = ::crc32(crc, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::uint32_t crc32_of_file(const std::filesystem::path& path) { return crc32_of(read_file(path)); }

}  // namespace qpot
