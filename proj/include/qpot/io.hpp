#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "qpot/field.hpp"
#include "qpot/postproc.hpp"

namespace qpot {

/// Payload tag stored in a field file.
enum class FieldType : std::uint8_t { Scalar = 1, Vector = 2, Labels = 3 };

/// Field file layout: a 64-byte header holding the ASCII magic "QPOTFLD1" padded with
/// NULs, then little-endian u32 nx, u32 ny, f64 xmin, xmax, ymin, ymax, u8 type tag,
/// then the row-major payload (f64, f64 pairs, or u8 labels).
inline constexpr std::string_view kFieldMagic = "QPOTFLD1";
inline constexpr std::size_t kFieldHeaderBytes = 64;

std::string encode_field(const ScalarField& field);
std::string encode_field(const VectorField& field);
std::string encode_field(const LabelField& field);

/// Throws FormatError on a bad magic, a wrong type tag, an invalid shape or domain,
/// or a payload whose size does not match the shape.
ScalarField decode_scalar_field(std::string_view bytes);
VectorField decode_vector_field(std::string_view bytes);
LabelField decode_label_field(std::string_view bytes);
/// Type tag of an encoded field; throws FormatError if the header is unreadable.
FieldType peek_field_type(std::string_view bytes);

void write_field(const std::filesystem::path& path, const ScalarField& field);
void write_field(const std::filesystem::path& path, const VectorField& field);
void write_field(const std::filesystem::path& path, const LabelField& field);
ScalarField read_scalar_field(const std::filesystem::path& path);
VectorField read_vector_field(const std::filesystem::path& path);
LabelField read_label_field(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`; "inf", "-inf", "nan"
/// for non-finite values.
std::string format_double(double value);
/// Parses text written by format_double (and ordinary decimal notation).
/// Throws std::invalid_argument on malformed input.
double parse_double(std::string_view text);

/// "x,y,u" rows for every finite node.
std::string field_csv(const ScalarField& field);
/// "s,x,y" rows along the path.
std::string path_csv(const Path& path);

/// Writes to a temporary file in the same directory, then renames it over `path`,
/// so `path` never holds partial content. Creates parent directories.
/// Throws std::runtime_error on I/O failure.
void atomic_write(const std::filesystem::path& path, std::string_view data);
/// Whole file contents; throws std::runtime_error if it cannot be read.
std::string read_file(const std::filesystem::path& path);

std::uint32_t crc32_of(std::string_view data);
std::uint32_t crc32_of_file(const std::filesystem::path& path);

}  // namespace qpot
