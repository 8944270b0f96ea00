#pragma once

// Shared on-disk layout of bundle (EMOB) and model (EMOM) files:
//
//   offset 0   magic, 4 ASCII bytes
//   offset 4   format version, u16 little-endian (currently 1)
//   offset 6   reserved, u16, zero
//   offset 8   manifest length in bytes, u64 little-endian
//   offset 16  manifest, UTF-8 JSON
//   ...        zero padding up to the next multiple of 8: the data section
//
// Payloads are float32 little-endian, row-major. Each starts at an 8-byte
// aligned offset, given in the manifest relative to the data section.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <string>

#include "emofuse/numkit/matrix.hpp"

namespace emofuse {

enum class FormatErrc {
  io_error,
  bad_magic,
  unsupported_version,
  malformed_manifest,
  truncated_payload,
  shape_mismatch,
  non_finite_payload,
  duplicate_id,
};

inline std::string_view to_string(FormatErrc e) {
  switch (e) {
    case FormatErrc::io_error: return "I/O error";
    case FormatErrc::bad_magic: return "bad magic";
    case FormatErrc::unsupported_version: return "unsupported version";
    case FormatErrc::malformed_manifest: return "malformed manifest";
    case FormatErrc::truncated_payload: return "truncated payload";
    case FormatErrc::shape_mismatch: return "shape mismatch";
    case FormatErrc::non_finite_payload: return "non-finite payload";
    case FormatErrc::duplicate_id: return "duplicate id";
  }
  return "unknown";
}

class FormatError : public std::runtime_error {
 public:
  FormatError(FormatErrc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code) {}
  FormatErrc code() const { return code_; }

 private:
  FormatErrc code_;
};

inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderSize = 16;

inline std::size_t align8(std::size_t n) { return (n + 7) & ~std::size_t{7}; }

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_le(const std::string& in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i]))
         << (8 * i);
  }
  return v;
}

inline void put_f32(std::string& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

}  // namespace detail

/// Builds a container byte image. `manifest` must already carry the payload
/// offsets produced by `payload_offsets`.
inline std::string encode_container(std::string_view magic,
                                    const nlohmann::json& manifest,
                                    const std::vector<std::span<const float>>& payloads) {
  const std::string text = manifest.dump();
  std::string out;
  out.append(magic.substr(0, 4));
  detail::put_u16(out, kFormatVersion);
  detail::put_u16(out, 0);
  detail::put_u64(out, text.size());
  out += text;
  out.resize(align8(out.size()), '\0');
  for (auto p : payloads) {
    for (float f : p) detail::put_f32(out, f);
    out.resize(align8(out.size()), '\0');
  }
  return out;
}

// Offsets (relative to the data section) of consecutive payloads.
inline std::vector<std::size_t> payload_offsets(
    const std::vector<std::size_t>& element_counts) {
  std::vector<std::size_t> offs;
  std::size_t off = 0;
  for (auto n : element_counts) {
    offs.push_back(off);
    off += align8(n * sizeof(float));
  }
  return offs;
}

/// Writes through a temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError(FormatErrc::io_error, "cannot open " + tmp.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw FormatError(FormatErrc::io_error, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw FormatError(FormatErrc::io_error,
                      "rename to " + path.string() + ": " + ec.message());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError(FormatErrc::io_error, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

/// Parsed container: manifest plus the raw image for payload extraction.
class ContainerReader {
 public:
  ContainerReader(std::string bytes, std::string_view magic)
      : bytes_(std::move(bytes)) {
    if (bytes_.size() < 4 || std::string_view(bytes_).substr(0, 4) != magic) {
      throw FormatError(FormatErrc::bad_magic,
                        "expected \"" + std::string(magic) + "\"");
    }
    if (bytes_.size() < kHeaderSize) {
      throw FormatError(FormatErrc::truncated_payload, "header cut short");
    }
    const auto version = detail::get_le(bytes_, 4, 2);
    if (version != kFormatVersion) {
      throw FormatError(FormatErrc::unsupported_version,
                        "version " + std::to_string(version));
    }
    const auto len = detail::get_le(bytes_, 8, 8);
    if (len > bytes_.size() - kHeaderSize) {
      throw FormatError(FormatErrc::truncated_payload, "manifest cut short");
    }
    try {
      manifest_ = nlohmann::json::parse(bytes_.begin() + kHeaderSize,
                                        bytes_.begin() + kHeaderSize + len);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(FormatErrc::malformed_manifest, e.what());
    }
    data_start_ = align8(kHeaderSize + len);
  }

  const nlohmann::json& manifest() const { return manifest_; }

  /// Reads rows x cols floats at `offset` within the data section.
  Matrix<float> matrix(std::size_t offset, std::size_t rows, std::size_t cols,
                       const std::string& what) const {
    const std::size_t count = rows * cols;
    const std::size_t begin = data_start_ + offset;
    if (offset % 8 != 0) {
      throw FormatError(FormatErrc::malformed_manifest,
                        what + ": misaligned offset");
    }
    if (begin > bytes_.size() || count * sizeof(float) > bytes_.size() - begin) {
      throw FormatError(FormatErrc::truncated_payload,
                        what + ": needs " + std::to_string(count * sizeof(float)) +
                            " bytes at " + std::to_string(begin) + ", file has " +
                            std::to_string(bytes_.size()));
    }
    std::vector<float> data(count);
    for (std::size_t i = 0; i < count; ++i) {
      data[i] = std::bit_cast<float>(
          static_cast<std::uint32_t>(detail::get_le(bytes_, begin + 4 * i, 4)));
      if (!std::isfinite(data[i])) {
        throw FormatError(FormatErrc::non_finite_payload,
                          what + ": element " + std::to_string(i));
      }
    }
    return Matrix<float>(rows, cols, std::move(data));
  }

 private:
  std::string bytes_;
  nlohmann::json manifest_;
  std::size_t data_start_ = 0;
};

}  // namespace emofuse
