#pragma once

#include <set>

#include "emofuse/dataio/container.hpp"
#include "emofuse/dataio/record.hpp"

namespace emofuse {

inline constexpr std::string_view kBundleMagic = "EMOB";

namespace detail {

inline std::pair<std::size_t, std::size_t> bundle_widths(
    std::span<const SegmentRecord> records) {
  if (records.empty()) return {0, 0};
  const std::size_t dp = records.front().h_p.cols();
  const std::size_t ds = records.front().h_s.cols();
  for (const auto& r : records) {
    if (r.h_p.cols() != dp || r.h_s.cols() != ds) {
      throw FormatError(FormatErrc::shape_mismatch,
                        "segment " + r.id + " has widths " +
                            std::to_string(r.h_p.cols()) + "/" +
                            std::to_string(r.h_s.cols()) + ", bundle uses " +
                            std::to_string(dp) + "/" + std::to_string(ds));
    }
  }
  return {dp, ds};
}

}  // namespace detail

/// Serializes records to the EMOB byte image. Identical records always give
/// identical bytes.
inline std::string encode_bundle(std::span<const SegmentRecord> records) {
  std::set<std::string_view> ids;
  for (const auto& r : records) {
    r.validate();
    if (!ids.insert(r.id).second) {
      throw FormatError(FormatErrc::duplicate_id, r.id);
    }
  }
  const auto [dp, ds] = detail::bundle_widths(records);

  std::vector<std::size_t> counts;
  for (const auto& r : records) {
    counts.push_back(r.h_p.size());
    counts.push_back(r.h_s.size());
  }
  const auto offs = payload_offsets(counts);

  nlohmann::json segments = nlohmann::json::array();
  std::vector<std::span<const float>> payloads;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    segments.push_back({
        {"id", r.id},
        {"speaker_id", r.speaker_id},
        {"dialogue_id", r.dialogue_id},
        {"label", to_string(r.label)},
        {"n_frames", r.n_frames()},
        {"n_subwords", r.n_subwords()},
        {"char_lengths", r.char_lengths},
        {"h_p", {{"offset", offs[2 * i]}, {"bytes", r.h_p.size() * 4}}},
        {"h_s", {{"offset", offs[2 * i + 1]}, {"bytes", r.h_s.size() * 4}}},
    });
    payloads.push_back(r.h_p.flat());
    payloads.push_back(r.h_s.flat());
  }
  nlohmann::json manifest = {
      {"format", "EMOB"},
      {"version", kFormatVersion},
      {"dtype", "float32-le"},
      {"d_p", dp},
      {"d_s", ds},
      {"segments", std::move(segments)},
  };
  return encode_container(kBundleMagic, manifest, payloads);
}

inline void write_bundle(std::span<const SegmentRecord> records,
                         const std::filesystem::path& path) {
  write_file_atomic(path, encode_bundle(records));
}

inline std::vector<SegmentRecord> decode_bundle(std::string bytes) {
  ContainerReader reader(std::move(bytes), kBundleMagic);
  const auto& m = reader.manifest();
  std::vector<SegmentRecord> out;
  std::set<std::string> ids;
  try {
    const std::size_t dp = m.at("d_p").get<std::size_t>();
    const std::size_t ds = m.at("d_s").get<std::size_t>();
    for (const auto& s : m.at("segments")) {
      SegmentRecord r;
      r.id = s.at("id").get<std::string>();
      if (!ids.insert(r.id).second) {
        throw FormatError(FormatErrc::duplicate_id, r.id);
      }
      r.speaker_id = s.at("speaker_id").get<std::string>();
      r.dialogue_id = s.at("dialogue_id").get<std::string>();
      r.label = parse_emotion(s.at("label").get<std::string>());
      r.char_lengths = s.at("char_lengths").get<std::vector<std::uint32_t>>();
      const auto n_frames = s.at("n_frames").get<std::size_t>();
      const auto n_subwords = s.at("n_subwords").get<std::size_t>();
      if (n_frames == 0 || n_subwords == 0) {
        throw FormatError(FormatErrc::shape_mismatch, r.id + ": empty matrix");
      }
      if (r.char_lengths.size() != n_subwords) {
        throw FormatError(FormatErrc::shape_mismatch,
                          r.id + ": char_lengths length differs from n_subwords");
      }
      for (auto c : r.char_lengths) {
        if (c == 0) {
          throw FormatError(FormatErrc::shape_mismatch, r.id + ": zero char_length");
        }
      }
      const auto& hp = s.at("h_p");
      const auto& hs = s.at("h_s");
      if (hp.at("bytes").get<std::size_t>() != n_frames * dp * 4) {
        throw FormatError(FormatErrc::shape_mismatch,
                          r.id + ": H_p payload size does not match " +
                              std::to_string(n_frames) + "x" + std::to_string(dp));
      }
      if (hs.at("bytes").get<std::size_t>() != n_subwords * ds * 4) {
        throw FormatError(FormatErrc::shape_mismatch,
                          r.id + ": H_s payload size does not match " +
                              std::to_string(n_subwords) + "x" + std::to_string(ds));
      }
      r.h_p = reader.matrix(hp.at("offset").get<std::size_t>(), n_frames, dp,
                            r.id + " H_p");
      r.h_s = reader.matrix(hs.at("offset").get<std::size_t>(), n_subwords, ds,
                            r.id + " H_s");
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatErrc::malformed_manifest, e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(FormatErrc::malformed_manifest, e.what());
  }
  return out;
}

/// Reads and validates an EMOB file.
inline std::vector<SegmentRecord> read_bundle(const std::filesystem::path& path) {
  return decode_bundle(read_file(path));
}

}  // namespace emofuse
