#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "emofuse/numkit/matrix.hpp"

namespace emofuse {

enum class Emotion : std::uint8_t { ANG = 0, FEA = 1, NEU = 2, POS = 3 };

inline constexpr std::array<std::string_view, 4> kEmotionNames = {"ANG", "FEA",
                                                                  "NEU", "POS"};

inline std::string_view to_string(Emotion e) {
  return kEmotionNames[static_cast<std::size_t>(e)];
}

inline Emotion parse_emotion(std::string_view s) {
  for (std::size_t i = 0; i < kEmotionNames.size(); ++i) {
    if (kEmotionNames[i] == s) return static_cast<Emotion>(i);
  }
  throw std::invalid_argument("unknown emotion label: " + std::string(s));
}

/// One utterance: frame-level paralinguistic matrix, subword-level semantic
/// matrix and the character count of every subword.
struct SegmentRecord {
  std::string id;
  std::string speaker_id;
  std::string dialogue_id;
  Emotion label = Emotion::NEU;
  std::vector<std::uint32_t> char_lengths;  // one per subword
  Matrix<float> h_p;                        // n_frames x d_p
  Matrix<float> h_s;                        // n_subwords x d_s

  std::size_t n_frames() const { return h_p.rows(); }
  std::size_t n_subwords() const { return h_s.rows(); }

  void validate() const {
    if (id.empty()) throw std::invalid_argument("segment with empty id");
    if (h_p.rows() == 0 || h_s.rows() == 0) {
      throw ShapeError("segment " + id + ": empty embedding matrix");
    }
    if (char_lengths.size() != h_s.rows()) {
      throw ShapeError("segment " + id + ": " +
                       std::to_string(char_lengths.size()) +
                       " char_lengths for " + std::to_string(h_s.rows()) +
                       " subwords");
    }
    for (auto c : char_lengths) {
      if (c == 0) throw ShapeError("segment " + id + ": zero char_length");
    }
    require_finite(h_p, "H_p");
    require_finite(h_s, "H_s");
  }

  friend bool operator==(const SegmentRecord&, const SegmentRecord&) = default;
};

}  // namespace emofuse
