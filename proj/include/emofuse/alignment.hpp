#pragma once

#include <cstdint>
#include <string_view>

#include "emofuse/numkit/matrix.hpp"

namespace emofuse {

// Compresses a frame-level matrix onto the subword grid of the text encoder
// so that both cross-attention directions yield n_subwords rows.

enum class AlignmentMethod { Subwords, Characters };

inline std::string_view to_string(AlignmentMethod m) {
  return m == AlignmentMethod::Subwords ? "subwords" : "characters";
}

inline AlignmentMethod parse_alignment(std::string_view s) {
  if (s == "subwords") return AlignmentMethod::Subwords;
  if (s == "characters") return AlignmentMethod::Characters;
  throw std::invalid_argument("unknown alignment method: " + std::string(s));
}

/// Contiguous frame counts for the equal split. The first
/// (n_frames mod n_subwords) groups take one extra frame.
/// Requires n_frames >= n_subwords >= 1.
inline std::vector<std::size_t> subword_group_sizes(std::size_t n_frames,
                                                    std::size_t n_subwords) {
  if (n_subwords == 0 || n_frames < n_subwords) {
    throw ShapeError("subword_group_sizes: need n_frames >= n_subwords >= 1");
  }
  std::vector<std::size_t> sizes(n_subwords, n_frames / n_subwords);
  for (std::size_t i = 0; i < n_frames % n_subwords; ++i) ++sizes[i];
  return sizes;
}

/// Largest-remainder apportionment of n_frames proportional to char_lengths,
/// then lifted so that every subword owns at least one frame. Ties on the
/// remainder go to the lower subword index; frames needed for the lift are
/// taken from the currently largest group (lowest index on ties).
/// Requires n_frames >= char_lengths.size().
inline std::vector<std::size_t> character_group_sizes(
    std::size_t n_frames, std::span<const std::uint32_t> char_lengths) {
  const std::size_t m = char_lengths.size();
  if (m == 0) throw ShapeError("character alignment: empty char_lengths");
  if (n_frames < m) {
    throw ShapeError("character_group_sizes: fewer frames than subwords");
  }
  std::uint64_t total = 0;
  for (auto c : char_lengths) {
    if (c == 0) throw ShapeError("character alignment: zero char_length");
    total += c;
  }
  std::vector<std::size_t> sizes(m);
  std::vector<std::uint64_t> remainder(m);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint64_t num = static_cast<std::uint64_t>(n_frames) * char_lengths[i];
    sizes[i] = static_cast<std::size_t>(num / total);
    remainder[i] = num % total;
    assigned += sizes[i];
  }
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
    return remainder[a] > remainder[b];
  });
  for (std::size_t k = 0; assigned < n_frames; ++k, ++assigned) {
    ++sizes[order[k % m]];
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (sizes[i] > 0) continue;
    auto donor = std::max_element(sizes.begin(), sizes.end());
    --*donor;
    sizes[i] = 1;
  }
  return sizes;
}

// Output row j takes frame floor(j * n_frames / n_subwords).
template <typename T>
Matrix<T> sample_frames(const Matrix<T>& h_p, std::size_t n_subwords) {
  Matrix<T> out(n_subwords, h_p.cols());
  for (std::size_t j = 0; j < n_subwords; ++j) {
    const std::size_t src = j * h_p.rows() / n_subwords;
    std::copy(h_p.row(src).begin(), h_p.row(src).end(), out.row(j).begin());
  }
  return out;
}

namespace detail {

template <typename T>
Matrix<T> reduce_groups(const Matrix<T>& h_p,
                        const std::vector<std::size_t>& sizes, bool average) {
  Matrix<T> out(sizes.size(), h_p.cols());
  std::size_t frame = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    auto dst = out.row(g);
    for (std::size_t k = 0; k < sizes[g]; ++k, ++frame) {
      const auto src = h_p.row(frame);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
    if (average) {
      const T inv = T{1} / static_cast<T>(sizes[g]);
      for (auto& v : dst) v *= inv;
    }
  }
  return out;
}

}  // namespace detail

/// Averages contiguous frame groups, one group per subword.
template <typename T>
Matrix<T> align_subwords(const Matrix<T>& h_p, std::size_t n_subwords) {
  if (h_p.rows() == 0 || h_p.cols() == 0 || n_subwords == 0) {
    throw ShapeError("align_subwords: empty input");
  }
  if (h_p.rows() < n_subwords) return sample_frames(h_p, n_subwords);
  return detail::reduce_groups(h_p, subword_group_sizes(h_p.rows(), n_subwords),
                               true);
}

/// Sums contiguous frame groups whose sizes follow the subword character
/// counts, so longer subwords carry more weight.
template <typename T>
Matrix<T> align_characters(const Matrix<T>& h_p,
                           std::span<const std::uint32_t> char_lengths) {
  if (char_lengths.empty()) {
    throw ShapeError("align_characters: empty char_lengths");
  }
  if (h_p.rows() == 0 || h_p.cols() == 0) {
    throw ShapeError("align_characters: empty input");
  }
  if (h_p.rows() < char_lengths.size()) {
    // a single repeated frame summed once is that frame
    for (auto c : char_lengths) {
      if (c == 0) throw ShapeError("character alignment: zero char_length");
    }
    return sample_frames(h_p, char_lengths.size());
  }
  return detail::reduce_groups(
      h_p, character_group_sizes(h_p.rows(), char_lengths), false);
}

template <typename T>
Matrix<T> align(const Matrix<T>& h_p, AlignmentMethod method,
                std::span<const std::uint32_t> char_lengths) {
  return method == AlignmentMethod::Subwords
             ? align_subwords(h_p, char_lengths.size())
             : align_characters(h_p, char_lengths);
}

}  // namespace emofuse
