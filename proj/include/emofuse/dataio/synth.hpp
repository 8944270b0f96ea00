#pragma once

#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <random>

#include "emofuse/dataio/record.hpp"

namespace emofuse {

/// Parameters of the synthetic bimodal generator. Every row of H_p is drawn
/// from Normal(mu_p[label], sigma^2 I) and every row of H_s from
/// Normal(mu_s[label], sigma^2 I).
struct SynthSpec {
  std::size_t per_class = 200;
  std::size_t d_p = 32;
  std::size_t d_s = 32;
  std::size_t frames_min = 20, frames_max = 60;
  std::size_t subwords_min = 3, subwords_max = 12;
  std::uint32_t chars_min = 1, chars_max = 8;
  double sigma = 0.5;
  std::array<std::size_t, 4> speakers_per_class = {40, 40, 40, 40};
  std::array<std::vector<double>, 4> mu_p;
  std::array<std::vector<double>, 4> mu_s;
  std::uint64_t seed = 7;

  void validate() const;
};

/// Class means with pairwise distance `separation` between distinct means.
/// The paralinguistic modality separates ANG from FEA and both from a shared
/// NEU/POS mean; the semantic modality separates NEU from POS and both from a
/// shared ANG/FEA mean. Needs width >= 6.
inline SynthSpec partial_information_preset(std::size_t width = 32,
                                            std::size_t per_class = 200,
                                            double sigma = 0.5,
                                            double separation = 2.0) {
  if (width < 6) throw std::invalid_argument("partial-information preset needs width >= 6");
  SynthSpec s;
  s.per_class = per_class;
  s.d_p = s.d_s = width;
  s.sigma = sigma;
  const std::size_t spk = std::max<std::size_t>(1, per_class / 5);
  s.speakers_per_class = {spk, spk, spk, spk};
  const double a = separation / std::sqrt(2.0);
  auto basis = [&](std::size_t axis) {
    std::vector<double> v(width, 0.0);
    v[axis] = a;
    return v;
  };
  s.mu_p = {basis(0), basis(1), basis(2), basis(2)};
  s.mu_s = {basis(5), basis(5), basis(3), basis(4)};
  return s;
}

/// Corpus-scale variant: 1056 segments per class and the per-class speaker
/// counts of the reference corpus.
inline SynthSpec corpus_scale_preset(std::size_t width = 32) {
  SynthSpec s = partial_information_preset(width, 1056);
  s.speakers_per_class = {149, 537, 450, 544};
  return s;
}

inline void SynthSpec::validate() const {
  auto bad = [](const std::string& why) {
    throw std::invalid_argument("synth spec: " + why);
  };
  if (per_class == 0) bad("per_class must be positive");
  if (d_p == 0 || d_s == 0) bad("widths must be positive");
  if (frames_min == 0 || frames_min > frames_max) bad("invalid frames range");
  if (subwords_min == 0 || subwords_min > subwords_max) bad("invalid subwords range");
  if (chars_min == 0 || chars_min > chars_max) bad("invalid chars range");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) bad("sigma must be >= 0");
  for (std::size_t c = 0; c < 4; ++c) {
    if (speakers_per_class[c] == 0) bad("speakers_per_class must be positive");
    if (mu_p[c].size() != d_p) bad("mu_p row width differs from d_p");
    if (mu_s[c].size() != d_s) bad("mu_s row width differs from d_s");
  }
}

/// Labels are assigned round-robin, so every class gets exactly per_class
/// segments. Each speaker belongs to one class and owns several segments.
inline std::vector<SegmentRecord> synth_generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto uniform = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  auto draw_rows = [&](std::size_t rows, const std::vector<double>& mu) {
    Matrix<float> m(rows, mu.size());
    for (std::size_t r = 0; r < rows; ++r) {
      auto row = m.row(r);
      for (std::size_t c = 0; c < mu.size(); ++c) {
        row[c] = static_cast<float>(mu[c] + spec.sigma * noise(rng));
      }
    }
    return m;
  };

  std::vector<SegmentRecord> out;
  std::array<std::size_t, 4> seen{};
  char buf[64];
  for (std::size_t i = 0; i < 4 * spec.per_class; ++i) {
    const std::size_t label = i % 4;
    const std::size_t speaker = seen[label]++ % spec.speakers_per_class[label];
    SegmentRecord r;
    std::snprintf(buf, sizeof buf, "seg%06zu", i);
    r.id = buf;
    std::snprintf(buf, sizeof buf, "spk-%s-%04zu",
                  kEmotionNames[label].data(), speaker);
    r.speaker_id = buf;
    std::snprintf(buf, sizeof buf, "dlg-%s-%04zu",
                  kEmotionNames[label].data(), speaker);
    r.dialogue_id = buf;
    r.label = static_cast<Emotion>(label);
    const std::size_t n_frames = uniform(spec.frames_min, spec.frames_max);
    const std::size_t n_subwords = uniform(spec.subwords_min, spec.subwords_max);
    for (std::size_t j = 0; j < n_subwords; ++j) {
      r.char_lengths.push_back(
          static_cast<std::uint32_t>(uniform(spec.chars_min, spec.chars_max)));
    }
    r.h_p = draw_rows(n_frames, spec.mu_p[label]);
    r.h_s = draw_rows(n_subwords, spec.mu_s[label]);
    out.push_back(std::move(r));
  }
  return out;
}

inline void to_json(nlohmann::json& j, const SynthSpec& s) {
  j = {
      {"per_class", s.per_class},
      {"d_p", s.d_p},
      {"d_s", s.d_s},
      {"frames", {s.frames_min, s.frames_max}},
      {"subwords", {s.subwords_min, s.subwords_max}},
      {"chars", {s.chars_min, s.chars_max}},
      {"sigma", s.sigma},
      {"speakers_per_class", s.speakers_per_class},
      {"mu_p", s.mu_p},
      {"mu_s", s.mu_s},
      {"seed", s.seed},
  };
}

// Missing keys keep the partial-information defaults for the given widths.
inline void from_json(const nlohmann::json& j, SynthSpec& s) {
  const std::size_t width = j.value("d_p", std::size_t{32});
  s = partial_information_preset(width, j.value("per_class", std::size_t{200}),
                                 j.value("sigma", 0.5),
                                 j.value("separation", 2.0));
  s.d_s = j.value("d_s", width);
  if (j.contains("frames")) {
    s.frames_min = j["frames"].at(0);
    s.frames_max = j["frames"].at(1);
  }
  if (j.contains("subwords")) {
    s.subwords_min = j["subwords"].at(0);
    s.subwords_max = j["subwords"].at(1);
  }
  if (j.contains("chars")) {
    s.chars_min = j["chars"].at(0);
    s.chars_max = j["chars"].at(1);
  }
  if (j.contains("speakers_per_class")) {
    s.speakers_per_class = j["speakers_per_class"].get<std::array<std::size_t, 4>>();
  }
  if (j.contains("mu_p")) s.mu_p = j["mu_p"].get<std::array<std::vector<double>, 4>>();
  if (j.contains("mu_s")) s.mu_s = j["mu_s"].get<std::array<std::vector<double>, 4>>();
  s.seed = j.value("seed", s.seed);
}

}  // namespace emofuse
