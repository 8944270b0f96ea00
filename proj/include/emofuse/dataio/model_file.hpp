#pragma once

#include "emofuse/dataio/container.hpp"
#include "emofuse/fusion/model.hpp"

namespace emofuse {

inline constexpr std::string_view kModelMagic = "EMOM";

inline nlohmann::json config_to_json(const ModelConfig& c) {
  return {
      {"architecture", to_string(c.architecture)},
      {"size", to_string(c.size)},
      {"d_model", c.d_model},
      {"n_heads", c.n_heads},
      {"alignment", to_string(c.alignment)},
  };
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.architecture = parse_architecture(j.at("architecture").get<std::string>());
  c.size = parse_size(j.at("size").get<std::string>());
  c.d_model = j.at("d_model").get<std::size_t>();
  c.n_heads = j.at("n_heads").get<std::size_t>();
  c.alignment = parse_alignment(j.at("alignment").get<std::string>());
  c.validate();
  return c;
}

/// Stores parameters as float32 in the order of FusionModel::params().
template <typename T>
std::string encode_model(const FusionModel<T>& model) {
  auto copy = cast_model<float>(model);
  auto params = copy.params();
  std::vector<std::size_t> counts;
  for (auto p : params) counts.push_back(p.size());
  const auto offs = payload_offsets(counts);
  nlohmann::json tensors = nlohmann::json::array();
  std::vector<std::span<const float>> payloads;
  for (std::size_t i = 0; i < params.size(); ++i) {
    tensors.push_back({{"offset", offs[i]}, {"count", counts[i]}});
    payloads.emplace_back(params[i]);
  }
  nlohmann::json manifest = {
      {"format", "EMOM"},
      {"version", kFormatVersion},
      {"dtype", "float32-le"},
      {"config", config_to_json(model.config)},
      {"param_count", model.param_count()},
      {"tensors", std::move(tensors)},
  };
  return encode_container(kModelMagic, manifest, payloads);
}

template <typename T>
void save_model(const FusionModel<T>& model, const std::filesystem::path& path) {
  write_file_atomic(path, encode_model(model));
}

inline FusionModel<float> load_model(const std::filesystem::path& path) {
  ContainerReader reader(read_file(path), kModelMagic);
  const auto& m = reader.manifest();
  try {
    FusionModel<float> model(config_from_json(m.at("config")));
    auto params = model.params();
    const auto& tensors = m.at("tensors");
    if (tensors.size() != params.size()) {
      throw FormatError(FormatErrc::shape_mismatch, "tensor count differs from config");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto count = tensors[i].at("count").get<std::size_t>();
      if (count != params[i].size()) {
        throw FormatError(FormatErrc::shape_mismatch,
                          "tensor " + std::to_string(i) + " has " +
                              std::to_string(count) + " values, expected " +
                              std::to_string(params[i].size()));
      }
      auto values = reader.matrix(tensors[i].at("offset").get<std::size_t>(), 1,
                                  count, "tensor " + std::to_string(i));
      std::copy(values.flat().begin(), values.flat().end(), params[i].begin());
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatErrc::malformed_manifest, e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(FormatErrc::malformed_manifest, e.what());
  }
}

}  // namespace emofuse
