#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "signrec/data/dataset.hpp"
#include "signrec/nn/optim.hpp"

namespace signrec::models {

enum class Architecture { RSignC, MCSignC };

const char* to_string(Architecture a);
Architecture architecture_from_string(const std::string& s);

// conv (same padding) -> batch norm -> ReLU -> max pool (skipped when pool is 1)
struct ConvBlock {
  std::size_t maps = 8;
  std::size_t kernel = 3;
  std::size_t pool = 2;

  bool operator==(const ConvBlock&) const = default;
};

struct ModelConfig {
  Architecture architecture = Architecture::MCSignC;
  std::size_t skeleton_side = 32;  // MCSign-C hand images
  std::size_t scene_side = 96;     // RSign-C frames
  std::vector<ConvBlock> conv;
  std::vector<std::size_t> dense;  // RSign-C dense layers between CNN and LSTM
  std::size_t image_lstm = 64;     // RSign-C: the sequence LSTM
  std::size_t movement_lstm = 16;
  std::size_t location_lstm = 8;
  std::size_t hand_blstm = 64;     // per direction
  std::size_t fusion_blstm = 64;   // per direction
  std::size_t vocab_size = 1;
  double dropout = 0.0;
  double l2 = 0.0;

  void validate() const;
  data::InputKind input_kind() const;
  std::size_t input_side() const;
  // Width of the flattened CNN output per frame.
  std::size_t cnn_features() const;
  std::size_t classes() const { return vocab_size + 1; }

  static ModelConfig mcsign_default(std::size_t vocab_size);
  static ModelConfig rsign_default(std::size_t vocab_size);

  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

// Train-time settings read alongside the model config.
void to_json(nlohmann::json& j, const nn::TrainConfig& c);
void from_json(const nlohmann::json& j, nn::TrainConfig& c);

}  // namespace signrec::models
