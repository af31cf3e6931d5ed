#include "signrec/models/config.hpp"

#include <set>

#include "signrec/errors.hpp"

namespace signrec::models {

using nlohmann::json;

const char* to_string(Architecture a) { return a == Architecture::RSignC ? "RSignC" : "MCSignC"; }

Architecture architecture_from_string(const std::string& s) {
  if (s == "RSignC") return Architecture::RSignC;
  if (s == "MCSignC") return Architecture::MCSignC;
  throw ConfigError("unknown architecture \"" + s + "\" (expected RSignC or MCSignC)");
}

void ModelConfig::validate() const {
  auto bad = [](const std::string& m) { throw ConfigError("model config: " + m); };
  if (vocab_size < 1) bad("vocab_size must be at least 1");
  if (input_side() < 1) bad("input side must be at least 1");
  if (conv.empty()) bad("at least one conv block is required");
  for (const auto& b : conv) {
    if (b.maps < 1 || b.kernel < 1 || b.pool < 1) bad("conv block widths must be at least 1");
  }
  for (auto d : dense) {
    if (d < 1) bad("dense widths must be at least 1");
  }
  if (image_lstm < 1 || movement_lstm < 1 || location_lstm < 1 || hand_blstm < 1 || fusion_blstm < 1) {
    bad("LSTM widths must be at least 1");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must lie in [0, 1)");
  if (!(l2 >= 0.0)) bad("l2 must be nonnegative");
  std::size_t side = input_side();
  for (const auto& b : conv) {
    if (side < b.pool) bad("input side " + std::to_string(input_side()) + " is too small for the conv stack");
    side /= b.pool;
  }
}

data::InputKind ModelConfig::input_kind() const {
  return architecture == Architecture::RSignC ? data::InputKind::Frames : data::InputKind::Cues;
}

std::size_t ModelConfig::input_side() const {
  return architecture == Architecture::RSignC ? scene_side : skeleton_side;
}

std::size_t ModelConfig::cnn_features() const {
  std::size_t side = input_side();
  for (const auto& b : conv) side /= b.pool;
  return side * side * conv.back().maps;
}

ModelConfig ModelConfig::mcsign_default(std::size_t vocab_size) {
  ModelConfig c;
  c.architecture = Architecture::MCSignC;
  c.conv = {{8, 3, 2}, {16, 3, 2}};
  c.vocab_size = vocab_size;
  return c;
}

ModelConfig ModelConfig::rsign_default(std::size_t vocab_size) {
  ModelConfig c;
  c.architecture = Architecture::RSignC;
  c.conv = {{8, 3, 2}, {8, 3, 2}, {16, 3, 2}, {16, 3, 2}, {32, 3, 2}, {32, 3, 1}};
  c.dense = {64, 64};
  c.image_lstm = 64;
  c.vocab_size = vocab_size;
  return c;
}

void to_json(json& j, const ModelConfig& c) {
  json conv = json::array();
  for (const auto& b : c.conv) conv.push_back({{"maps", b.maps}, {"kernel", b.kernel}, {"pool", b.pool}});
  j = json{{"architecture", to_string(c.architecture)},
           {"vocab_size", c.vocab_size},
           {"skeleton_side", c.skeleton_side},
           {"scene_side", c.scene_side},
           {"conv", conv},
           {"dense", c.dense},
           {"image_lstm", c.image_lstm},
           {"movement_lstm", c.movement_lstm},
           {"location_lstm", c.location_lstm},
           {"hand_blstm", c.hand_blstm},
           {"fusion_blstm", c.fusion_blstm},
           {"dropout", c.dropout},
           {"l2", c.l2}};
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw ConfigError(std::string("unknown ") + what + " key \"" + k + "\"");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for \"") + key + "\": " + e.what());
  }
}

}  // namespace

void from_json(const json& j, ModelConfig& c) {
  reject_unknown(j,
                 {"architecture", "vocab_size", "skeleton_side", "scene_side", "conv", "dense", "image_lstm",
                  "movement_lstm", "location_lstm", "hand_blstm", "fusion_blstm", "dropout", "l2"},
                 "model config");
  std::string arch = to_string(c.architecture);
  read(j, "architecture", arch);
  std::size_t vocab = c.vocab_size;
  read(j, "vocab_size", vocab);
  c = architecture_from_string(arch) == Architecture::RSignC ? ModelConfig::rsign_default(vocab)
                                                              : ModelConfig::mcsign_default(vocab);
  read(j, "skeleton_side", c.skeleton_side);
  read(j, "scene_side", c.scene_side);
  if (j.contains("conv")) {
    c.conv.clear();
    for (const auto& b : j.at("conv")) {
      reject_unknown(b, {"maps", "kernel", "pool"}, "conv block");
      ConvBlock block;
      read(b, "maps", block.maps);
      read(b, "kernel", block.kernel);
      read(b, "pool", block.pool);
      c.conv.push_back(block);
    }
  }
  read(j, "dense", c.dense);
  read(j, "image_lstm", c.image_lstm);
  read(j, "movement_lstm", c.movement_lstm);
  read(j, "location_lstm", c.location_lstm);
  read(j, "hand_blstm", c.hand_blstm);
  read(j, "fusion_blstm", c.fusion_blstm);
  read(j, "dropout", c.dropout);
  read(j, "l2", c.l2);
  c.validate();
}

void to_json(json& j, const nn::TrainConfig& c) {
  j = json{{"learning_rate", c.learning_rate}, {"beta1", c.beta1},       {"beta2", c.beta2},
           {"epsilon", c.epsilon},             {"batch_size", c.batch_size}, {"max_epochs", c.max_epochs},
           {"clip_norm", c.clip_norm},         {"seed", c.seed}};
}

void from_json(const json& j, nn::TrainConfig& c) {
  reject_unknown(j, {"learning_rate", "beta1", "beta2", "epsilon", "batch_size", "max_epochs", "clip_norm", "seed"},
                 "train config");
  read(j, "learning_rate", c.learning_rate);
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "epsilon", c.epsilon);
  read(j, "batch_size", c.batch_size);
  read(j, "max_epochs", c.max_epochs);
  read(j, "clip_norm", c.clip_norm);
  read(j, "seed", c.seed);
  c.validate();
}

}  // namespace signrec::models
