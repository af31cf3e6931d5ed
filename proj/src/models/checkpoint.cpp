#include "signrec/models/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <json.hpp>

#include "signrec/cues/io.hpp"

namespace signrec::models {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'M', 'C', 'S', 'C'};

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(std::string_view in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

}  // namespace

Checkpoint capture(Model<float>& model, const ctc::GlossVocabulary& vocab, std::uint64_t step) {
  if (static_cast<std::size_t>(vocab.size()) != model.config().vocab_size) {
    throw CheckpointMismatchError("vocabulary has " + std::to_string(vocab.size()) + " glosses, model expects " +
                                  std::to_string(model.config().vocab_size));
  }
  Checkpoint c;
  c.config = model.config();
  c.vocabulary = vocab;
  c.step = step;
  c.rng_state = model.rng().state();
  for (const auto* p : model.params()) c.tensors.push_back({p->name, p->value});
  return c;
}

void restore_into(Model<float>& model, const Checkpoint& ckpt) {
  if (!(ckpt.config == model.config())) {
    throw CheckpointMismatchError(std::string("checkpoint holds a ") + to_string(ckpt.config.architecture) +
                                  " config that differs from the target " + to_string(model.config().architecture) +
                                  " model");
  }
  const auto& params = model.params();
  if (params.size() != ckpt.tensors.size()) {
    throw CheckpointMismatchError("checkpoint has " + std::to_string(ckpt.tensors.size()) + " tensors, model has " +
                                  std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = ckpt.tensors[i];
    if (t.name != params[i]->name || t.value.shape() != params[i]->value.shape()) {
      throw CheckpointMismatchError("checkpoint tensor " + t.name + nn::shape_str(t.value.shape()) +
                                    " does not match model tensor " + params[i]->name +
                                    nn::shape_str(params[i]->value.shape()));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = ckpt.tensors[i].value;
  if (!ckpt.rng_state.empty()) model.rng().set_state(ckpt.rng_state);
}

std::unique_ptr<Model<float>> instantiate(const Checkpoint& ckpt) {
  auto model = build_model<float>(ckpt.config, 0);
  restore_into(*model, ckpt);
  return model;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  json meta;
  meta["config"] = ckpt.config;
  meta["vocabulary"] = ckpt.vocabulary.glosses();
  meta["step"] = ckpt.step;
  meta["rng_state"] = ckpt.rng_state;
  meta["tensors"] = json::array();
  for (const auto& t : ckpt.tensors) meta["tensors"].push_back({{"name", t.name}, {"shape", t.value.shape()}});
  const std::string text = meta.dump();

  std::string out(kMagic, 4);
  put_le(out, kCheckpointVersion, 4);
  put_le(out, text.size(), 8);
  out += text;
  for (const auto& t : ckpt.tensors) {
    for (float v : t.value.data()) put_le(out, std::bit_cast<std::uint32_t>(v), 4);
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CheckpointFormatError("not a checkpoint (bad magic bytes)");
  }
  if (bytes.size() < 16) throw CheckpointTruncatedError("checkpoint header is truncated");
  const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
  if (version != kCheckpointVersion) {
    throw CheckpointVersionError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint64_t meta_len = get_le(bytes, 8, 8);
  if (meta_len > bytes.size() - 16) throw CheckpointTruncatedError("checkpoint metadata is truncated");

  Checkpoint c;
  std::vector<nn::Shape> shapes;
  try {
    const json meta = json::parse(bytes.substr(16, meta_len));
    c.config = meta.at("config").get<ModelConfig>();
    c.vocabulary = ctc::GlossVocabulary(meta.at("vocabulary").get<std::vector<std::string>>());
    c.step = meta.at("step").get<std::uint64_t>();
    c.rng_state = meta.at("rng_state").get<std::string>();
    for (const auto& t : meta.at("tensors")) {
      c.tensors.push_back({t.at("name").get<std::string>(), {}});
      shapes.push_back(t.at("shape").get<nn::Shape>());
    }
  } catch (const json::exception& e) {
    throw CheckpointFormatError(std::string("unreadable checkpoint metadata: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointFormatError(std::string("invalid config in checkpoint: ") + e.what());
  }

  std::size_t pos = 16 + meta_len;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const std::size_t n = nn::shape_numel(shapes[i]);
    if (shapes[i].empty() || n == 0) throw CheckpointFormatError("tensor " + c.tensors[i].name + " has no extent");
    if ((bytes.size() - pos) / 4 < n) {
      throw CheckpointTruncatedError("checkpoint payload is truncated at tensor " + c.tensors[i].name);
    }
    std::vector<float> values(n);
    for (std::size_t k = 0; k < n; ++k, pos += 4) {
      values[k] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(bytes, pos, 4)));
    }
    c.tensors[i].value = nn::Tensor<float>(shapes[i], std::move(values));
  }
  if (pos != bytes.size()) {
    throw CheckpointFormatError("checkpoint has " + std::to_string(bytes.size() - pos) +
                                   " bytes beyond the declared payload");
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  cues::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(cues::read_file(path));
}

}  // namespace signrec::models
