#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "signrec/ctc/vocabulary.hpp"
#include "signrec/errors.hpp"
#include "signrec/models/model.hpp"

namespace signrec::models {

// Checkpoint file layout, integers little-endian:
//   "MCSC" | u32 version | u64 metadata length | metadata JSON (UTF-8)
//   | every tensor's values as f32, in metadata order
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Not a checkpoint: bad magic, unreadable metadata or trailing bytes.
class CheckpointFormatError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

class CheckpointVersionError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

// Fewer bytes than the header and metadata declare.
class CheckpointTruncatedError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

// Checkpoint config or tensors disagree with the target model.
class CheckpointMismatchError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct NamedTensor {
  std::string name;
  nn::Tensor<float> value;

  bool operator==(const NamedTensor&) const = default;
};

struct Checkpoint {
  ModelConfig config;
  ctc::GlossVocabulary vocabulary;
  std::vector<NamedTensor> tensors;
  std::uint64_t step = 0;
  std::string rng_state;

  bool operator==(const Checkpoint&) const = default;
};

Checkpoint capture(Model<float>& model, const ctc::GlossVocabulary& vocab, std::uint64_t step);

// Copies tensors and RNG state into an existing model.
void restore_into(Model<float>& model, const Checkpoint& ckpt);

// Builds a fresh model from the stored config and restores it.
std::unique_ptr<Model<float>> instantiate(const Checkpoint& ckpt);

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace signrec::models
