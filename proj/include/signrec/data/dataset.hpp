#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "signrec/ctc/vocabulary.hpp"
#include "signrec/cues/cues.hpp"

namespace signrec::data {

// What a model consumes: the six cue streams (MCSign-C) or rendered scene
// frames (RSign-C).
enum class InputKind { Cues, Frames };

const char* to_string(InputKind k);
InputKind input_kind_from_string(const std::string& s);

struct Record {
  std::string id;
  std::filesystem::path landmarks;
  std::filesystem::path frames;
  std::vector<std::string> gloss;
  ctc::Labeling target;
};

struct DatasetOptions {
  InputKind kind = InputKind::Cues;
  std::size_t skeleton_side = cues::kDefaultSkeletonSide;
  // Directory of <id>.cues files written by `extract`; without it cues are
  // computed from the landmark files on first use.
  std::optional<std::filesystem::path> cue_dir;
};

struct Sample {
  std::string id;
  ctc::Labeling target;
  std::size_t frames = 0;
  cues::CueSequences cues;           // InputKind::Cues
  std::vector<std::uint8_t> scene;   // InputKind::Frames, [T][S][S] 0/1
  std::size_t scene_side = 0;
};

ctc::Labeling encode_targets(const std::vector<std::string>& glosses, const ctc::GlossVocabulary& vocab);

// Read-only after load; samples are loaded lazily and cached.
class Dataset {
 public:
  Dataset(std::vector<Record> records, ctc::GlossVocabulary vocab, DatasetOptions options);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const Record& record(std::size_t i) const { return records_.at(i); }
  const std::vector<Record>& records() const { return records_; }
  const ctc::GlossVocabulary& vocabulary() const { return vocab_; }
  const DatasetOptions& options() const { return options_; }

  // Thread-safe.
  const Sample& sample(std::size_t i) const;
  void preload(std::size_t workers = 1) const;

 private:
  Sample load(std::size_t i) const;

  std::vector<Record> records_;
  ctc::GlossVocabulary vocab_;
  DatasetOptions options_;
  mutable std::vector<std::unique_ptr<Sample>> cache_;
  mutable std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
};

// Manifest: JSON Lines {"id", "landmarks", "frames", "gloss": [...]}.
// Relative paths resolve against the manifest's directory.
std::vector<Record> read_manifest(const std::filesystem::path& path, const ctc::GlossVocabulary& vocab);
Dataset load_manifest(const std::filesystem::path& path, const ctc::GlossVocabulary& vocab,
                      DatasetOptions options = {});

// Rendered scene frames of one sentence, sorted by file name.
std::vector<std::uint8_t> load_frame_dir(const std::filesystem::path& dir, std::size_t& frames,
                                         std::size_t& side);

}  // namespace signrec::data
