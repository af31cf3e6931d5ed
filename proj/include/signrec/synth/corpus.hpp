#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "signrec/ctc/vocabulary.hpp"
#include "signrec/synth/library.hpp"

namespace signrec::synth {

struct CorpusSpec {
  std::size_t vocab_size = 12;
  std::size_t min_glosses = 2;
  std::size_t max_glosses = 4;
  std::size_t train = 600;
  std::size_t dev = 60;
  std::size_t test = 60;
  double sigma = 0.01;
  std::size_t blend = 3;
  std::uint64_t seed = 7;
  std::size_t scene_side = cues::kDefaultSceneSide;
  bool write_frames = true;

  void validate() const;
  bool operator==(const CorpusSpec&) const = default;
};

void to_json(nlohmann::json& j, const CorpusSpec& s);
// Missing keys keep their defaults; unknown keys are a ConfigError.
void from_json(const nlohmann::json& j, CorpusSpec& s);
CorpusSpec load_corpus_spec(const std::filesystem::path& path);

struct Sentence {
  std::vector<cues::LandmarkFrame> frames;
  ctc::Labeling reference;
};

// Templates back to back with `blend` interpolated frames between neighbours,
// then N(0, sigma) jitter on every coordinate.
Sentence synthesize_sentence(const ctc::Labeling& gloss_ids, const std::vector<GlossTemplate>& library,
                             const CorpusSpec& spec, std::uint64_t seed);

struct ManifestEntry {
  std::string id;
  std::string landmarks;  // relative to the manifest's directory
  std::string frames;
  std::vector<std::string> gloss;
  bool operator==(const ManifestEntry&) const = default;
};

inline constexpr const char* kSplits[] = {"train", "dev", "test"};

struct GeneratedCorpus {
  std::filesystem::path root;
  ctc::GlossVocabulary vocabulary;
  std::vector<ManifestEntry> train, dev, test;
};

// Writes vocab.txt, corpus.json, {train,dev,test}.jsonl, landmarks/<id>.jsonl
// and (if spec.write_frames) frames/<id>/NNNNNN.pgm under out_dir.
GeneratedCorpus generate_dataset(const CorpusSpec& spec, const std::filesystem::path& out_dir);

}  // namespace signrec::synth
