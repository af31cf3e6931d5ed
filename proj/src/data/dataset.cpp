#include "signrec/data/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <set>

#include "signrec/cues/io.hpp"
#include "signrec/errors.hpp"
#include "signrec/parallel.hpp"

namespace signrec::data {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(InputKind k) { return k == InputKind::Cues ? "cues" : "frames"; }

InputKind input_kind_from_string(const std::string& s) {
  if (s == "cues") return InputKind::Cues;
  if (s == "frames") return InputKind::Frames;
  throw ConfigError("unknown input kind \"" + s + "\" (expected cues or frames)");
}

ctc::Labeling encode_targets(const std::vector<std::string>& glosses, const ctc::GlossVocabulary& vocab) {
  return vocab.encode(glosses);
}

std::vector<Record> read_manifest(const fs::path& path, const ctc::GlossVocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  const fs::path base = path.parent_path();
  std::vector<Record> records;
  std::set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, path.string() + ": " + e.what());
    }
    Record r;
    try {
      r.id = obj.at("id").get<std::string>();
      r.landmarks = base / obj.at("landmarks").get<std::string>();
      r.frames = base / obj.value("frames", std::string());
      r.gloss = obj.at("gloss").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw SchemaError(path.string() + " line " + std::to_string(line) + ": " + e.what());
    }
    if (!seen.insert(r.id).second) {
      throw SchemaError(path.string() + ": duplicate sentence id \"" + r.id + "\"");
    }
    if (!fs::exists(r.landmarks)) {
      throw IoError(path.string() + ": landmark file " + r.landmarks.string() + " does not exist");
    }
    r.target = encode_targets(r.gloss, vocab);
    records.push_back(std::move(r));
  }
  return records;
}

Dataset load_manifest(const fs::path& path, const ctc::GlossVocabulary& vocab, DatasetOptions options) {
  return Dataset(read_manifest(path, vocab), vocab, std::move(options));
}

std::vector<std::uint8_t> load_frame_dir(const fs::path& dir, std::size_t& frames, std::size_t& side) {
  if (!fs::is_directory(dir)) throw IoError("frame directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".pgm") files.push_back(e.path());
  }
  if (files.empty()) throw IoError("frame directory " + dir.string() + " holds no .pgm files");
  std::sort(files.begin(), files.end());
  std::vector<std::uint8_t> out;
  side = 0;
  for (const auto& f : files) {
    const auto img = cues::read_pgm(f);
    if (side == 0) side = img.side();
    if (img.side() != side) throw SchemaError(f.string() + ": frame size differs within a sentence");
    out.insert(out.end(), img.bits().begin(), img.bits().end());
  }
  frames = files.size();
  return out;
}

Dataset::Dataset(std::vector<Record> records, ctc::GlossVocabulary vocab, DatasetOptions options)
    : records_(std::move(records)), vocab_(std::move(vocab)), options_(std::move(options)) {
  cache_.resize(records_.size());
}

Sample Dataset::load(std::size_t i) const {
  const Record& r = records_.at(i);
  Sample s;
  s.id = r.id;
  s.target = r.target;
  if (options_.kind == InputKind::Cues) {
    if (options_.cue_dir) {
      const fs::path file = *options_.cue_dir / (r.id + ".cues");
      if (!fs::exists(file)) {
        throw IoError("cue cache " + file.string() + " is missing; run `signrec extract` first");
      }
      s.cues = cues::load_cues(file);
      if (s.cues.side() != options_.skeleton_side) {
        throw ConfigError("cue cache " + file.string() + " has skeleton side " +
                          std::to_string(s.cues.side()) + ", expected " +
                          std::to_string(options_.skeleton_side));
      }
    } else {
      s.cues = cues::build_cue_sequences(cues::read_landmark_file(r.landmarks), options_.skeleton_side);
    }
    s.frames = s.cues.frames();
  } else {
    s.scene = load_frame_dir(r.frames, s.frames, s.scene_side);
  }
  return s;
}

const Sample& Dataset::sample(std::size_t i) const {
  {
    std::lock_guard lock(*mu_);
    if (cache_.at(i)) return *cache_[i];
  }
  auto loaded = std::make_unique<Sample>(load(i));
  std::lock_guard lock(*mu_);
  if (!cache_[i]) cache_[i] = std::move(loaded);
  return *cache_[i];
}

void Dataset::preload(std::size_t workers) const {
  parallel_for(records_.size(), workers, [&](std::size_t i) { sample(i); });
}

}  // namespace signrec::data
