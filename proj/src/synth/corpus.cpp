#include "signrec/synth/corpus.hpp"

#include <cstdio>
#include <fstream>

#include "signrec/cues/io.hpp"
#include "signrec/cues/raster.hpp"
#include "signrec/errors.hpp"
#include "signrec/rng.hpp"

namespace signrec::synth {

namespace fs = std::filesystem;
using nlohmann::json;

void CorpusSpec::validate() const {
  if (vocab_size < 1) throw ConfigError("vocab_size must be at least 1");
  if (min_glosses < 1) throw ConfigError("min_glosses must be at least 1");
  if (max_glosses < min_glosses) throw ConfigError("max_glosses must be >= min_glosses");
  if (train < 1 || dev < 1 || test < 1) throw ConfigError("every split needs at least one sentence");
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be nonnegative");
  if (scene_side < 1) throw ConfigError("scene_side must be positive");
}

void to_json(json& j, const CorpusSpec& s) {
  j = json{{"vocab_size", s.vocab_size}, {"min_glosses", s.min_glosses}, {"max_glosses", s.max_glosses},
           {"train", s.train},           {"dev", s.dev},                 {"test", s.test},
           {"sigma", s.sigma},           {"blend", s.blend},             {"seed", s.seed},
           {"scene_side", s.scene_side}, {"write_frames", s.write_frames}};
}

void from_json(const json& j, CorpusSpec& s) {
  if (!j.is_object()) throw ConfigError("corpus spec must be a JSON object");
  json defaults;
  to_json(defaults, s);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw ConfigError("unknown corpus spec key \"" + key + "\"");
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("vocab_size", s.vocab_size);
    get("min_glosses", s.min_glosses);
    get("max_glosses", s.max_glosses);
    get("train", s.train);
    get("dev", s.dev);
    get("test", s.test);
    get("sigma", s.sigma);
    get("blend", s.blend);
    get("seed", s.seed);
    get("scene_side", s.scene_side);
    get("write_frames", s.write_frames);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("corpus spec: ") + e.what());
  }
}

CorpusSpec load_corpus_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus spec " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  CorpusSpec s = j.get<CorpusSpec>();
  s.validate();
  return s;
}

namespace {

cues::HandPoints lerp(const cues::HandPoints& a, const cues::HandPoints& b, double u) {
  cues::HandPoints out;
  for (std::size_t i = 0; i < cues::kHandPoints; ++i) {
    out[i] = {a[i].x + (b[i].x - a[i].x) * u, a[i].y + (b[i].y - a[i].y) * u};
  }
  return out;
}

void jitter(cues::Point& p, Rng& rng, double sigma) {
  p.x += sigma * rng.normal();
  p.y += sigma * rng.normal();
}

}  // namespace

Sentence synthesize_sentence(const ctc::Labeling& gloss_ids, const std::vector<GlossTemplate>& library,
                             const CorpusSpec& spec, std::uint64_t seed) {
  Sentence out;
  for (std::size_t i = 0; i < gloss_ids.size(); ++i) {
    const int id = gloss_ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= library.size()) {
      throw InputError("gloss id " + std::to_string(id) + " is not in the library");
    }
    auto traj = template_trajectory(library[static_cast<std::size_t>(id)]);
    if (i > 0) {
      const cues::LandmarkFrame prev = out.frames.back();
      const cues::LandmarkFrame& next = traj.front();
      for (std::size_t b = 1; b <= spec.blend; ++b) {
        const double u = static_cast<double>(b) / static_cast<double>(spec.blend + 1);
        cues::LandmarkFrame f = prev;
        f.left = lerp(*prev.left, *next.left, u);
        f.right = lerp(*prev.right, *next.right, u);
        out.frames.push_back(std::move(f));
      }
    }
    out.frames.insert(out.frames.end(), traj.begin(), traj.end());
  }
  Rng rng(seed);
  for (std::size_t t = 0; t < out.frames.size(); ++t) {
    auto& f = out.frames[t];
    f.t = static_cast<int>(t);
    if (spec.sigma == 0.0) continue;
    for (cues::Hand h : {cues::Hand::Left, cues::Hand::Right}) {
      if (f.hand(h)) {
        for (auto& p : *f.hand(h)) jitter(p, rng, spec.sigma);
      }
    }
    for (cues::Point* p : {&f.pose.left_eye, &f.pose.right_eye, &f.pose.mouth_left, &f.pose.mouth_right,
                           &f.pose.left_shoulder, &f.pose.right_shoulder}) {
      jitter(*p, rng, spec.sigma);
    }
  }
  out.reference = gloss_ids;
  return out;
}

namespace {

std::string sentence_id(const char* split, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%04zu", split, i);
  return buf;
}

std::string frame_name(std::size_t t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.pgm", t);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) { cues::write_file(path, text); }

void prepare_output(const fs::path& out) {
  std::error_code ec;
  if (fs::exists(out)) {
    if (!fs::is_directory(out)) throw IoError(out.string() + " exists and is not a directory");
    if (!fs::is_empty(out) && !fs::exists(out / "corpus.json")) {
      throw IoError(out.string() + " is not empty and does not hold a generated corpus");
    }
    fs::remove_all(out / "landmarks", ec);
    fs::remove_all(out / "frames", ec);
  }
  fs::create_directories(out / "landmarks", ec);
  if (ec) throw IoError("cannot create " + (out / "landmarks").string() + ": " + ec.message());
}

}  // namespace

GeneratedCorpus generate_dataset(const CorpusSpec& spec, const fs::path& out_dir) {
  spec.validate();
  prepare_output(out_dir);
  const auto library = build_gloss_library(spec.vocab_size, derive_seed(spec.seed, 0));
  GeneratedCorpus corpus{out_dir, library_vocabulary(library), {}, {}, {}};
  corpus.vocabulary.save(out_dir / "vocab.txt");

  Rng draws(derive_seed(spec.seed, 1));
  const std::uint64_t sentence_base = derive_seed(spec.seed, 2);
  const std::size_t counts[3] = {spec.train, spec.dev, spec.test};
  std::vector<ManifestEntry>* lists[3] = {&corpus.train, &corpus.dev, &corpus.test};
  std::size_t global = 0;
  for (int s = 0; s < 3; ++s) {
    std::string manifest;
    for (std::size_t i = 0; i < counts[s]; ++i, ++global) {
      const std::size_t len = static_cast<std::size_t>(
          draws.between(static_cast<int>(spec.min_glosses), static_cast<int>(spec.max_glosses)));
      ctc::Labeling ids(len);
      for (auto& id : ids) id = static_cast<int>(draws.below(spec.vocab_size));
      const auto sentence = synthesize_sentence(ids, library, spec, derive_seed(sentence_base, global));

      ManifestEntry e;
      e.id = sentence_id(kSplits[s], i);
      e.landmarks = "landmarks/" + e.id + ".jsonl";
      e.frames = "frames/" + e.id;
      e.gloss = corpus.vocabulary.decode(ids);
      cues::write_landmark_file(out_dir / e.landmarks, sentence.frames);
      if (spec.write_frames) {
        const fs::path dir = out_dir / e.frames;
        fs::create_directories(dir);
        for (std::size_t t = 0; t < sentence.frames.size(); ++t) {
          cues::write_pgm(dir / frame_name(t), cues::render_scene_frame(sentence.frames[t], spec.scene_side));
        }
      }
      nlohmann::ordered_json line;
      line["id"] = e.id;
      line["landmarks"] = e.landmarks;
      line["frames"] = e.frames;
      line["gloss"] = e.gloss;
      manifest += line.dump() + "\n";
      lists[s]->push_back(std::move(e));
    }
    write_text(out_dir / (std::string(kSplits[s]) + ".jsonl"), manifest);
  }
  json meta{{"format", "signrec-corpus"}, {"version", 1}, {"spec", spec}};
  write_text(out_dir / "corpus.json", meta.dump(2) + "\n");
  return corpus;
}

}  // namespace signrec::synth
