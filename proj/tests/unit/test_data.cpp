#include <doctest.h>

#include <fstream>
#include <set>

#include "signrec/ctc/ctc.hpp"
#include "signrec/cues/io.hpp"
#include "signrec/data/batch.hpp"
#include "signrec/data/dataset.hpp"
#include "signrec/errors.hpp"
#include "signrec/rng.hpp"
#include "signrec/synth/corpus.hpp"
#include "support/temp_dir.hpp"

using namespace signrec;
using namespace signrec::data;
namespace fs = std::filesystem;

namespace {

struct Corpus {
  testing::TempDir tmp;
  synth::GeneratedCorpus gen;
  explicit Corpus(std::size_t train = 10, bool frames = true) {
    synth::CorpusSpec spec;
    spec.vocab_size = 5;
    spec.train = train;
    spec.dev = 3;
    spec.test = 3;
    spec.scene_side = 20;
    spec.write_frames = frames;
    gen = synth::generate_dataset(spec, tmp.path() / "corpus");
  }
  fs::path manifest(const char* split) const { return gen.root / (std::string(split) + ".jsonl"); }
};

// Deterministic stand-in for a network: logits[t] = W * (cue features at t).
ctc::LogitSequence<double> project(const Batch& b, std::size_t i, std::size_t classes) {
  const std::size_t T = b.padded_frames;
  const auto& d = b.right.displacement;
  const auto& l = b.right.location;
  nn::Tensor<double> scores({T, classes});
  for (std::size_t t = 0; t < T; ++t) {
    const float* dr = d.ptr() + (i * T + t) * 2;
    const float* lr = l.ptr() + (i * T + t) * 3;
    for (std::size_t k = 0; k < classes; ++k) {
      scores.at(t, k) = 3.0 * dr[0] * (k + 1) - 2.0 * dr[1] + lr[k % 3] * 0.7 - 0.1 * k;
    }
  }
  return ctc::LogitSequence<double>(std::move(scores), b.input_lengths[i]);
}

}  // namespace

TEST_CASE("encode_targets") {
  const ctc::GlossVocabulary v({"RAIN", "SUN", "WIND"});
  CHECK(encode_targets({}, v).empty());
  const auto ids = encode_targets({"RAIN", "RAIN"}, v);
  CHECK(ids.size() == 2);
  CHECK(ids[0] == ids[1]);
  const std::vector<std::string> words{"WIND", "SUN", "RAIN"};
  CHECK(v.decode(encode_targets(words, v)) == words);
  CHECK_THROWS_AS(encode_targets({"HAIL"}, v), UnknownGlossError);
}

TEST_CASE("load_manifest") {
  testing::TempDir tmp;
  const ctc::GlossVocabulary v({"RAIN", "SUN"});
  std::ofstream(tmp.path() / "a.jsonl") << "{\"x\": 1}";  // a landmark file that exists
  SUBCASE("empty manifest") {
    std::ofstream(tmp.path() / "m.jsonl") << "";
    CHECK(load_manifest(tmp.path() / "m.jsonl", v).empty());
  }
  SUBCASE("unknown gloss is named") {
    std::ofstream(tmp.path() / "m.jsonl")
        << R"({"id":"s1","landmarks":"a.jsonl","frames":"f","gloss":["RAIN","XYZ"]})" << "\n";
    try {
      load_manifest(tmp.path() / "m.jsonl", v);
      FAIL("expected UnknownGlossError");
    } catch (const UnknownGlossError& e) {
      CHECK(e.gloss() == "XYZ");
      CHECK(std::string(e.what()).find("XYZ") != std::string::npos);
    }
  }
  SUBCASE("duplicate id") {
    std::ofstream(tmp.path() / "m.jsonl")
        << R"({"id":"s1","landmarks":"a.jsonl","frames":"f","gloss":["RAIN"]})" << "\n"
        << R"({"id":"s1","landmarks":"a.jsonl","frames":"f","gloss":["SUN"]})" << "\n";
    CHECK_THROWS_AS(load_manifest(tmp.path() / "m.jsonl", v), SchemaError);
  }
  SUBCASE("missing files") {
    std::ofstream(tmp.path() / "m.jsonl")
        << R"({"id":"s1","landmarks":"nope.jsonl","frames":"f","gloss":["RAIN"]})" << "\n";
    CHECK_THROWS_AS(load_manifest(tmp.path() / "m.jsonl", v), IoError);
    CHECK_THROWS_AS(load_manifest(tmp.path() / "absent.jsonl", v), IoError);
  }
  SUBCASE("malformed line") {
    std::ofstream(tmp.path() / "m.jsonl") << "\n{oops\n";
    try {
      load_manifest(tmp.path() / "m.jsonl", v);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
}

TEST_CASE("600-record manifest") {
  Corpus c(600, false);
  const auto ds = load_manifest(c.manifest("train"), c.gen.vocabulary);
  CHECK(ds.size() == 600);
  CHECK(ds.record(599).id == "train-0599");
}

TEST_CASE("batching") {
  Corpus c;
  const auto ds = load_manifest(c.manifest("train"), c.gen.vocabulary);
  REQUIRE(ds.size() == 10);

  SUBCASE("10 samples, batch 4 -> 4, 4, 2 and full coverage") {
    BatchStream stream(ds, 4, 11);
    CHECK(stream.batches_per_epoch() == 3);
    stream.begin_epoch(0);
    Batch b;
    std::vector<std::size_t> sizes;
    std::multiset<std::string> seen;
    while (stream.next(b)) {
      sizes.push_back(b.size());
      seen.insert(b.ids.begin(), b.ids.end());
    }
    CHECK(sizes == std::vector<std::size_t>{4, 4, 2});
    CHECK(seen.size() == 10);
    for (const auto& r : ds.records()) CHECK(seen.count(r.id) == 1);
  }
  SUBCASE("seeded order") {
    BatchStream a(ds, 3, 5), b(ds, 3, 5), other(ds, 3, 6);
    CHECK(a.epoch_batches(2) == b.epoch_batches(2));
    CHECK(a.epoch_order(1) != a.epoch_order(2));
    CHECK(a.epoch_order(1) == other.epoch_order(0));  // seed + epoch
    BatchStream ordered(ds, 3, 5, false);
    CHECK(ordered.epoch_order(7)[0] == 0);
  }
  SUBCASE("padding layout") {
    const auto b = make_batch(ds, {0, 1, 2});
    CHECK(b.padded_frames == *std::max_element(b.input_lengths.begin(), b.input_lengths.end()));
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(b.input_lengths[i] <= b.padded_frames);
      CHECK(b.target_lengths[i] <= b.padded_targets);
      CHECK(b.target(i) == ds.record(i).target);
      const auto& s = ds.sample(i);
      CHECK(b.input_lengths[i] == s.frames);
      // valid rows copied, padding zero
      for (std::size_t t = 0; t < b.padded_frames; ++t) {
        for (std::size_t k = 0; k < 2; ++k) {
          const float v = b.left.displacement.at(i, t, k);
          CHECK(v == (t < s.frames ? s.cues.left.displacement.at(t, k) : 0.0f));
        }
      }
    }
    CHECK(b.left.images.shape() == nn::Shape{3, b.padded_frames, 1, 32, 32});
    CHECK_THROWS_AS(make_batch(ds, {1, 1}), InputError);
  }
  SUBCASE("padding never affects the loss or decoding") {
    const auto b1 = make_batch(ds, {3, 4, 5});
    const auto b2 = make_batch(ds, {3, 4, 5}, 2 * b1.padded_frames);
    CHECK(b2.padded_frames == 2 * b1.padded_frames);
    const std::size_t K = static_cast<std::size_t>(ds.vocabulary().classes());
    for (std::size_t i = 0; i < 3; ++i) {
      const auto l1 = project(b1, i, K), l2 = project(b2, i, K);
      CHECK(ctc::ctc_loss(l1, b1.target(i)).loss == ctc::ctc_loss(l2, b2.target(i)).loss);
      CHECK(ctc::greedy_decode(l1) == ctc::greedy_decode(l2));
      CHECK(ctc::beam_decode(l1, 4).front().labeling == ctc::beam_decode(l2, 4).front().labeling);
    }
  }
  SUBCASE("scene frames") {
    DatasetOptions opt;
    opt.kind = InputKind::Frames;
    const auto fds = load_manifest(c.manifest("train"), c.gen.vocabulary, opt);
    const auto b = make_batch(fds, {0, 1});
    CHECK(b.frames.shape() == nn::Shape{2, b.padded_frames, 1, 20, 20});
    CHECK(b.input_lengths[0] == ds.sample(0).frames);
  }
  SUBCASE("cue cache directory") {
    const fs::path dir = c.tmp.path() / "cues";
    fs::create_directories(dir);
    DatasetOptions opt;
    opt.cue_dir = dir;
    const auto cached = load_manifest(c.manifest("train"), c.gen.vocabulary, opt);
    CHECK_THROWS_AS(cached.sample(0), IoError);
    for (std::size_t i = 0; i < ds.size(); ++i) cues::save_cues(dir / (ds.record(i).id + ".cues"), ds.sample(i).cues);
    const auto again = load_manifest(c.manifest("train"), c.gen.vocabulary, opt);
    again.preload(3);
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK(again.sample(i).cues == ds.sample(i).cues);
    DatasetOptions wrong = opt;
    wrong.skeleton_side = 16;
    CHECK_THROWS_AS(load_manifest(c.manifest("train"), c.gen.vocabulary, wrong).sample(0), ConfigError);
  }
}
