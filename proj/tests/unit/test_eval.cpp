#include <doctest.h>

#include <tuple>

#include "signrec/eval/report.hpp"
#include "signrec/models/model.hpp"
#include "signrec/synth/corpus.hpp"
#include "support/temp_dir.hpp"

using namespace signrec;
using namespace signrec::eval;

namespace {

using Key = std::tuple<std::size_t, std::size_t, std::size_t>;  // cost, I, D

// Minimum (cost, insertions, deletions) over every alignment path, by plain
// enumeration without memoisation.
Key brute_force(const ctc::Labeling& r, std::size_t i, const ctc::Labeling& h, std::size_t j) {
  if (i == r.size() && j == h.size()) return {0, 0, 0};
  Key best{SIZE_MAX, 0, 0};
  if (i < r.size() && j < h.size()) {
    auto [c, ins, del] = brute_force(r, i + 1, h, j + 1);
    best = std::min(best, Key{c + (r[i] != h[j]), ins, del});
  }
  if (j < h.size()) {
    auto [c, ins, del] = brute_force(r, i, h, j + 1);
    best = std::min(best, Key{c + 1, ins + 1, del});
  }
  if (i < r.size()) {
    auto [c, ins, del] = brute_force(r, i + 1, h, j);
    best = std::min(best, Key{c + 1, ins, del + 1});
  }
  return best;
}

ctc::Labeling random_labeling(Rng& rng, std::size_t max_len, int vocab) {
  ctc::Labeling l(rng.below(max_len + 1));
  for (auto& v : l) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(vocab)));
  return l;
}

// One-hot scores on an alignment path of the target: each gloss on one frame,
// a blank between repeats, blanks after.
ctc::LogitSequence<float> oracle_logits(const ctc::Labeling& target, std::size_t frames, std::size_t classes) {
  nn::Tensor<float> s({frames, classes});
  const int blank = static_cast<int>(classes) - 1;
  std::vector<int> path;
  for (std::size_t u = 0; u < target.size(); ++u) {
    if (u > 0 && target[u] == target[u - 1]) path.push_back(blank);
    path.push_back(target[u]);
  }
  path.resize(frames, blank);
  for (std::size_t t = 0; t < frames; ++t) s.at(t, static_cast<std::size_t>(path[t])) = 10.0f;
  return ctc::LogitSequence<float>(std::move(s), frames);
}

struct Corpus {
  testing::TempDir tmp;
  synth::GeneratedCorpus gen;
  Corpus() {
    synth::CorpusSpec spec;
    spec.vocab_size = 4;
    spec.train = 2;
    spec.dev = 6;
    spec.test = 3;
    spec.write_frames = false;
    gen = synth::generate_dataset(spec, tmp.path() / "c");
  }
  data::Dataset load(const char* split) const {
    return data::load_manifest(gen.root / (std::string(split) + ".jsonl"), gen.vocabulary);
  }
};

}  // namespace

TEST_CASE("edit_alignment examples") {
  CHECK(edit_alignment({1, 2, 3}, {1, 2, 3}) == EditAlignment{0, 0, 0, 3});
  CHECK(edit_alignment({0, 1, 2}, {0, 2}) == EditAlignment{0, 1, 0, 3});
  CHECK(edit_alignment({}, {4, 4, 4}) == EditAlignment{0, 0, 3, 0});
  CHECK(edit_alignment({1, 2}, {}) == EditAlignment{0, 2, 0, 2});
  CHECK(edit_alignment({}, {}) == EditAlignment{});
  // cost 2 either as S+S or as I+D; fewer insertions wins
  CHECK(edit_alignment({1, 2}, {2, 3}) == EditAlignment{2, 0, 0, 2});
  // ref len 1, hyp len 3, no match: S=1, I=2
  CHECK(edit_alignment({0}, {1, 2, 3}) == EditAlignment{1, 0, 2, 1});
}

TEST_CASE("edit_alignment matches exhaustive enumeration") {
  Rng rng(20);
  for (int trial = 0; trial < 500; ++trial) {
    const auto r = random_labeling(rng, 8, 5), h = random_labeling(rng, 8, 5);
    const auto a = edit_alignment(r, h);
    const auto [cost, ins, del] = brute_force(r, 0, h, 0);
    CHECK(a.errors() == cost);
    CHECK(a.insertions == ins);
    CHECK(a.deletions == del);
    CHECK(a.substitutions + a.deletions <= a.reference_length);
  }
}

TEST_CASE("edit distance is a metric") {
  Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = random_labeling(rng, 7, 4), b = random_labeling(rng, 7, 4), c = random_labeling(rng, 7, 4);
    CHECK(edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c));
    CHECK((edit_distance(a, b) == 0) == (a == b));
    CHECK(edit_distance(a, b) == edit_distance(b, a));
  }
}

TEST_CASE("wer") {
  const std::vector<EditAlignment> perfect{{0, 0, 0, 3}, {0, 0, 0, 2}};
  CHECK(wer_percent(perfect) == 0.0);
  CHECK(wer_percent(std::vector<EditAlignment>{{0, 1, 0, 3}}) == doctest::Approx(33.3));
  CHECK(wer_percent(std::vector<EditAlignment>{{1, 0, 2, 1}}) == doctest::Approx(300.0));
  CHECK_THROWS_AS(wer_percent(std::vector<EditAlignment>{{0, 0, 1, 0}}), UndefinedMetricError);
  CHECK_THROWS_AS(wer_percent(std::vector<EditAlignment>{}), UndefinedMetricError);
  // half-up: 6.25 -> 6.3, 2/3 -> 66.7, 1/8 -> 12.5
  CHECK(percent_one_decimal(1, 16) == doctest::Approx(6.3));
  CHECK(percent_one_decimal(2, 3) == doctest::Approx(66.7));
  CHECK(percent_one_decimal(1, 8) == doctest::Approx(12.5));
  CHECK(percent_one_decimal(1, 2000) == doctest::Approx(0.1));
  CHECK(percent_one_decimal(1, 2001) == doctest::Approx(0.0));
}

TEST_CASE("evaluate") {
  Corpus c;
  const auto dev = c.load("dev");
  const auto& vocab = dev.vocabulary();
  const std::size_t K = static_cast<std::size_t>(vocab.classes());
  EvalOptions opt;
  opt.beam_size = 4;

  SUBCASE("oracle model scores 0") {
    const LogitFn oracle = [&](const data::Batch& b) {
      std::vector<ctc::LogitSequence<float>> out;
      for (std::size_t i = 0; i < b.size(); ++i) out.push_back(oracle_logits(b.target(i), b.input_lengths[i], K));
      return out;
    };
    const auto report = evaluate(dev, vocab, oracle, opt);
    CHECK(report.wer_percent() == 0.0);
    CHECK(report.sentences.size() == dev.size());
    for (const auto& s : report.sentences) CHECK(s.verdict == ctc::Verdict::Correct);
    CHECK(report.fault_tallies().at(ctc::Verdict::NetworkAtFault) == 0);
  }
  SUBCASE("exactly uniform scores do not decode to the empty labeling") {
    // 6 frames, 3 glosses: "a" collects 21 paths, the empty labeling one
    const ctc::LogitSequence<double> tiny(nn::Tensor<double>({6, 4}));
    const auto dist = ctc::enumerate_oracle(tiny, 8, 4);
    CHECK(dist.at(ctc::Labeling{0}) == doctest::Approx(21.0 * dist.at(ctc::Labeling{})));
  }
  SUBCASE("uninformative blank-heavy model deletes everything") {
    // equal gloss scores, blank ahead by 5: the empty labeling is the exact argmax
    auto blank_heavy = [](std::size_t frames, std::size_t classes) {
      nn::Tensor<float> s({frames, classes});
      for (std::size_t t = 0; t < frames; ++t) s.at(t, classes - 1) = 5.0f;
      return ctc::LogitSequence<float>(std::move(s), frames);
    };
    const auto tiny = blank_heavy(8, 5);
    const auto dist = ctc::enumerate_oracle(tiny, 8, 4);
    const auto best = std::max_element(dist.begin(), dist.end(),
                                       [](const auto& a, const auto& b) { return a.second < b.second; });
    CHECK(best->first.empty());

    const LogitFn uninformative = [&](const data::Batch& b) {
      std::vector<ctc::LogitSequence<float>> out;
      for (std::size_t i = 0; i < b.size(); ++i) out.push_back(blank_heavy(b.input_lengths[i], K));
      return out;
    };
    opt.workers = 3;
    const auto report = evaluate(dev, vocab, uninformative, opt);
    CHECK(report.wer_percent() == 100.0);
    std::size_t errors = 0, words = 0;
    for (const auto& s : report.sentences) {
      CHECK(s.hypothesis.empty());
      CHECK(s.alignment.deletions == s.alignment.reference_length);
      errors += s.alignment.errors();
      words += s.alignment.reference_length;
    }
    CHECK(report.wer_percent() == percent_one_decimal(errors, words));
    CHECK(report.fault_tallies().at(ctc::Verdict::NetworkAtFault) == dev.size());
  }
  SUBCASE("vocabulary mismatch") {
    const LogitFn none = [](const data::Batch&) { return std::vector<ctc::LogitSequence<float>>{}; };
    CHECK_THROWS_AS(evaluate(dev, ctc::GlossVocabulary({"X"}), none, opt), ConfigError);
  }
  SUBCASE("untrained model through the adapter") {
    auto model = models::build_model<float>(models::ModelConfig::mcsign_default(4), 1);
    const LogitFn fn = [&](const data::Batch& b) { return models::infer_logits(*model, b); };
    const auto a = evaluate(dev, vocab, fn, opt);
    opt.workers = 2;
    const auto b = evaluate(dev, vocab, fn, opt);
    CHECK(a == b);
    CHECK(a.sentences.size() == dev.size());
  }
}

TEST_CASE("render_report") {
  EvalReport r;
  r.split = "test";
  r.beam_size = 8;
  r.sentences.push_back({"test-0000", {"RAIN", "SUN"}, {"RAIN"}, {0, 1, 0, 2}, ctc::Verdict::NetworkAtFault});
  r.sentences.push_back({"test-0001", {"WIND"}, {"WIND"}, {0, 0, 0, 1}, ctc::Verdict::Correct});
  r.sentences.push_back({"test-0002", {"FOG"}, {"SNOW", "FOG"}, {0, 0, 1, 1}, ctc::Verdict::SearchAtFault});
  CHECK(r.wer_percent() == doctest::Approx(50.0));

  const auto json = render_report(r, ReportFormat::Json);
  CHECK(json == render_report(r, ReportFormat::Json));
  CHECK(report_from_json(json) == r);
  const auto parsed = nlohmann::ordered_json::parse(json);
  std::vector<std::string> keys;
  for (const auto& [k, v] : parsed.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"split", "wer_percent", "sentences", "beam_size"});
  CHECK(parsed["sentences"][0]["D"] == 1);
  CHECK(parsed["sentences"][2]["verdict"] == "SearchAtFault");
  CHECK_THROWS_AS(report_from_json("{\"split\": 1}"), SchemaError);

  const auto text = render_report(r, ReportFormat::Text);
  CHECK(text.find("Dev") != std::string::npos);
  CHECK(text.find("Test") != std::string::npos);
  CHECK(text.find("50.0") != std::string::npos);
  CHECK(text.find("search at fault 1") != std::string::npos);
  CHECK(text == render_report(r, ReportFormat::Text));

  EvalReport dev = r;
  dev.split = "dev";
  dev.sentences.pop_back();
  const auto table = render_table(&dev, &r);
  CHECK(table.find("33.3") != std::string::npos);
  CHECK(table.find("50.0") != std::string::npos);
  CHECK(table.find("33.3") < table.find("50.0"));
  CHECK_THROWS_AS(report_format_from_string("xml"), ConfigError);
}
