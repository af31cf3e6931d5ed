#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "signrec/ctc/ctc.hpp"
#include "signrec/nn/gradcheck.hpp"
#include "support/ctc_fixtures.hpp"

using namespace signrec;
using namespace signrec::ctc;
using signrec::testing::random_instance;
using signrec::testing::random_logits;

namespace {

LogitSequence<double> uniform_logits(std::size_t frames, std::size_t glosses) {
  return LogitSequence<double>(nn::Tensor<double>({frames, glosses + 1}, 0.0), frames);
}

LogitSequence<double> from_probs(std::initializer_list<std::initializer_list<double>> rows) {
  auto t = nn::Tensor<double>::from_rows(rows);
  for (auto& v : t.data()) v = std::log(v);
  return LogitSequence<double>(t, t.dim(0));
}

// One-hot scores for a frame-level path.
LogitSequence<double> path_logits(const std::vector<int>& path, std::size_t classes) {
  nn::Tensor<double> t({path.size(), classes}, -20.0);
  for (std::size_t i = 0; i < path.size(); ++i) t.at(i, static_cast<std::size_t>(path[i])) = 20.0;
  return LogitSequence<double>(t, path.size());
}

}  // namespace

TEST_CASE("vocabulary") {
  GlossVocabulary v({"RAIN", "SUN", "WIND"});
  CHECK(v.size() == 3);
  CHECK(v.blank() == 3);
  CHECK(v.id("SUN") == 1);
  CHECK(v.gloss(2) == "WIND");
  CHECK_THROWS_AS(v.gloss(v.blank()), InputError);
  CHECK_THROWS_AS(v.id("XYZ"), UnknownGlossError);
  CHECK(v.decode(v.encode({"WIND", "RAIN", "RAIN"})) ==
        std::vector<std::string>{"WIND", "RAIN", "RAIN"});
  CHECK_THROWS_AS(GlossVocabulary({"A", "A"}), InputError);

  const auto path = std::filesystem::temp_directory_path() / "signrec_vocab_test.txt";
  v.save(path);
  CHECK(GlossVocabulary::load(path) == v);
  std::filesystem::remove(path);
}

TEST_CASE("ctc_loss examples") {
  SUBCASE("T=1, single path") {
    CHECK(ctc_loss(uniform_logits(1, 1), {0}).loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("T=2, three of four paths collapse to a") {
    // a.a, a.blank, blank.a -> 0.75
    CHECK(ctc_loss(uniform_logits(2, 1), {0}).loss ==
          doctest::Approx(-std::log(0.75)).epsilon(1e-12));
  }
  SUBCASE("repeat needs a separating blank") {
    try {
      ctc_loss(uniform_logits(2, 1), {0, 0});
      FAIL("expected InfeasibleTarget");
    } catch (const InfeasibleTarget& e) {
      CHECK(e.required() == 3);
    }
    CHECK(std::isfinite(ctc_loss(uniform_logits(3, 1), {0, 0}).loss));
  }
  SUBCASE("blank in target is rejected") {
    CHECK_THROWS_AS(ctc_loss(uniform_logits(3, 2), {2}), InputError);
  }
  SUBCASE("padding rows are ignored and get zero gradient") {
    Rng rng(3);
    auto a = random_logits(rng, 5, 3);
    nn::Tensor<double> padded({9, 4}, 123.0);
    std::copy(a.scores.data().begin(), a.scores.data().end(), padded.ptr());
    LogitSequence<double> b(padded, 5);
    auto ra = ctc_loss(a, {1, 2});
    auto rb = ctc_loss(b, {1, 2});
    CHECK(ra.loss == rb.loss);
    for (std::size_t t = 5; t < 9; ++t) {
      for (std::size_t k = 0; k < 4; ++k) CHECK(rb.gradient.at(t, k) == 0.0);
    }
  }
}

TEST_CASE("ctc_loss agrees with path enumeration") {
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    auto inst = random_instance(rng, 6, 3, 3);
    const auto dist = enumerate_oracle(inst.logits);
    const double oracle = dist.contains(inst.target) ? dist.at(inst.target) : 0.0;
    CHECK(std::abs(ctc_loss(inst.logits, inst.target).loss + std::log(oracle)) <= 1e-6);
  }
}

TEST_CASE("ctc_loss gradient matches finite differences") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = random_instance(rng, 8, 4, 3);
    const auto shape = inst.logits.scores.shape();
    nn::ScalarFunction f = [&](std::span<const double> x, std::vector<double>* grad) {
      LogitSequence<double> l(nn::Tensor<double>(shape, std::vector<double>(x.begin(), x.end())),
                              shape[0]);
      auto r = ctc_loss(l, inst.target);
      if (grad) grad->assign(r.gradient.data().begin(), r.gradient.data().end());
      return r.loss;
    };
    CHECK(nn::finite_diff_check(f, inst.logits.scores.to_vector(), 1e-5) <= 1e-4);
  }
}

TEST_CASE("ctc_loss stays finite for huge logits") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = random_instance(rng, 8, 4, 3);
    for (auto& v : inst.logits.scores.data()) v *= 1e4 / 3.0;
    const auto r = ctc_loss(inst.logits, inst.target);
    CHECK(!std::isnan(r.loss));
    CHECK(r.loss >= 0.0);
    CHECK(nn::all_finite(r.gradient));
    // float path as well
    LogitSequence<float> lf(inst.logits.scores.cast<float>(), inst.logits.input_length);
    CHECK(!std::isnan(ctc_loss(lf, inst.target).loss));
  }
}

TEST_CASE("labeling_log_prob") {
  SUBCASE("empty labeling, blank 0.9 twice") {
    CHECK(labeling_log_prob(from_probs({{0.1, 0.9}, {0.1, 0.9}}), {}) ==
          doctest::Approx(std::log(0.81)).epsilon(1e-12));
  }
  SUBCASE("infeasible is -inf") {
    CHECK(labeling_log_prob(uniform_logits(2, 1), {0, 0}) == kLogZero);
    CHECK(labeling_log_prob(uniform_logits(2, 2), {0, 1, 0}) == kLogZero);
  }
  SUBCASE("equals -ctc_loss") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      auto inst = random_instance(rng, 8, 4, 3);
      CHECK(labeling_log_prob(inst.logits, inst.target) ==
            doctest::Approx(-ctc_loss(inst.logits, inst.target).loss).epsilon(1e-12));
    }
  }
  SUBCASE("total probability over all labelings is one") {
    Rng rng(13);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t T = rng.between(1, 5), V = rng.between(1, 3);
      auto logits = random_logits(rng, T, V);
      double total = 0.0;
      for (const auto& l : testing::all_labelings(V, T)) total += std::exp(labeling_log_prob(logits, l));
      CHECK(std::abs(total - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("greedy_decode") {
  // classes a=0, b=1, blank=2
  CHECK(greedy_decode(path_logits({2, 0, 0, 2, 1}, 3)) == Labeling{0, 1});
  CHECK(greedy_decode(path_logits({2, 2, 2}, 3)).empty());
  CHECK(greedy_decode(path_logits({0, 2, 0}, 3)) == Labeling{0, 0});
  // ties go to the lowest id
  CHECK(greedy_decode(uniform_logits(3, 2)) == Labeling{0});
}

TEST_CASE("beam_decode") {
  SUBCASE("beam 0 is a config error") {
    CHECK_THROWS_AS(beam_decode(uniform_logits(2, 1), 0), ConfigError);
  }
  SUBCASE("single frame with blank 0.9") {
    auto out = beam_decode(from_probs({{0.05, 0.05, 0.9}}), 4);
    CHECK(out.front().labeling.empty());
    CHECK(out.front().log_prob == doctest::Approx(std::log(0.9)));
  }
  SUBCASE("one-hot rows agree with greedy") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<int> path(rng.between(1, 8));
      for (auto& k : path) k = static_cast<int>(rng.below(4));
      auto l = path_logits(path, 4);
      CHECK(beam_decode(l, 3).front().labeling == greedy_decode(l));
    }
  }
  SUBCASE("exhaustive beam finds the brute-force argmax") {
    Rng rng(99);
    for (int trial = 0; trial < 40; ++trial) {
      const std::size_t T = rng.between(1, 5), V = rng.between(1, 3);
      auto logits = random_logits(rng, T, V);
      const auto dist = enumerate_oracle(logits);
      auto best = dist.begin();
      for (auto it = dist.begin(); it != dist.end(); ++it) {
        if (it->second > best->second) best = it;
      }
      const auto beams = beam_decode(logits, testing::all_labelings(V, T).size());
      CHECK(beams.front().labeling == best->first);
      CHECK(beams.front().log_prob == doctest::Approx(std::log(best->second)).epsilon(1e-9));
      // sorted, best first
      for (std::size_t i = 1; i < beams.size(); ++i) CHECK(beams[i - 1].log_prob >= beams[i].log_prob);
    }
  }
  SUBCASE("top-1 probability is non-decreasing in beam size") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
      auto logits = random_logits(rng, rng.between(1, 8), rng.between(1, 4));
      double prev = kLogZero;
      for (std::size_t beam : {1, 2, 4, 8}) {
        const double top = beam_decode(logits, beam).front().log_prob;
        CHECK(top >= prev);
        prev = top;
      }
    }
  }
  SUBCASE("a narrow beam's hypotheses survive in a wider beam") {
    Rng rng(37);
    for (int trial = 0; trial < 30; ++trial) {
      auto logits = random_logits(rng, rng.between(1, 20), rng.between(1, 10));
      std::set<Labeling> wide;
      for (const auto& h : beam_decode(logits, 8)) wide.insert(h.labeling);
      for (const auto& h : beam_decode(logits, 3)) CHECK(wide.count(h.labeling) == 1);
    }
  }
  SUBCASE("padding rows do not change decoding") {
    Rng rng(41);
    auto a = random_logits(rng, 6, 3);
    nn::Tensor<double> padded({10, 4});
    for (auto& v : padded.data()) v = rng.uniform(-5, 5);
    std::copy(a.scores.data().begin(), a.scores.data().end(), padded.ptr());
    LogitSequence<double> b(padded, 6);
    CHECK(greedy_decode(a) == greedy_decode(b));
    const auto ba = beam_decode(a, 4), bb = beam_decode(b, 4);
    REQUIRE(ba.size() == bb.size());
    for (std::size_t i = 0; i < ba.size(); ++i) {
      CHECK(ba[i].labeling == bb[i].labeling);
      CHECK(ba[i].log_prob == bb[i].log_prob);
    }
  }
}

TEST_CASE("enumerate_oracle") {
  SUBCASE("T=2, V=1 uniform") {
    const auto dist = enumerate_oracle(uniform_logits(2, 1));
    CHECK(dist.size() == 2);
    CHECK(dist.at({}) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(dist.at({0}) == doctest::Approx(0.75).epsilon(1e-15));
  }
  SUBCASE("sums to one") {
    Rng rng(6);
    for (int trial = 0; trial < 10; ++trial) {
      auto logits = random_logits(rng, rng.between(1, 8), rng.between(1, 4));
      double s = 0.0;
      for (const auto& [l, p] : enumerate_oracle(logits)) s += p;
      CHECK(std::abs(s - 1.0) <= 1e-9);
    }
  }
  SUBCASE("size guard") {
    CHECK_THROWS_AS(enumerate_oracle(uniform_logits(9, 2)), ConfigError);
    CHECK_THROWS_AS(enumerate_oracle(uniform_logits(3, 5)), ConfigError);
  }
}

TEST_CASE("diagnose") {
  SUBCASE("correct decode") {
    auto l = path_logits({2, 0, 2, 1}, 3);
    CHECK(diagnose(l, {0, 1}, 4).verdict == Verdict::Correct);
  }
  SUBCASE("constructed search fault flips to correct with a wider beam") {
    const auto logits = testing::search_fault_fixture();
    const auto reference = testing::search_fault_reference();
    // The oracle confirms the reference is the most probable labeling.
    const auto dist = enumerate_oracle(logits);
    for (const auto& [labeling, p] : dist) {
      if (labeling != reference) CHECK(p < dist.at(reference));
    }
    CHECK(dist.at(reference) == doctest::Approx(0.2717).epsilon(1e-3));

    const auto narrow = diagnose(logits, reference, 1);
    CHECK(narrow.decoded == Labeling{1, 0});
    CHECK(narrow.log_p_reference > narrow.log_p_decoded);
    CHECK(narrow.verdict == Verdict::SearchAtFault);
    CHECK(diagnose(logits, reference, 8).verdict == Verdict::Correct);
  }
  SUBCASE("peaked logits contradicting the reference") {
    auto l = path_logits({1, 2, 1}, 3);
    const auto d = diagnose(l, {0}, 8);
    CHECK(d.decoded == Labeling{1, 1});
    CHECK(d.verdict == Verdict::NetworkAtFault);
  }
  SUBCASE("equal probabilities count against the network") {
    // p("") = p("a") = 0.5 at T=1; the beam returns one of them.
    auto l = uniform_logits(1, 1);
    const auto top = beam_decode(l, 4).front().labeling;
    const Labeling other = top.empty() ? Labeling{0} : Labeling{};
    CHECK(diagnose(l, other, 4).verdict == Verdict::NetworkAtFault);
  }
  CHECK(verdict_from_string(to_string(Verdict::SearchAtFault)) == Verdict::SearchAtFault);
}
