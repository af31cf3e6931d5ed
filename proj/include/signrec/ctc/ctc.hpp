#pragma once

// Connectionist temporal classification over per-frame scores.
//
// Scores are unnormalised; every operation applies a log-softmax per row
// first. The last class is the blank. Rows at or beyond input_length are
// padding and never read.

#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "signrec/ctc/vocabulary.hpp"
#include "signrec/errors.hpp"
#include "signrec/nn/tensor.hpp"

namespace signrec::ctc {

template <typename Real>
struct LogitSequence {
  nn::Tensor<Real> scores;  // [T_padded, V + 1]
  std::size_t input_length = 0;

  LogitSequence() = default;
  LogitSequence(nn::Tensor<Real> s, std::size_t length);
  explicit LogitSequence(nn::Tensor<Real> s) : LogitSequence(s, s.dim(0)) {}

  std::size_t classes() const { return scores.dim(1); }
  int blank() const { return static_cast<int>(classes()) - 1; }
};

// Target too long for the available frames.
class InfeasibleTarget : public Error {
 public:
  InfeasibleTarget(std::size_t required, std::size_t available)
      : Error("infeasible CTC target: needs at least " + std::to_string(required) +
              " frames, have " + std::to_string(available)),
        required_(required) {}
  std::size_t required() const noexcept { return required_; }

 private:
  std::size_t required_;
};

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// Minimum frame count for a target: its length plus one separating blank per
// adjacent repeated pair.
std::size_t required_frames(const Labeling& target);

// Merge adjacent repeats, then drop blanks.
Labeling collapse(std::span<const int> path, int blank);

template <typename Real>
struct CtcResult {
  double loss = 0.0;             // -log p(target | scores)
  nn::Tensor<Real> gradient;     // d loss / d scores, zero on padding rows
};

// Forward-backward in log space. Throws InfeasibleTarget when the target
// cannot fit in input_length frames, InputError on ids outside [0, blank).
template <typename Real>
CtcResult<Real> ctc_loss(const LogitSequence<Real>& logits, const Labeling& target);

// log p(labeling | scores); -inf for infeasible or invalid labelings.
template <typename Real>
double labeling_log_prob(const LogitSequence<Real>& logits, const Labeling& labeling);

// Best-path decoding: per-row argmax (ties to the lowest id), then collapse.
template <typename Real>
Labeling greedy_decode(const LogitSequence<Real>& logits);

struct Hypothesis {
  Labeling labeling;
  double log_prob;  // merged prefix probability over all alignments kept by the beam
};

// Prefix beam search with separate blank / non-blank ending mass. Returns at
// most beam_size hypotheses, best first. Throws ConfigError for beam_size 0.
template <typename Real>
std::vector<Hypothesis> beam_decode(const LogitSequence<Real>& logits, std::size_t beam_size);

// Exact distribution over labelings by enumerating all (V+1)^T paths.
// Refuses (ConfigError) when T > max_frames or V > max_glosses.
template <typename Real>
std::map<Labeling, double> enumerate_oracle(const LogitSequence<Real>& logits,
                                            std::size_t max_frames = 8,
                                            std::size_t max_glosses = 4);

enum class Verdict { Correct, NetworkAtFault, SearchAtFault };

std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);

struct FaultDiagnosis {
  double log_p_reference = kLogZero;
  double log_p_decoded = kLogZero;
  Labeling decoded;
  Verdict verdict = Verdict::Correct;
};

// Beam-search error analysis. The decoded labeling is the beam's top-1; both
// labelings are then scored exactly. If the reference outscores the decoded
// labeling the search is at fault, otherwise the network is (ties included).
template <typename Real>
FaultDiagnosis diagnose(const LogitSequence<Real>& logits, const Labeling& reference,
                        std::size_t beam_size);

}  // namespace signrec::ctc
