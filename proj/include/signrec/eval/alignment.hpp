#pragma once

#include <cstddef>
#include <span>

#include "signrec/ctc/vocabulary.hpp"
#include "signrec/errors.hpp"

namespace signrec::eval {

// Edit counts turning a reference into a hypothesis.
struct EditAlignment {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t reference_length = 0;

  std::size_t errors() const { return substitutions + deletions + insertions; }
  bool operator==(const EditAlignment&) const = default;
};

// Unit-cost Levenshtein alignment. Among minimum-cost alignments the one with
// fewest insertions wins, then fewest deletions.
EditAlignment edit_alignment(const ctc::Labeling& reference, const ctc::Labeling& hypothesis);

std::size_t edit_distance(const ctc::Labeling& a, const ctc::Labeling& b);

// WER over a split is undefined when every reference is empty.
class UndefinedMetricError : public InputError {
 public:
  using InputError::InputError;
};

// Sum(S + D + I) / Sum(N) as a percentage rounded half-up to one decimal.
double wer_percent(std::span<const EditAlignment> alignments);

// Exact half-up rounding of 100 * errors / words to one decimal.
double percent_one_decimal(std::size_t errors, std::size_t words);

}  // namespace signrec::eval
