#include "signrec/eval/alignment.hpp"

#include <tuple>
#include <vector>

namespace signrec::eval {

namespace {

// (cost, insertions, deletions), compared lexicographically.
using Key = std::tuple<std::size_t, std::size_t, std::size_t>;

}  // namespace

EditAlignment edit_alignment(const ctc::Labeling& reference, const ctc::Labeling& hypothesis) {
  const std::size_t n = reference.size(), m = hypothesis.size();
  std::vector<Key> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = {j, j, 0};
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = {i, 0, i};
    for (std::size_t j = 1; j <= m; ++j) {
      const auto& [dc, di, dd] = prev[j - 1];
      const std::size_t sub = reference[i - 1] != hypothesis[j - 1] ? 1 : 0;
      Key best{dc + sub, di, dd};
      const auto& [lc, li, ld] = cur[j - 1];
      best = std::min(best, Key{lc + 1, li + 1, ld});
      const auto& [uc, ui, ud] = prev[j];
      best = std::min(best, Key{uc + 1, ui, ud + 1});
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  const auto& [cost, ins, del] = prev[m];
  EditAlignment a;
  a.insertions = ins;
  a.deletions = del;
  a.substitutions = cost - ins - del;
  a.reference_length = n;
  return a;
}

std::size_t edit_distance(const ctc::Labeling& a, const ctc::Labeling& b) {
  return edit_alignment(a, b).errors();
}

double percent_one_decimal(std::size_t errors, std::size_t words) {
  if (words == 0) throw UndefinedMetricError("word error rate is undefined for empty references");
  const std::size_t tenths = (2000 * errors + words) / (2 * words);
  return static_cast<double>(tenths) / 10.0;
}

double wer_percent(std::span<const EditAlignment> alignments) {
  std::size_t errors = 0, words = 0;
  for (const auto& a : alignments) {
    errors += a.errors();
    words += a.reference_length;
  }
  return percent_one_decimal(errors, words);
}

}  // namespace signrec::eval
