#include <cmath>

#include "signrec/ctc/ctc.hpp"

namespace signrec::ctc {

// Brute force: walk every path depth-first, multiply per-frame
// probabilities, collapse at the leaves. Independent of the forward-backward
// recursion on purpose.
template <typename Real>
std::map<Labeling, double> enumerate_oracle(const LogitSequence<Real>& logits,
                                            std::size_t max_frames, std::size_t max_glosses) {
  const std::size_t frames = logits.input_length;
  const std::size_t K = logits.classes();
  if (frames > max_frames || K - 1 > max_glosses) {
    throw ConfigError("oracle enumeration refused: T=" + std::to_string(frames) +
                      ", V=" + std::to_string(K - 1) + " exceeds limits T<=" +
                      std::to_string(max_frames) + ", V<=" + std::to_string(max_glosses));
  }
  std::vector<double> prob(frames * K);
  for (std::size_t t = 0; t < frames; ++t) {
    const Real* row = logits.scores.row(t);
    double m = row[0];
    for (std::size_t k = 1; k < K; ++k) m = std::max(m, static_cast<double>(row[k]));
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) z += std::exp(static_cast<double>(row[k]) - m);
    for (std::size_t k = 0; k < K; ++k) prob[t * K + k] = std::exp(static_cast<double>(row[k]) - m) / z;
  }

  std::map<Labeling, double> dist;
  std::vector<int> path(frames, 0);
  const int blank = logits.blank();
  // Odometer over (V+1)^T paths.
  while (true) {
    double p = 1.0;
    for (std::size_t t = 0; t < frames; ++t) p *= prob[t * K + static_cast<std::size_t>(path[t])];
    dist[collapse(path, blank)] += p;
    std::size_t pos = 0;
    while (pos < frames && ++path[pos] == static_cast<int>(K)) path[pos++] = 0;
    if (pos == frames) break;
  }
  return dist;
}

template std::map<Labeling, double> enumerate_oracle<float>(const LogitSequence<float>&,
                                                            std::size_t, std::size_t);
template std::map<Labeling, double> enumerate_oracle<double>(const LogitSequence<double>&,
                                                             std::size_t, std::size_t);

}  // namespace signrec::ctc
