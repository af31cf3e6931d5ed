#include "signrec/ctc/ctc.hpp"

#include <algorithm>
#include <cmath>

#include "logspace.hpp"

namespace signrec::ctc {

template <typename Real>
LogitSequence<Real>::LogitSequence(nn::Tensor<Real> s, std::size_t length)
    : scores(std::move(s)), input_length(length) {
  if (scores.rank() != 2) {
    throw DimensionError("logit sequence must be [T, V+1], got " + nn::shape_str(scores.shape()));
  }
  if (scores.dim(1) < 2) throw DimensionError("logit sequence needs at least one gloss and the blank");
  if (input_length > scores.dim(0)) {
    throw DimensionError("input length " + std::to_string(input_length) + " exceeds padded T " +
                         std::to_string(scores.dim(0)));
  }
}

std::size_t required_frames(const Labeling& target) {
  std::size_t n = target.size();
  for (std::size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++n;
  }
  return n;
}

Labeling collapse(std::span<const int> path, int blank) {
  Labeling out;
  int prev = -1;
  for (int k : path) {
    if (k != prev && k != blank) out.push_back(k);
    prev = k;
  }
  return out;
}

namespace {

using detail::log_add;

// Extended label sequence: blank, l1, blank, l2, ..., blank.
std::vector<int> extend(const Labeling& target, int blank) {
  std::vector<int> ext(2 * target.size() + 1, blank);
  for (std::size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  return ext;
}

bool valid_labels(const Labeling& target, int blank) {
  return std::all_of(target.begin(), target.end(), [&](int k) { return k >= 0 && k < blank; });
}

// alpha[t][s]: log mass of prefixes of length t+1 ending in state s,
// emission at t included.
std::vector<double> forward_table(const std::vector<double>& lp, std::size_t frames,
                                  std::size_t classes, const std::vector<int>& ext) {
  const std::size_t S = ext.size();
  const int blank = ext.front();
  std::vector<double> alpha(frames * S, kLogZero);
  alpha[0] = lp[static_cast<std::size_t>(ext[0])];
  if (S > 1) alpha[1] = lp[static_cast<std::size_t>(ext[1])];
  for (std::size_t t = 1; t < frames; ++t) {
    const double* prev = &alpha[(t - 1) * S];
    double* cur = &alpha[t * S];
    const double* row = &lp[t * classes];
    for (std::size_t s = 0; s < S; ++s) {
      double a = prev[s];
      if (s >= 1) a = log_add(a, prev[s - 1]);
      if (s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]) a = log_add(a, prev[s - 2]);
      cur[s] = a == kLogZero ? kLogZero : a + row[static_cast<std::size_t>(ext[s])];
    }
  }
  return alpha;
}

double total_log_prob(const std::vector<double>& alpha, std::size_t frames, std::size_t S) {
  const double* last = &alpha[(frames - 1) * S];
  return S > 1 ? log_add(last[S - 1], last[S - 2]) : last[S - 1];
}

}  // namespace

template <typename Real>
CtcResult<Real> ctc_loss(const LogitSequence<Real>& logits, const Labeling& target) {
  const int blank = logits.blank();
  if (!valid_labels(target, blank)) throw InputError("target contains an id outside [0, blank)");
  const std::size_t frames = logits.input_length;
  const std::size_t need = required_frames(target);
  if (frames < need || frames == 0) throw InfeasibleTarget(std::max<std::size_t>(need, 1), frames);

  const std::size_t K = logits.classes();
  const auto lp = detail::log_softmax(logits.scores, frames);
  const auto ext = extend(target, blank);
  const std::size_t S = ext.size();
  const auto alpha = forward_table(lp, frames, K, ext);
  const double log_p = total_log_prob(alpha, frames, S);

  // beta[t][s]: log mass of completing from state s at t, emission at t excluded.
  std::vector<double> beta(frames * S, kLogZero);
  beta[(frames - 1) * S + S - 1] = 0.0;
  if (S > 1) beta[(frames - 1) * S + S - 2] = 0.0;
  for (std::size_t t = frames - 1; t-- > 0;) {
    const double* next = &beta[(t + 1) * S];
    const double* row = &lp[(t + 1) * K];
    double* cur = &beta[t * S];
    for (std::size_t s = 0; s < S; ++s) {
      double b = next[s] + row[static_cast<std::size_t>(ext[s])];
      if (s + 1 < S) b = log_add(b, next[s + 1] + row[static_cast<std::size_t>(ext[s + 1])]);
      if (s + 2 < S && ext[s + 2] != blank && ext[s + 2] != ext[s]) {
        b = log_add(b, next[s + 2] + row[static_cast<std::size_t>(ext[s + 2])]);
      }
      cur[s] = b;
    }
  }

  CtcResult<Real> result;
  result.loss = -log_p;
  result.gradient = nn::Tensor<Real>(logits.scores.shape());
  std::vector<double> occupancy(K);
  for (std::size_t t = 0; t < frames; ++t) {
    std::fill(occupancy.begin(), occupancy.end(), kLogZero);
    for (std::size_t s = 0; s < S; ++s) {
      const auto k = static_cast<std::size_t>(ext[s]);
      occupancy[k] = log_add(occupancy[k], alpha[t * S + s] + beta[t * S + s]);
    }
    Real* g = result.gradient.row(t);
    for (std::size_t k = 0; k < K; ++k) {
      const double post = occupancy[k] == kLogZero ? 0.0 : std::exp(occupancy[k] - log_p);
      g[k] = static_cast<Real>(std::exp(lp[t * K + k]) - post);
    }
  }
  return result;
}

template <typename Real>
double labeling_log_prob(const LogitSequence<Real>& logits, const Labeling& labeling) {
  const int blank = logits.blank();
  const std::size_t frames = logits.input_length;
  if (!valid_labels(labeling, blank)) return kLogZero;
  if (frames == 0) return labeling.empty() ? 0.0 : kLogZero;
  if (frames < required_frames(labeling)) return kLogZero;
  const auto lp = detail::log_softmax(logits.scores, frames);
  const auto ext = extend(labeling, blank);
  const auto alpha = forward_table(lp, frames, logits.classes(), ext);
  return total_log_prob(alpha, frames, ext.size());
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Correct: return "Correct";
    case Verdict::NetworkAtFault: return "NetworkAtFault";
    case Verdict::SearchAtFault: return "SearchAtFault";
  }
  return "Unknown";
}

Verdict verdict_from_string(const std::string& s) {
  if (s == "Correct") return Verdict::Correct;
  if (s == "NetworkAtFault") return Verdict::NetworkAtFault;
  if (s == "SearchAtFault") return Verdict::SearchAtFault;
  throw InputError("unknown verdict \"" + s + "\"");
}

template <typename Real>
FaultDiagnosis diagnose(const LogitSequence<Real>& logits, const Labeling& reference,
                        std::size_t beam_size) {
  FaultDiagnosis d;
  const auto beams = beam_decode(logits, beam_size);
  d.decoded = beams.empty() ? Labeling{} : beams.front().labeling;
  d.log_p_reference = labeling_log_prob(logits, reference);
  d.log_p_decoded = labeling_log_prob(logits, d.decoded);
  if (d.decoded == reference) {
    d.verdict = Verdict::Correct;
  } else if (d.log_p_reference > d.log_p_decoded) {
    d.verdict = Verdict::SearchAtFault;
  } else {
    d.verdict = Verdict::NetworkAtFault;
  }
  return d;
}

template struct LogitSequence<float>;
template struct LogitSequence<double>;
template CtcResult<float> ctc_loss<float>(const LogitSequence<float>&, const Labeling&);
template CtcResult<double> ctc_loss<double>(const LogitSequence<double>&, const Labeling&);
template double labeling_log_prob<float>(const LogitSequence<float>&, const Labeling&);
template double labeling_log_prob<double>(const LogitSequence<double>&, const Labeling&);
template FaultDiagnosis diagnose<float>(const LogitSequence<float>&, const Labeling&, std::size_t);
template FaultDiagnosis diagnose<double>(const LogitSequence<double>&, const Labeling&,
                                         std::size_t);

}  // namespace signrec::ctc
