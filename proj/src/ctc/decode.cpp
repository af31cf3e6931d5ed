#include <algorithm>
#include <map>
#include <utility>

#include "logspace.hpp"
#include "signrec/ctc/ctc.hpp"

namespace signrec::ctc {

template <typename Real>
Labeling greedy_decode(const LogitSequence<Real>& logits) {
  const std::size_t K = logits.classes();
  std::vector<int> path;
  path.reserve(logits.input_length);
  for (std::size_t t = 0; t < logits.input_length; ++t) {
    const Real* row = logits.scores.row(t);
    std::size_t best = 0;
    for (std::size_t k = 1; k < K; ++k) {
      if (row[k] > row[best]) best = k;
    }
    path.push_back(static_cast<int>(best));
  }
  return collapse(path, logits.blank());
}

namespace {

using detail::log_add;

// A live prefix and its forward table over the extended states
// (blank, l1, blank, ..., l_n, blank), one column per elapsed frame. The last
// two states hold the non-blank-ending and blank-ending mass of the prefix.
struct Prefix {
  Labeling labels;
  std::vector<double> alpha;  // [frames_done][states]

  std::size_t states() const { return 2 * labels.size() + 1; }
  double mass(std::size_t t) const {
    const std::size_t S = states();
    const double* col = &alpha[t * S];
    return S > 1 ? log_add(col[S - 1], col[S - 2]) : col[0];
  }
};

// Rows for the two states appended when `symbol` extends `parent`, over
// frames 0..t. The parent's table must already hold column t.
struct Extension {
  std::vector<double> label_row, blank_row;
  double score = kLogZero;
};

Extension extend_rows(const Prefix& parent, int symbol, int blank, const std::vector<double>& lp,
                      std::size_t K, std::size_t t) {
  const std::size_t S = parent.states();
  const bool repeat = !parent.labels.empty() && parent.labels.back() == symbol;
  Extension e;
  e.label_row.assign(t + 1, kLogZero);
  e.blank_row.assign(t + 1, kLogZero);
  for (std::size_t tau = 0; tau <= t; ++tau) {
    const double y_label = lp[tau * K + static_cast<std::size_t>(symbol)];
    const double y_blank = lp[tau * K + static_cast<std::size_t>(blank)];
    double into_label, into_blank;
    if (tau == 0) {
      into_label = parent.labels.empty() ? 0.0 : kLogZero;
      into_blank = kLogZero;
    } else {
      const double* prev = &parent.alpha[(tau - 1) * S];
      into_label = log_add(e.label_row[tau - 1], prev[S - 1]);
      if (!repeat && S >= 2) into_label = log_add(into_label, prev[S - 2]);
      into_blank = log_add(e.blank_row[tau - 1], e.label_row[tau - 1]);
    }
    e.label_row[tau] = into_label == kLogZero ? kLogZero : into_label + y_label;
    e.blank_row[tau] = into_blank == kLogZero ? kLogZero : into_blank + y_blank;
  }
  e.score = log_add(e.label_row[t], e.blank_row[t]);
  return e;
}

// Appends column t to a prefix that already has columns 0..t-1.
void advance(Prefix& p, const std::vector<double>& lp, std::size_t K, std::size_t t, int blank) {
  const std::size_t S = p.states();
  p.alpha.resize((t + 1) * S, kLogZero);
  double* cur = &p.alpha[t * S];
  for (std::size_t s = 0; s < S; ++s) {
    const int label = (s % 2 == 0) ? blank : p.labels[s / 2];
    double in;
    if (t == 0) {
      in = s == 0 ? 0.0 : kLogZero;
    } else {
      const double* prev = &p.alpha[(t - 1) * S];
      in = prev[s];
      if (s >= 1) in = log_add(in, prev[s - 1]);
      if (s >= 2 && label != blank && label != p.labels[s / 2 - 1]) in = log_add(in, prev[s - 2]);
    }
    cur[s] = in == kLogZero ? kLogZero : in + lp[t * K + static_cast<std::size_t>(label)];
  }
}

struct Candidate {
  std::size_t parent;
  int symbol;  // -1: the parent prefix itself
  double score;
  Labeling labels;
};

struct WorseCandidate {
  const std::vector<Candidate>* pool;
  bool operator()(std::size_t a, std::size_t b) const {
    const auto& x = (*pool)[a];
    const auto& y = (*pool)[b];
    if (x.score != y.score) return x.score < y.score;
    return x.labels > y.labels;
  }
};

}  // namespace

// Selection is nested: slot j of the next beam takes the best candidate not
// already chosen among those grown from slots 0..j of the current beam. A
// width-b beam is therefore always the first b slots of any wider beam, and
// since every score is the exact prefix mass, the best final labeling can
// only improve as the width grows.
template <typename Real>
std::vector<Hypothesis> beam_decode(const LogitSequence<Real>& logits, std::size_t beam_size) {
  if (beam_size == 0) throw ConfigError("beam size must be at least 1");
  const std::size_t K = logits.classes();
  const int blank = logits.blank();
  const std::size_t frames = logits.input_length;
  if (frames == 0) return {{Labeling{}, 0.0}};
  const auto lp = detail::log_softmax(logits.scores, frames);

  std::vector<Prefix> beam{Prefix{}};
  for (std::size_t t = 0; t < frames; ++t) {
    for (auto& p : beam) advance(p, lp, K, t, blank);

    std::vector<Candidate> pool;
    std::vector<Extension> extensions;
    std::map<Labeling, std::size_t> seen;
    std::vector<std::size_t> heap;
    const WorseCandidate worse{&pool};
    auto offer = [&](Candidate c, Extension e) {
      if (c.score == kLogZero || seen.count(c.labels)) return;
      seen.emplace(c.labels, pool.size());
      heap.push_back(pool.size());
      pool.push_back(std::move(c));
      extensions.push_back(std::move(e));
      std::push_heap(heap.begin(), heap.end(), worse);
    };

    std::vector<Prefix> next;
    for (std::size_t slot = 0; slot < beam_size; ++slot) {
      if (slot < beam.size()) {
        const Prefix& parent = beam[slot];
        offer({slot, -1, parent.mass(t), parent.labels}, {});
        for (int k = 0; k < blank; ++k) {
          auto ext = extend_rows(parent, k, blank, lp, K, t);
          Labeling labels = parent.labels;
          labels.push_back(k);
          const double score = ext.score;
          offer({slot, k, score, std::move(labels)}, std::move(ext));
        }
      }
      if (heap.empty()) break;
      std::pop_heap(heap.begin(), heap.end(), worse);
      const std::size_t idx = heap.back();
      heap.pop_back();

      const auto& c = pool[idx];
      const Prefix& parent = beam[c.parent];
      if (c.symbol < 0) {
        next.push_back(parent);
        continue;
      }
      const auto& ext = extensions[idx];
      Prefix child{c.labels, {}};
      const std::size_t Sp = parent.states(), Sc = child.states();
      child.alpha.assign((t + 1) * Sc, kLogZero);
      for (std::size_t tau = 0; tau <= t; ++tau) {
        std::copy_n(&parent.alpha[tau * Sp], Sp, &child.alpha[tau * Sc]);
        child.alpha[tau * Sc + Sp] = ext.label_row[tau];
        child.alpha[tau * Sc + Sp + 1] = ext.blank_row[tau];
      }
      next.push_back(std::move(child));
    }
    beam = std::move(next);
  }

  std::vector<Hypothesis> out;
  out.reserve(beam.size());
  for (const auto& p : beam) out.push_back({p.labels, p.mass(frames - 1)});
  std::stable_sort(out.begin(), out.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.labeling < b.labeling;
  });
  return out;
}

template Labeling greedy_decode<float>(const LogitSequence<float>&);
template Labeling greedy_decode<double>(const LogitSequence<double>&);
template std::vector<Hypothesis> beam_decode<float>(const LogitSequence<float>&, std::size_t);
template std::vector<Hypothesis> beam_decode<double>(const LogitSequence<double>&, std::size_t);

}  // namespace signrec::ctc
