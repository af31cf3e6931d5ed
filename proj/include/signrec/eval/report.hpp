#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "signrec/ctc/ctc.hpp"
#include "signrec/data/batch.hpp"
#include "signrec/eval/alignment.hpp"

namespace signrec::eval {

struct SentenceResult {
  std::string id;
  std::vector<std::string> reference;
  std::vector<std::string> hypothesis;
  EditAlignment alignment;
  ctc::Verdict verdict = ctc::Verdict::Correct;

  bool operator==(const SentenceResult&) const = default;
};

struct EvalReport {
  std::string split;
  std::size_t beam_size = 0;
  std::vector<SentenceResult> sentences;

  // Recomputed from the stored sentences.
  double wer_percent() const;
  // Verdict counts over sentences with at least one edit.
  std::map<ctc::Verdict, std::size_t> fault_tallies() const;

  bool operator==(const EvalReport&) const = default;
};

// Per-sentence scores [T_i, V+1] for one batch, in batch order.
using LogitFn = std::function<std::vector<ctc::LogitSequence<float>>(const data::Batch&)>;

struct EvalOptions {
  std::size_t beam_size = 8;
  std::size_t batch_size = 8;
  std::size_t workers = 1;  // parallel decoding
  std::string split = "dev";
};

// Decodes every sentence of `ds` with beam search and aligns it against the
// reference. `model_vocab` must equal the dataset's vocabulary.
EvalReport evaluate(const data::Dataset& ds, const ctc::GlossVocabulary& model_vocab, const LogitFn& logits,
                    const EvalOptions& options);

enum class ReportFormat { Text, Json };

ReportFormat report_format_from_string(const std::string& s);

std::string render_report(const EvalReport& report, ReportFormat format);

// Two-column Dev/Test WER table; either side may be null.
std::string render_table(const EvalReport* dev, const EvalReport* test);

EvalReport report_from_json(const std::string& text);

}  // namespace signrec::eval
