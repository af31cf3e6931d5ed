#include "signrec/eval/report.hpp"

#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "signrec/parallel.hpp"

namespace signrec::eval {

using nlohmann::ordered_json;

double EvalReport::wer_percent() const {
  std::vector<EditAlignment> a;
  a.reserve(sentences.size());
  for (const auto& s : sentences) a.push_back(s.alignment);
  return eval::wer_percent(a);
}

std::map<ctc::Verdict, std::size_t> EvalReport::fault_tallies() const {
  std::map<ctc::Verdict, std::size_t> out{{ctc::Verdict::NetworkAtFault, 0}, {ctc::Verdict::SearchAtFault, 0}};
  for (const auto& s : sentences) {
    if (s.alignment.errors() > 0) ++out[s.verdict];
  }
  return out;
}

EvalReport evaluate(const data::Dataset& ds, const ctc::GlossVocabulary& model_vocab, const LogitFn& logits,
                    const EvalOptions& options) {
  if (!(model_vocab == ds.vocabulary())) {
    throw ConfigError("model vocabulary (" + std::to_string(model_vocab.size()) +
                      " glosses) does not match the dataset vocabulary (" +
                      std::to_string(ds.vocabulary().size()) + " glosses)");
  }
  if (options.beam_size == 0) throw ConfigError("beam size must be at least 1");
  if (options.batch_size == 0) throw ConfigError("batch size must be at least 1");
  EvalReport report;
  report.split = options.split;
  report.beam_size = options.beam_size;
  report.sentences.resize(ds.size());

  std::vector<ctc::LogitSequence<float>> scores(ds.size());
  data::BatchStream stream(ds, options.batch_size, 0, false);
  for (const auto& indices : stream.epoch_batches(0)) {
    auto out = logits(data::make_batch(ds, indices));
    if (out.size() != indices.size()) throw DimensionError("logit function returned the wrong batch size");
    for (std::size_t k = 0; k < indices.size(); ++k) {
      if (out[k].classes() != static_cast<std::size_t>(model_vocab.classes())) {
        throw DimensionError("logit rows have " + std::to_string(out[k].classes()) + " classes, expected " +
                             std::to_string(model_vocab.classes()));
      }
      scores[indices[k]] = std::move(out[k]);
    }
  }

  parallel_for(ds.size(), options.workers, [&](std::size_t i) {
    const auto& rec = ds.record(i);
    const auto diag = ctc::diagnose(scores[i], rec.target, options.beam_size);
    SentenceResult& s = report.sentences[i];
    s.id = rec.id;
    s.reference = rec.gloss;
    s.hypothesis = model_vocab.decode(diag.decoded);
    s.alignment = edit_alignment(rec.target, diag.decoded);
    s.verdict = diag.verdict;
  });
  return report;
}

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "text") return ReportFormat::Text;
  if (s == "json") return ReportFormat::Json;
  throw ConfigError("unknown report format \"" + s + "\" (expected text or json)");
}

namespace {

std::string fixed1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
  return out;
}

std::string wer_cell(const EvalReport* r) { return r ? fixed1(r->wer_percent()) : "-"; }

std::string render_json(const EvalReport& r) {
  ordered_json j;
  j["split"] = r.split;
  j["wer_percent"] = r.wer_percent();
  j["sentences"] = ordered_json::array();
  for (const auto& s : r.sentences) {
    ordered_json e;
    e["id"] = s.id;
    e["ref"] = s.reference;
    e["hyp"] = s.hypothesis;
    e["S"] = s.alignment.substitutions;
    e["D"] = s.alignment.deletions;
    e["I"] = s.alignment.insertions;
    e["N"] = s.alignment.reference_length;
    e["verdict"] = ctc::to_string(s.verdict);
    j["sentences"].push_back(std::move(e));
  }
  j["beam_size"] = r.beam_size;
  return j.dump(2) + "\n";
}

std::string render_text(const EvalReport& r) {
  std::ostringstream os;
  if (r.split == "test") {
    os << render_table(nullptr, &r);
  } else if (r.split == "dev") {
    os << render_table(&r, nullptr);
  } else {
    os << render_table(nullptr, nullptr) << r.split << " WER: " << fixed1(r.wer_percent()) << "\n";
  }
  const auto faults = r.fault_tallies();
  os << "\nsplit " << r.split << ", beam size " << r.beam_size << ", " << r.sentences.size() << " sentences\n";
  os << "errored sentences: network at fault " << faults.at(ctc::Verdict::NetworkAtFault)
     << ", search at fault " << faults.at(ctc::Verdict::SearchAtFault) << "\n\n";
  for (const auto& s : r.sentences) {
    const auto& a = s.alignment;
    os << s.id << "  S=" << a.substitutions << " D=" << a.deletions << " I=" << a.insertions
       << " N=" << a.reference_length << "  " << ctc::to_string(s.verdict) << "\n"
       << "  ref: " << join(s.reference) << "\n"
       << "  hyp: " << join(s.hypothesis) << "\n";
  }
  return os.str();
}

}  // namespace

std::string render_table(const EvalReport* dev, const EvalReport* test) {
  std::ostringstream os;
  os << "| Model     | Dev (WER) | Test (WER) |\n"
     << "|-----------|-----------|------------|\n";
  char row[96];
  std::snprintf(row, sizeof row, "| %-9s | %9s | %10s |\n", "signrec", wer_cell(dev).c_str(), wer_cell(test).c_str());
  os << row;
  return os.str();
}

std::string render_report(const EvalReport& report, ReportFormat format) {
  return format == ReportFormat::Json ? render_json(report) : render_text(report);
}

EvalReport report_from_json(const std::string& text) {
  EvalReport r;
  try {
    const auto j = ordered_json::parse(text);
    r.split = j.at("split").get<std::string>();
    r.beam_size = j.at("beam_size").get<std::size_t>();
    for (const auto& e : j.at("sentences")) {
      SentenceResult s;
      s.id = e.at("id").get<std::string>();
      s.reference = e.at("ref").get<std::vector<std::string>>();
      s.hypothesis = e.at("hyp").get<std::vector<std::string>>();
      s.alignment.substitutions = e.at("S").get<std::size_t>();
      s.alignment.deletions = e.at("D").get<std::size_t>();
      s.alignment.insertions = e.at("I").get<std::size_t>();
      s.alignment.reference_length = e.at("N").get<std::size_t>();
      s.verdict = ctc::verdict_from_string(e.at("verdict").get<std::string>());
      r.sentences.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed evaluation report: ") + e.what());
  }
  return r;
}

}  // namespace signrec::eval
