#include "signrec/cli/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <map>
#include <optional>
#include <set>
#include <ostream>
#include <sstream>

#include "signrec/cues/io.hpp"
#include "signrec/eval/report.hpp"
#include "signrec/models/checkpoint.hpp"
#include "signrec/models/trainer.hpp"
#include "signrec/parallel.hpp"
#include "signrec/synth/corpus.hpp"

namespace signrec::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct Options {
  std::string spec, config, manifest, dev, checkpoint, out, logits, vocab, cues, landmarks, frames;
  std::optional<std::size_t> beam;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  std::string format = "text";
};

constexpr std::size_t kDefaultBeam = 8;
constexpr std::size_t kEvalBatch = 8;

json read_json_file(const fs::path& path) {
  try {
    return json::parse(cues::read_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

// Output goes to --out when given, else to the stream.
void emit(const Options& o, std::ostream& out, const std::string& text) {
  if (o.out.empty()) {
    out << text;
  } else {
    cues::write_file(o.out, text);
  }
}

// Vocabulary for reading a manifest: --vocab, else vocab.txt next to the
// manifest, else the fallback.
ctc::GlossVocabulary manifest_vocabulary(const Options& o, const fs::path& manifest,
                                         const ctc::GlossVocabulary* fallback) {
  if (!o.vocab.empty()) return ctc::GlossVocabulary::load(o.vocab);
  const fs::path beside = manifest.parent_path() / "vocab.txt";
  if (fs::exists(beside)) return ctc::GlossVocabulary::load(beside);
  if (fallback) return *fallback;
  throw IoError("no vocabulary for " + manifest.string() + "; pass --vocab");
}

data::DatasetOptions dataset_options(const models::ModelConfig& c, const std::string& cue_dir) {
  data::DatasetOptions d;
  d.kind = c.input_kind();
  d.skeleton_side = c.skeleton_side;
  if (!cue_dir.empty() && d.kind == data::InputKind::Cues) d.cue_dir = fs::path(cue_dir);
  return d;
}

std::vector<ctc::LogitSequence<float>> all_logits(models::Model<float>& model, const data::Dataset& ds) {
  std::vector<ctc::LogitSequence<float>> out(ds.size());
  data::BatchStream stream(ds, kEvalBatch, 0, false);
  for (const auto& idx : stream.epoch_batches(0)) {
    auto part = models::infer_logits(model, data::make_batch(ds, idx));
    for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] = std::move(part[k]);
  }
  return out;
}

// Score file for decode/diagnose without a model:
// {"vocabulary": [...], "sentences": [{"id", "scores": [[...], ...], "ref": [...]}]}
struct ScoreFile {
  ctc::GlossVocabulary vocabulary;
  std::vector<std::string> ids;
  std::vector<ctc::LogitSequence<float>> logits;
  std::vector<std::optional<ctc::Labeling>> references;
};

ScoreFile read_score_file(const fs::path& path) {
  const json j = read_json_file(path);
  ScoreFile f;
  try {
    f.vocabulary = ctc::GlossVocabulary(j.at("vocabulary").get<std::vector<std::string>>());
    const std::size_t K = static_cast<std::size_t>(f.vocabulary.classes());
    for (const auto& s : j.at("sentences")) {
      const auto rows = s.at("scores").get<std::vector<std::vector<double>>>();
      if (rows.empty()) throw SchemaError(path.string() + ": sentence without score rows");
      nn::Tensor<float> t({rows.size(), K});
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != K) {
          throw SchemaError(path.string() + ": score rows need " + std::to_string(K) + " values (glosses + blank)");
        }
        for (std::size_t k = 0; k < K; ++k) t.at(r, k) = static_cast<float>(rows[r][k]);
      }
      f.ids.push_back(s.at("id").get<std::string>());
      f.logits.emplace_back(std::move(t), rows.size());
      if (s.contains("ref")) {
        f.references.emplace_back(f.vocabulary.encode(s.at("ref").get<std::vector<std::string>>()));
      } else {
        f.references.emplace_back();
      }
    }
  } catch (const json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return f;
}

std::string join(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) s += (s.empty() ? "" : " ") + w;
  return s;
}

// ------------------------------------------------------------------ generate

int cmd_generate(const Options& o, std::ostream& out) {
  synth::CorpusSpec spec = o.spec.empty() ? synth::CorpusSpec{} : synth::load_corpus_spec(o.spec);
  if (o.seed) spec.seed = *o.seed;
  spec.validate();
  const auto corpus = synth::generate_dataset(spec, o.out);
  out << "generated " << corpus.train.size() << " train, " << corpus.dev.size() << " dev, " << corpus.test.size()
      << " test sentences over " << corpus.vocabulary.size() << " glosses in " << o.out << "\n";
  return kSuccess;
}

// ------------------------------------------------------------------- extract

int cmd_extract(const Options& o, std::ostream& out) {
  models::ModelConfig cfg = models::ModelConfig::mcsign_default(1);
  if (!o.config.empty()) {
    const json j = read_json_file(o.config);
    if (j.contains("model")) {
      json m = j.at("model");
      if (!m.contains("vocab_size")) m["vocab_size"] = 1;
      models::from_json(m, cfg);
    }
  }
  const auto vocab = manifest_vocabulary(o, o.manifest, nullptr);
  data::DatasetOptions d;
  d.skeleton_side = cfg.skeleton_side;
  const auto ds = data::load_manifest(o.manifest, vocab, d);
  fs::create_directories(o.out);
  parallel_for(ds.size(), o.workers, [&](std::size_t i) {
    cues::save_cues(fs::path(o.out) / (ds.record(i).id + ".cues"), ds.sample(i).cues);
  });
  out << "extracted cues for " << ds.size() << " sentences to " << o.out << "\n";
  return kSuccess;
}

// --------------------------------------------------------------------- train

int cmd_train(const Options& o, std::ostream& out) {
  const fs::path config_path = o.config;
  const fs::path base = config_path.parent_path();
  json j = read_json_file(config_path);
  static const std::set<std::string> known{"model",        "train",     "train_manifest", "dev_manifest",
                                           "cue_dir",      "beam_size", "time_budget_seconds"};
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw ConfigError("unknown training config key \"" + k + "\"");
  }
  auto resolve = [&](const std::string& flag, const char* key) -> std::string {
    if (!flag.empty()) return flag;
    if (!j.contains(key)) return {};
    const fs::path p = j.at(key).get<std::string>();
    return (p.is_absolute() ? p : base / p).string();
  };
  const std::string train_manifest = resolve(o.manifest, "train_manifest");
  const std::string dev_manifest = resolve(o.dev, "dev_manifest");
  const std::string cue_dir = resolve(o.cues, "cue_dir");
  if (train_manifest.empty()) throw ConfigError("no training manifest (--manifest or train_manifest)");

  const auto vocab = manifest_vocabulary(o, train_manifest, nullptr);
  json model_json = j.value("model", json::object());
  if (!model_json.contains("vocab_size")) model_json["vocab_size"] = vocab.size();
  models::ModelConfig cfg;
  models::from_json(model_json, cfg);

  models::FitOptions fo;
  if (j.contains("train")) models::from_json(j.at("train"), fo.train);
  if (o.seed) fo.train.seed = *o.seed;
  fo.beam_size = o.beam.value_or(j.value("beam_size", kDefaultBeam));
  fo.time_budget_seconds = j.value("time_budget_seconds", 0.0);
  fo.workers = o.workers;

  const auto opts = dataset_options(cfg, cue_dir);
  const auto train = data::load_manifest(train_manifest, vocab, opts);
  const auto dev = dev_manifest.empty() ? data::Dataset({}, vocab, opts) : data::load_manifest(dev_manifest, vocab, opts);

  fs::create_directories(o.out);
  std::ofstream log_file(fs::path(o.out) / "train.log");
  if (!log_file) throw IoError("cannot write " + (fs::path(o.out) / "train.log").string());
  struct Tee : std::streambuf {
    std::streambuf *a, *b;
    Tee(std::streambuf* x, std::streambuf* y) : a(x), b(y) {}
    int overflow(int c) override {
      if (c == EOF) return !EOF;
      return a->sputc(static_cast<char>(c)) == EOF || b->sputc(static_cast<char>(c)) == EOF ? EOF : c;
    }
    int sync() override { return a->pubsync() | b->pubsync(); }
  } tee(out.rdbuf(), log_file.rdbuf());
  std::ostream log(&tee);
  log << "training " << to_string(cfg.architecture) << " on " << train.size() << " sentences, "
      << dev.size() << " dev, seed " << fo.train.seed << "\n";

  auto model = models::build_model<float>(cfg, fo.train.seed);
  fo.log = &log;
  const auto result = models::fit(*model, train, dev, fo);
  models::save_checkpoint(fs::path(o.out) / "model.ckpt", result.best);

  json resolved, model_out, train_out;
  models::to_json(model_out, cfg);
  models::to_json(train_out, fo.train);
  resolved["model"] = model_out;
  resolved["train"] = train_out;
  resolved["beam_size"] = fo.beam_size;
  cues::write_file(fs::path(o.out) / "config.json", resolved.dump(2) + "\n");
  log << "wrote model.ckpt\n";
  log.flush();
  return kSuccess;
}

// ------------------------------------------------------------------ evaluate

int cmd_evaluate(const Options& o, std::ostream& out) {
  const auto ckpt = models::load_checkpoint(o.checkpoint);
  auto model = models::instantiate(ckpt);
  const auto vocab = manifest_vocabulary(o, o.manifest, &ckpt.vocabulary);
  const auto ds = data::load_manifest(o.manifest, vocab, dataset_options(ckpt.config, o.cues));
  eval::EvalOptions eo;
  eo.beam_size = o.beam.value_or(kDefaultBeam);
  eo.batch_size = kEvalBatch;
  eo.workers = o.workers;
  eo.split = fs::path(o.manifest).stem().string();
  const eval::LogitFn fn = [&](const data::Batch& b) { return models::infer_logits(*model, b); };
  const auto report = eval::evaluate(ds, ckpt.vocabulary, fn, eo);
  emit(o, out, eval::render_report(report, eval::report_format_from_string(o.format)));
  return kSuccess;
}

// -------------------------------------------------------- decode / diagnose

struct Scored {
  ctc::GlossVocabulary vocabulary;
  std::vector<std::string> ids;
  std::vector<ctc::LogitSequence<float>> logits;
  std::vector<std::optional<ctc::Labeling>> references;
};

Scored scored_from_logits_file(const Options& o) {
  auto f = read_score_file(o.logits);
  return {std::move(f.vocabulary), std::move(f.ids), std::move(f.logits), std::move(f.references)};
}

int cmd_decode(const Options& o, std::ostream& out) {
  Scored s;
  if (!o.logits.empty()) {
    s = scored_from_logits_file(o);
  } else {
    if (o.checkpoint.empty() || o.landmarks.empty()) {
      throw ConfigError("decode needs --checkpoint and --landmarks, or --logits");
    }
    const auto ckpt = models::load_checkpoint(o.checkpoint);
    auto model = models::instantiate(ckpt);
    data::Record r;
    r.id = fs::path(o.landmarks).stem().string();
    r.landmarks = o.landmarks;
    r.frames = o.frames;
    if (ckpt.config.input_kind() == data::InputKind::Frames && o.frames.empty()) {
      throw ConfigError("an RSignC checkpoint decodes rendered frames; pass --frames");
    }
    const data::Dataset ds({r}, ckpt.vocabulary, dataset_options(ckpt.config, ""));
    s.vocabulary = ckpt.vocabulary;
    s.ids = {r.id};
    s.logits = all_logits(*model, ds);
    s.references.resize(1);
  }
  const std::size_t beam = o.beam.value_or(kDefaultBeam);
  std::vector<std::string> lines(s.logits.size());
  parallel_for(s.logits.size(), o.workers, [&](std::size_t i) {
    const auto hyps = ctc::beam_decode(s.logits[i], beam);
    lines[i] = join(s.vocabulary.decode(hyps.empty() ? ctc::Labeling{} : hyps.front().labeling));
  });
  std::ostringstream text;
  if (o.format == "json") {
    ordered_json j = ordered_json::array();
    for (std::size_t i = 0; i < lines.size(); ++i) j.push_back({{"id", s.ids[i]}, {"hyp", lines[i]}});
    text << j.dump(2) << "\n";
  } else {
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (s.ids.size() > 1 || !o.logits.empty()) text << s.ids[i] << ": ";
      text << lines[i] << "\n";
    }
  }
  emit(o, out, text.str());
  return kSuccess;
}

int cmd_diagnose(const Options& o, std::ostream& out) {
  Scored s;
  if (!o.logits.empty()) {
    s = scored_from_logits_file(o);
    for (std::size_t i = 0; i < s.references.size(); ++i) {
      if (!s.references[i]) throw SchemaError("sentence " + s.ids[i] + " has no \"ref\" to diagnose against");
    }
  } else {
    if (o.checkpoint.empty() || o.manifest.empty()) {
      throw ConfigError("diagnose needs --checkpoint and --manifest, or --logits");
    }
    const auto ckpt = models::load_checkpoint(o.checkpoint);
    auto model = models::instantiate(ckpt);
    const auto vocab = manifest_vocabulary(o, o.manifest, &ckpt.vocabulary);
    if (!(vocab == ckpt.vocabulary)) throw ConfigError("manifest vocabulary differs from the checkpoint's");
    const auto ds = data::load_manifest(o.manifest, vocab, dataset_options(ckpt.config, o.cues));
    s.vocabulary = ckpt.vocabulary;
    s.logits = all_logits(*model, ds);
    for (const auto& r : ds.records()) {
      s.ids.push_back(r.id);
      s.references.emplace_back(r.target);
    }
  }
  const std::size_t beam = o.beam.value_or(kDefaultBeam);
  std::vector<ctc::FaultDiagnosis> diags(s.logits.size());
  parallel_for(s.logits.size(), o.workers,
               [&](std::size_t i) { diags[i] = ctc::diagnose(s.logits[i], *s.references[i], beam); });

  std::map<ctc::Verdict, std::size_t> tally{
      {ctc::Verdict::Correct, 0}, {ctc::Verdict::NetworkAtFault, 0}, {ctc::Verdict::SearchAtFault, 0}};
  for (const auto& d : diags) ++tally[d.verdict];
  std::ostringstream text;
  if (o.format == "json") {
    ordered_json j;
    j["beam_size"] = beam;
    for (const auto& [v, n] : tally) j["tallies"][ctc::to_string(v)] = n;
    j["sentences"] = ordered_json::array();
    for (std::size_t i = 0; i < diags.size(); ++i) {
      j["sentences"].push_back({{"id", s.ids[i]},
                                {"ref", s.vocabulary.decode(*s.references[i])},
                                {"hyp", s.vocabulary.decode(diags[i].decoded)},
                                {"log_p_ref", diags[i].log_p_reference},
                                {"log_p_hyp", diags[i].log_p_decoded},
                                {"verdict", ctc::to_string(diags[i].verdict)}});
    }
    text << j.dump(2) << "\n";
  } else {
    text << "beam size " << beam << "\n";
    for (const auto& [v, n] : tally) text << ctc::to_string(v) << " " << n << "\n";
    for (std::size_t i = 0; i < diags.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "  log p(ref) %.4f  log p(hyp) %.4f", diags[i].log_p_reference,
                    diags[i].log_p_decoded);
      text << s.ids[i] << "  " << ctc::to_string(diags[i].verdict) << buf << "\n";
    }
  }
  emit(o, out, text.str());
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continuous sign language recognition from landmark streams", "signrec"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("generate", "Write a synthetic corpus");
  gen->add_option("--spec", o.spec, "Corpus spec JSON (defaults when omitted)");
  gen->add_option("--out", o.out, "Output directory")->required();
  gen->add_option("--seed", o.seed, "Override the spec's seed");

  auto* ext = app.add_subcommand("extract", "Compute cue tensors for a manifest and cache them");
  ext->add_option("--manifest", o.manifest, "Manifest (JSON Lines)")->required();
  ext->add_option("--out", o.out, "Cue cache directory")->required();
  ext->add_option("--config", o.config, "Training config (for the skeleton image side)");
  ext->add_option("--vocab", o.vocab, "Vocabulary file (default: vocab.txt beside the manifest)");
  ext->add_option("--workers", o.workers, "Parallel sentences")->check(CLI::PositiveNumber);

  auto* train = app.add_subcommand("train", "Train a model and write its best checkpoint");
  train->add_option("--config", o.config, "Training config JSON")->required();
  train->add_option("--out", o.out, "Run directory (model.ckpt, train.log, config.json)")->required();
  train->add_option("--manifest", o.manifest, "Training manifest (overrides the config)");
  train->add_option("--dev", o.dev, "Dev manifest (overrides the config)");
  train->add_option("--cues", o.cues, "Cue cache directory from `extract` (overrides the config)");
  train->add_option("--vocab", o.vocab, "Vocabulary file");
  train->add_option("--seed", o.seed, "Seed for initialisation, shuffling and dropout");
  train->add_option("--beam", o.beam, "Beam size for dev decoding")->check(CLI::PositiveNumber);
  train->add_option("--workers", o.workers, "Parallel loading and dev decoding")->check(CLI::PositiveNumber);

  auto* ev = app.add_subcommand("evaluate", "Decode a split and report WER");
  ev->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();
  ev->add_option("--manifest", o.manifest, "Split manifest")->required();
  ev->add_option("--cues", o.cues, "Cue cache directory");
  ev->add_option("--vocab", o.vocab, "Vocabulary file");
  ev->add_option("--beam", o.beam, "Beam size")->check(CLI::PositiveNumber);
  ev->add_option("--workers", o.workers, "Parallel decoding")->check(CLI::PositiveNumber);
  ev->add_option("--format", o.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  ev->add_option("--out", o.out, "Write the report here instead of stdout");
  ev->add_option("--seed", o.seed, "Accepted for uniformity; evaluation draws no random numbers");

  auto* dec = app.add_subcommand("decode", "Decode one landmark file (or a score file) to glosses");
  dec->add_option("--checkpoint", o.checkpoint, "Model checkpoint");
  dec->add_option("--landmarks", o.landmarks, "Landmark stream (JSON Lines)");
  dec->add_option("--frames", o.frames, "Rendered frame directory (RSignC)");
  dec->add_option("--logits", o.logits, "Score file instead of a model");
  dec->add_option("--beam", o.beam, "Beam size")->check(CLI::PositiveNumber);
  dec->add_option("--workers", o.workers, "Parallel decoding")->check(CLI::PositiveNumber);
  dec->add_option("--format", o.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  dec->add_option("--out", o.out, "Write here instead of stdout");
  dec->add_option("--seed", o.seed, "Accepted for uniformity; decoding draws no random numbers");

  auto* diag = app.add_subcommand("diagnose", "Tally network vs search faults of beam decoding");
  diag->add_option("--checkpoint", o.checkpoint, "Model checkpoint");
  diag->add_option("--manifest", o.manifest, "Split manifest");
  diag->add_option("--cues", o.cues, "Cue cache directory");
  diag->add_option("--vocab", o.vocab, "Vocabulary file");
  diag->add_option("--logits", o.logits, "Score file with references instead of a model");
  diag->add_option("--beam", o.beam, "Beam size")->check(CLI::PositiveNumber);
  diag->add_option("--workers", o.workers, "Parallel decoding")->check(CLI::PositiveNumber);
  diag->add_option("--format", o.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  diag->add_option("--out", o.out, "Write here instead of stdout");
  diag->add_option("--seed", o.seed, "Accepted for uniformity; diagnosis draws no random numbers");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kUsageError;
  }

  try {
    if (gen->parsed()) return cmd_generate(o, out);
    if (ext->parsed()) return cmd_extract(o, out);
    if (train->parsed()) return cmd_train(o, out);
    if (ev->parsed()) return cmd_evaluate(o, out);
    if (dec->parsed()) return cmd_decode(o, out);
    return cmd_diagnose(o, out);
  } catch (const models::CheckpointMismatchError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

}  // namespace signrec::cli
