#include "signrec/ctc/vocabulary.hpp"

#include <fstream>

#include "signrec/errors.hpp"

namespace signrec::ctc {

GlossVocabulary::GlossVocabulary(std::vector<std::string> glosses) : glosses_(std::move(glosses)) {
  for (std::size_t i = 0; i < glosses_.size(); ++i) {
    const auto& g = glosses_[i];
    if (g.empty()) throw InputError("empty gloss at id " + std::to_string(i));
    if (!index_.emplace(g, static_cast<int>(i)).second) {
      throw InputError("duplicate gloss \"" + g + "\" in vocabulary");
    }
  }
}

GlossVocabulary GlossVocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary file " + path.string());
  std::vector<std::string> glosses;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    glosses.push_back(line);
  }
  return GlossVocabulary(std::move(glosses));
}

void GlossVocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary file " + path.string());
  for (const auto& g : glosses_) out << g << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

int GlossVocabulary::id(const std::string& gloss) const {
  auto it = index_.find(gloss);
  if (it == index_.end()) throw UnknownGlossError(gloss);
  return it->second;
}

const std::string& GlossVocabulary::gloss(int id) const {
  if (id < 0 || id >= size()) {
    throw InputError("id " + std::to_string(id) + " is not a gloss (vocabulary size " +
                     std::to_string(size()) + ")");
  }
  return glosses_[static_cast<std::size_t>(id)];
}

Labeling GlossVocabulary::encode(const std::vector<std::string>& glosses) const {
  Labeling out;
  out.reserve(glosses.size());
  for (const auto& g : glosses) out.push_back(id(g));
  return out;
}

std::vector<std::string> GlossVocabulary::decode(const Labeling& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(gloss(i));
  return out;
}

}  // namespace signrec::ctc
