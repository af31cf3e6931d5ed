#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace signrec::ctc {

// A blank-free sequence of gloss ids.
using Labeling = std::vector<int>;

// Bidirectional gloss <-> id map. Ids are dense in [0, V); the CTC blank is
// the extra class V and has no string form.
class GlossVocabulary {
 public:
  GlossVocabulary() = default;
  explicit GlossVocabulary(std::vector<std::string> glosses);

  // One gloss per line; line number (from 0) is the id.
  static GlossVocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  int size() const { return static_cast<int>(glosses_.size()); }
  int blank() const { return size(); }
  int classes() const { return size() + 1; }

  bool contains(const std::string& gloss) const { return index_.contains(gloss); }
  int id(const std::string& gloss) const;  // throws UnknownGlossError
  const std::string& gloss(int id) const;  // throws InputError for blank / out of range

  Labeling encode(const std::vector<std::string>& glosses) const;
  std::vector<std::string> decode(const Labeling& ids) const;

  const std::vector<std::string>& glosses() const { return glosses_; }
  bool operator==(const GlossVocabulary& other) const { return glosses_ == other.glosses_; }

 private:
  std::vector<std::string> glosses_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace signrec::ctc
