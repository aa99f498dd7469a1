#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace clc {

using RelationId = int;
using EntitySet = std::set<std::string>;

// Dense, ordered relation vocabulary. Index i names relation r_i.
class RelationVocabulary {
 public:
  RelationVocabulary() = default;
  explicit RelationVocabulary(std::vector<std::string> names,
                              std::optional<RelationId> na_index = std::nullopt);

  // Reads one relation name per line; a line reading exactly "NA" marks the
  // no-relation label.
  static RelationVocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return names_.size(); }
  const std::string& name(RelationId id) const;
  std::optional<RelationId> find(std::string_view name) const;
  RelationId index_of(std::string_view name) const;  // throws InputError
  bool valid(RelationId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < names_.size();
  }
  bool is_na(RelationId id) const { return na_index_ && *na_index_ == id; }
  std::optional<RelationId> na_index() const { return na_index_; }
  const std::vector<std::string>& names() const { return names_; }

  // Appends a new relation and returns its index.
  RelationId add(const std::string& name);
  void mark_na(RelationId id);

  bool operator==(const RelationVocabulary& other) const {
    return names_ == other.names_ && na_index_ == other.na_index_;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, RelationId> index_;
  std::optional<RelationId> na_index_;
};

struct Triple {
  std::string subj;
  RelationId rel = 0;
  std::string obj;

  auto operator<=>(const Triple&) const = default;
};

enum class VocabPolicy { kStrict, kGrow };

// Deduplicated set of triples with per-relation and per-entity indices.
// Immutable after construction.
class TripleStore {
 public:
  TripleStore() = default;
  TripleStore(std::vector<Triple> triples, std::size_t num_relations);

  const std::vector<Triple>& triples() const { return triples_; }
  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }
  std::size_t num_relations() const { return subjects_.size(); }

  const EntitySet& subjects_of(RelationId rel) const;
  const EntitySet& objects_of(RelationId rel) const;

  // Indices into triples() for every triple whose subject (object) is entity.
  const std::vector<std::size_t>& by_subject(const std::string& entity) const;
  const std::vector<std::size_t>& by_object(const std::string& entity) const;

 private:
  void check_relation(RelationId rel) const;

  std::vector<Triple> triples_;  // sorted, unique
  std::vector<EntitySet> subjects_;
  std::vector<EntitySet> objects_;
  std::map<std::string, std::vector<std::size_t>> by_subject_;
  std::map<std::string, std::vector<std::size_t>> by_object_;
};

struct LoadedTriples {
  TripleStore store;
  RelationVocabulary vocab;
};

// Parses a `subj<TAB>relation<TAB>obj` file (lines without tabs are split on
// whitespace). Blank lines and lines starting with '#' are skipped. In grow mode
// unknown relations are appended to `vocab` in first-seen order; in strict
// mode they are errors.
LoadedTriples load_triples(const std::filesystem::path& path,
                           VocabPolicy policy,
                           RelationVocabulary vocab = {});

void save_triples(const TripleStore& store, const RelationVocabulary& vocab,
                  const std::filesystem::path& path);

inline const EntitySet& subjects_of(const TripleStore& store, RelationId rel) {
  return store.subjects_of(rel);
}
inline const EntitySet& objects_of(const TripleStore& store, RelationId rel) {
  return store.objects_of(rel);
}

}  // namespace clc
