#include "clc/kb_store.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "clc/error.h"

namespace clc {
namespace {

const std::vector<std::size_t> kNoTriples;

// Tab-separated when the line has a tab, otherwise whitespace-separated.
std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  if (line.find('\t') == std::string::npos) {
    std::istringstream words(line);
    for (std::string w; words >> w;) fields.push_back(w);
    return fields;
  }
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

void chomp(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

RelationVocabulary::RelationVocabulary(std::vector<std::string> names,
                                       std::optional<RelationId> na_index) {
  for (auto& name : names) add(name);
  if (na_index) {
    if (!valid(*na_index)) {
      throw InputError("NA index " + std::to_string(*na_index) +
                       " out of range for vocabulary of size " +
                       std::to_string(size()));
    }
    na_index_ = na_index;
  }
}

void RelationVocabulary::mark_na(RelationId id) {
  if (!valid(id)) {
    throw InputError("NA index " + std::to_string(id) + " out of range");
  }
  na_index_ = id;
}

RelationVocabulary RelationVocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open vocabulary file: " + path.string());
  RelationVocabulary vocab;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (line.empty()) {
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": empty relation name");
    }
    RelationId id = vocab.add(line);
    if (line == "NA") vocab.mark_na(id);
  }
  if (vocab.size() == 0) {
    throw InputError("vocabulary file is empty: " + path.string());
  }
  return vocab;
}

void RelationVocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write vocabulary file: " + path.string());
  for (const auto& name : names_) out << name << '\n';
}

const std::string& RelationVocabulary::name(RelationId id) const {
  if (!valid(id)) {
    throw InputError("relation index " + std::to_string(id) + " out of range");
  }
  return names_[static_cast<std::size_t>(id)];
}

std::optional<RelationId> RelationVocabulary::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

RelationId RelationVocabulary::index_of(std::string_view name) const {
  auto id = find(name);
  if (!id) throw InputError("unknown relation: " + std::string(name));
  return *id;
}

RelationId RelationVocabulary::add(const std::string& name) {
  if (name.empty()) throw InputError("relation names must be non-empty");
  if (index_.count(name)) throw InputError("duplicate relation name: " + name);
  auto id = static_cast<RelationId>(names_.size());
  names_.push_back(name);
  index_.emplace(name, id);
  return id;
}

TripleStore::TripleStore(std::vector<Triple> triples, std::size_t num_relations)
    : triples_(std::move(triples)),
      subjects_(num_relations),
      objects_(num_relations) {
  std::sort(triples_.begin(), triples_.end());
  triples_.erase(std::unique(triples_.begin(), triples_.end()), triples_.end());
  for (std::size_t i = 0; i < triples_.size(); ++i) {
    const Triple& t = triples_[i];
    if (t.rel < 0 || static_cast<std::size_t>(t.rel) >= num_relations) {
      throw InputError("triple relation index " + std::to_string(t.rel) +
                       " out of range");
    }
    if (t.subj.empty() || t.obj.empty()) {
      throw InputError("triple entities must be non-empty");
    }
    subjects_[t.rel].insert(t.subj);
    objects_[t.rel].insert(t.obj);
    by_subject_[t.subj].push_back(i);
    by_object_[t.obj].push_back(i);
  }
}

void TripleStore::check_relation(RelationId rel) const {
  if (rel < 0 || static_cast<std::size_t>(rel) >= subjects_.size()) {
    throw InputError("relation index " + std::to_string(rel) + " out of range");
  }
}

const EntitySet& TripleStore::subjects_of(RelationId rel) const {
  check_relation(rel);
  return subjects_[rel];
}

const EntitySet& TripleStore::objects_of(RelationId rel) const {
  check_relation(rel);
  return objects_[rel];
}

const std::vector<std::size_t>& TripleStore::by_subject(
    const std::string& entity) const {
  auto it = by_subject_.find(entity);
  return it == by_subject_.end() ? kNoTriples : it->second;
}

const std::vector<std::size_t>& TripleStore::by_object(
    const std::string& entity) const {
  auto it = by_object_.find(entity);
  return it == by_object_.end() ? kNoTriples : it->second;
}

LoadedTriples load_triples(const std::filesystem::path& path, VocabPolicy policy,
                           RelationVocabulary vocab) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open triple file: " + path.string());

  std::vector<Triple> triples;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_fields(line);
    auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (fields.size() != 3) {
      throw InputError(where + "expected 3 fields, got " +
                       std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw InputError(where + "empty field");
    }
    auto rel = vocab.find(fields[1]);
    if (!rel) {
      if (policy == VocabPolicy::kStrict) {
        throw InputError(where + "unknown relation '" + fields[1] + "'");
      }
      rel = vocab.add(fields[1]);
      if (fields[1] == "NA") vocab.mark_na(*rel);
    }
    triples.push_back({fields[0], *rel, fields[2]});
  }
  if (triples.empty()) {
    throw InputError("triple file has no records: " + path.string());
  }
  TripleStore store(std::move(triples), vocab.size());
  return {std::move(store), std::move(vocab)};
}

void save_triples(const TripleStore& store, const RelationVocabulary& vocab,
                  const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write triple file: " + path.string());
  for (const auto& t : store.triples()) {
    out << t.subj << '\t' << vocab.name(t.rel) << '\t' << t.obj << '\n';
  }
}

}  // namespace clc
