#include "clc/constraint_sets.h"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "clc/error.h"

namespace clc {
namespace {

RelationPair unordered(RelationId a, RelationId b) {
  return a < b ? RelationPair{a, b} : RelationPair{b, a};
}

}  // namespace

void ConstraintSets::check(RelationId r) const {
  if (r < 0 || static_cast<std::size_t>(r) >= num_relations_) {
    throw InputError("constraint relation index " + std::to_string(r) +
                     " out of range");
  }
  if (na_index_ && *na_index_ == r) {
    throw InputError("constraints may not involve the NA relation");
  }
}

bool ConstraintSets::usable(RelationId r) const {
  return r >= 0 && static_cast<std::size_t>(r) < num_relations_ &&
         !(na_index_ && *na_index_ == r);
}

void ConstraintSets::add_ts(RelationId a, RelationId b) {
  check(a);
  check(b);
  if (a != b) ts_.insert(unordered(a, b));
}

void ConstraintSets::add_to(RelationId a, RelationId b) {
  check(a);
  check(b);
  if (a != b) to_.insert(unordered(a, b));
}

void ConstraintSets::add_tso(RelationId subj_side, RelationId obj_side) {
  check(subj_side);
  check(obj_side);
  tso_.insert({subj_side, obj_side});
}

void ConstraintSets::add_cs(RelationId r) {
  check(r);
  cs_.insert(r);
}

void ConstraintSets::add_co(RelationId r) {
  check(r);
  co_.insert(r);
}

bool ConstraintSets::in_ts(RelationId a, RelationId b) const {
  if (!usable(a) || !usable(b)) return false;
  return a == b || ts_.count(unordered(a, b)) > 0;
}

bool ConstraintSets::in_to(RelationId a, RelationId b) const {
  if (!usable(a) || !usable(b)) return false;
  return a == b || to_.count(unordered(a, b)) > 0;
}

bool ConstraintSets::in_tso(RelationId subj_side, RelationId obj_side) const {
  return tso_.count({subj_side, obj_side}) > 0;
}

bool ConstraintSets::in_cs(RelationId r) const { return cs_.count(r) > 0; }
bool ConstraintSets::in_co(RelationId r) const { return co_.count(r) > 0; }

bool ConstraintSets::empty(ConstraintKind kind) const {
  std::size_t usable_relations = num_relations_ - (na_index_ ? 1 : 0);
  switch (kind) {
    case ConstraintKind::kTs: return ts_.empty() && usable_relations == 0;
    case ConstraintKind::kTo: return to_.empty() && usable_relations == 0;
    case ConstraintKind::kTso: return tso_.empty();
    case ConstraintKind::kCs: return cs_.empty();
    case ConstraintKind::kCo: return co_.empty();
  }
  return true;
}

void ConstraintSets::merge(const ConstraintSets& other) {
  if (other.num_relations_ != num_relations_ || other.na_index_ != na_index_) {
    throw InputError("cannot merge constraint sets over different vocabularies");
  }
  ts_.insert(other.ts_.begin(), other.ts_.end());
  to_.insert(other.to_.begin(), other.to_.end());
  tso_.insert(other.tso_.begin(), other.tso_.end());
  cs_.insert(other.cs_.begin(), other.cs_.end());
  co_.insert(other.co_.begin(), other.co_.end());
}

bool ConstraintSets::contains(const ConstraintSets& other) const {
  auto covers = [](const auto& big, const auto& small) {
    return std::includes(big.begin(), big.end(), small.begin(), small.end());
  };
  return covers(ts_, other.ts_) && covers(to_, other.to_) &&
         covers(tso_, other.tso_) && covers(cs_, other.cs_) &&
         covers(co_, other.co_);
}

void save_constraints(const ConstraintSets& sets, const RelationVocabulary& vocab,
                      const std::filesystem::path& path) {
  using nlohmann::ordered_json;
  auto pairs = [&](const std::set<RelationPair>& members) {
    ordered_json arr = ordered_json::array();
    for (const auto& [a, b] : members) {
      arr.push_back({vocab.name(a), vocab.name(b)});
    }
    return arr;
  };
  auto singles = [&](const std::set<RelationId>& members) {
    ordered_json arr = ordered_json::array();
    for (RelationId r : members) arr.push_back(vocab.name(r));
    return arr;
  };
  ordered_json doc;
  doc["relations"] = vocab.names();
  doc["na"] = vocab.na_index() ? ordered_json(vocab.name(*vocab.na_index())) : ordered_json();
  doc["ts"] = pairs(sets.ts());
  doc["to"] = pairs(sets.to());
  doc["tso"] = pairs(sets.tso());
  doc["cs"] = singles(sets.cs());
  doc["co"] = singles(sets.co());

  std::ofstream out(path);
  if (!out) throw InputError("cannot write constraint file: " + path.string());
  out << doc.dump(2) << '\n';
}

namespace {

nlohmann::json read_constraint_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open constraint file: " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error&) {
    throw InputError(path.string() + ": malformed constraint file");
  }
  if (!doc.is_object()) {
    throw InputError(path.string() + ": constraint file must be a JSON object");
  }
  return doc;
}

// The optional embedded vocabulary; nullopt when the file carries none.
std::optional<RelationVocabulary> embedded_vocabulary(const nlohmann::json& doc,
                                                      const std::filesystem::path& path) {
  auto it = doc.find("relations");
  if (it == doc.end()) return std::nullopt;
  const std::string where = path.string() + ": \"relations\": ";
  if (!it->is_array() || it->empty()) {
    throw InputError(where + "expected a non-empty array of names");
  }
  std::vector<std::string> names;
  for (const auto& v : *it) {
    if (!v.is_string()) throw InputError(where + "expected relation names");
    names.push_back(v.get<std::string>());
  }
  std::optional<RelationId> na;
  auto na_it = doc.find("na");
  if (na_it != doc.end() && !na_it->is_null()) {
    if (!na_it->is_string()) throw InputError(path.string() + ": \"na\": expected a name");
    auto pos = std::find(names.begin(), names.end(), na_it->get<std::string>());
    if (pos == names.end()) {
      throw InputError(path.string() + ": \"na\": not one of the relations");
    }
    na = static_cast<RelationId>(pos - names.begin());
  }
  try {
    return RelationVocabulary(std::move(names), na);
  } catch (const InputError& e) {
    throw InputError(where + e.what());
  }
}

}  // namespace

RelationVocabulary load_constraint_vocabulary(const std::filesystem::path& path) {
  auto vocab = embedded_vocabulary(read_constraint_document(path), path);
  if (!vocab) {
    throw InputError(path.string() + ": no \"relations\" list; pass a vocabulary file");
  }
  return *vocab;
}

ConstraintSets load_constraints(const std::filesystem::path& path,
                                const RelationVocabulary& vocab) {
  const nlohmann::json doc = read_constraint_document(path);
  if (auto own = embedded_vocabulary(doc, path); own && !(*own == vocab)) {
    throw InputError(path.string() + ": relation list does not match the vocabulary");
  }

  auto where = [&](std::string_view key) {
    return path.string() + ": \"" + std::string(key) + "\": ";
  };
  auto relation = [&](std::string_view key, const nlohmann::json& v) {
    if (!v.is_string()) throw InputError(where(key) + "expected relation name");
    auto id = vocab.find(v.get<std::string>());
    if (!id) {
      throw InputError(where(key) + "unknown relation '" +
                       v.get<std::string>() + "'");
    }
    return *id;
  };
  auto array_of = [&](std::string_view key) -> const nlohmann::json& {
    static const nlohmann::json kEmpty = nlohmann::json::array();
    auto it = doc.find(std::string(key));
    if (it == doc.end()) return kEmpty;
    if (!it->is_array()) throw InputError(where(key) + "expected an array");
    return *it;
  };

  ConstraintSets sets(vocab);
  try {
    for (ConstraintKind kind : kAllKinds) {
      auto key = kind_name(kind);
      for (const auto& item : array_of(key)) {
        if (is_type_kind(kind)) {
          if (!item.is_array() || item.size() != 2) {
            throw InputError(where(key) + "expected [relation, relation] pairs");
          }
          RelationId a = relation(key, item[0]);
          RelationId b = relation(key, item[1]);
          if (kind == ConstraintKind::kTs) sets.add_ts(a, b);
          if (kind == ConstraintKind::kTo) sets.add_to(a, b);
          if (kind == ConstraintKind::kTso) sets.add_tso(a, b);
        } else {
          RelationId r = relation(key, item);
          if (kind == ConstraintKind::kCs) sets.add_cs(r);
          if (kind == ConstraintKind::kCo) sets.add_co(r);
        }
      }
    }
  } catch (const InputError& e) {
    std::string msg = e.what();
    if (msg.rfind(path.string(), 0) == 0) throw;
    throw InputError(path.string() + ": " + msg);
  }
  return sets;
}

}  // namespace clc
