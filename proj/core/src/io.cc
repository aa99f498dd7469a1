#include "clc/io.h"

#include <fstream>
#include <functional>
#include <set>
#include <ostream>
#include <sstream>
#include <type_traits>

#include <nlohmann/json.hpp>

#include "clc/error.h"

namespace clc {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Calls fn(record, where) for every non-blank line of a JSONL file.
void for_each_record(const std::filesystem::path& path,
                     const std::function<void(const json&, const std::string&)>& fn) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path.string());
  std::string line;
  int line_no = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error&) {
      throw InputError(where + "malformed JSON record");
    }
    if (!record.is_object()) throw InputError(where + "record must be a JSON object");
    try {
      fn(record, where);
    } catch (const json::exception& e) {
      throw InputError(where + e.what());
    }
    any = true;
  }
  if (!any) throw InputError("file has no records: " + path.string());
}

const json& field(const json& record, const char* key, const std::string& where) {
  auto it = record.find(key);
  if (it == record.end()) {
    throw InputError(where + "missing field \"" + std::string(key) + "\"");
  }
  return *it;
}

std::string string_field(const json& record, const char* key, const std::string& where) {
  const json& v = field(record, key, where);
  if (!v.is_string() || v.get<std::string>().empty()) {
    throw InputError(where + "field \"" + std::string(key) +
                     "\" must be a non-empty string");
  }
  return v.get<std::string>();
}

std::vector<double> number_array(const json& record, const char* key,
                                 const std::string& where) {
  const json& v = field(record, key, where);
  if (!v.is_array()) {
    throw InputError(where + "field \"" + std::string(key) + "\" must be an array");
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) {
      throw InputError(where + "field \"" + std::string(key) +
                       "\" must hold numbers");
    }
    out.push_back(x.get<double>());
  }
  return out;
}

RelationId relation_field(const json& record, const char* key,
                          const RelationVocabulary& vocab, const std::string& where) {
  std::string name = string_field(record, key, where);
  auto id = vocab.find(name);
  if (!id) throw InputError(where + "unknown relation '" + name + "'");
  return *id;
}

void check_probs(const std::vector<double>& probs, const RelationVocabulary& vocab,
                 const std::string& where) {
  if (probs.size() != vocab.size()) {
    throw InputError(where + "expected " + std::to_string(vocab.size()) +
                     " probabilities, got " + std::to_string(probs.size()));
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write file: " + path.string());
  return out;
}

}  // namespace

Batch load_batch(const std::filesystem::path& path, const RelationVocabulary& vocab) {
  Batch batch;
  for_each_record(path, [&](const json& rec, const std::string& where) {
    Instance inst;
    inst.id = string_field(rec, "id", where);
    inst.gold.subj = string_field(rec, "subj", where);
    inst.gold.rel = relation_field(rec, "rel", vocab, where);
    inst.gold.obj = string_field(rec, "obj", where);
    inst.probs = number_array(rec, "probs", where);
    check_probs(inst.probs, vocab, where);
    try {
      validate_probabilities(inst.probs);
    } catch (const InputError& e) {
      throw InputError(where + e.what());
    }
    batch.instances.push_back(std::move(inst));
  });
  return batch;
}

void save_batch(const Batch& batch, const RelationVocabulary& vocab,
                const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& inst : batch.instances) {
    ordered_json rec;
    rec["id"] = inst.id;
    rec["subj"] = inst.gold.subj;
    rec["rel"] = vocab.name(inst.gold.rel);
    rec["obj"] = inst.gold.obj;
    rec["probs"] = inst.probs;
    out << rec.dump() << '\n';
  }
}

PredictionSet load_predictions(const std::filesystem::path& path,
                               const RelationVocabulary& vocab) {
  PredictionSet preds;
  for_each_record(path, [&](const json& rec, const std::string& where) {
    Prediction p;
    p.id = string_field(rec, "id", where);
    p.subj = string_field(rec, "subj", where);
    p.obj = string_field(rec, "obj", where);
    p.probs = number_array(rec, "probs", where);
    check_probs(p.probs, vocab, where);
    try {
      validate_probabilities(p.probs);
    } catch (const InputError& e) {
      throw InputError(where + e.what());
    }
    if (rec.contains("rel")) p.gold_rel = relation_field(rec, "rel", vocab, where);
    p.predicted = rec.contains("predicted")
                      ? relation_field(rec, "predicted", vocab, where)
                      : argmax(p.probs);
    preds.items.push_back(std::move(p));
  });
  return preds;
}

void write_predictions(const PredictionSet& preds, const RelationVocabulary& vocab,
                       std::ostream& out) {
  for (const auto& p : preds.items) {
    ordered_json rec;
    rec["id"] = p.id;
    rec["subj"] = p.subj;
    rec["obj"] = p.obj;
    if (p.gold_rel) rec["rel"] = vocab.name(*p.gold_rel);
    rec["predicted"] = vocab.name(p.predicted);
    rec["probs"] = p.probs;
    out << rec.dump() << '\n';
  }
}

void save_predictions(const PredictionSet& preds, const RelationVocabulary& vocab,
                      const std::filesystem::path& path) {
  auto out = open_out(path);
  write_predictions(preds, vocab, out);
}

std::vector<LabeledInstance> load_instances(const std::filesystem::path& path,
                                            const RelationVocabulary& vocab) {
  std::vector<LabeledInstance> out;
  for_each_record(path, [&](const json& rec, const std::string& where) {
    LabeledInstance inst;
    inst.id = string_field(rec, "id", where);
    inst.gold.subj = string_field(rec, "subj", where);
    inst.gold.rel = relation_field(rec, "rel", vocab, where);
    inst.gold.obj = string_field(rec, "obj", where);
    inst.true_rel = rec.contains("true_rel")
                        ? relation_field(rec, "true_rel", vocab, where)
                        : inst.gold.rel;
    inst.test = rec.value("test", false);
    inst.features = number_array(rec, "features", where);
    out.push_back(std::move(inst));
  });
  return out;
}

void save_instances(std::span<const LabeledInstance> instances,
                    const RelationVocabulary& vocab,
                    const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& inst : instances) {
    ordered_json rec;
    rec["id"] = inst.id;
    rec["subj"] = inst.gold.subj;
    rec["rel"] = vocab.name(inst.gold.rel);
    rec["obj"] = inst.gold.obj;
    rec["true_rel"] = vocab.name(inst.true_rel);
    rec["test"] = inst.test;
    rec["features"] = inst.features;
    out << rec.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------

namespace {

class Section {
 public:
  Section(const json& doc, std::string name, std::string origin)
      : name_(std::move(name)), origin_(std::move(origin)) {
    auto it = doc.find(name_);
    if (it == doc.end()) return;
    if (!it->is_object()) fail("", "must be an object");
    obj_ = &*it;
  }

  template <typename T>
  void read(const char* key, T& target) {
    if (!obj_) return;
    auto it = obj_->find(key);
    if (it == obj_->end()) return;
    seen_.insert(key);
    try {
      if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!it->is_number_integer()) fail(key, "must be an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) fail(key, "must be a number");
      }
      target = it->get<T>();
    } catch (const json::exception&) {
      fail(key, "has the wrong type");
    }
  }

  bool has(const char* key) const { return obj_ && obj_->contains(key); }

  void reject_unknown() const {
    if (!obj_) return;
    for (const auto& [key, _] : obj_->items()) {
      if (!seen_.count(key)) fail(key, "is not a recognized field");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    std::string path = name_ + (key.empty() ? "" : "." + key);
    throw InputError(origin_ + ": \"" + path + "\" " + what);
  }

 private:
  std::string name_;
  std::string origin_;
  const json* obj_ = nullptr;
  std::set<std::string> seen_;
};

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error&) {
    throw InputError(origin + ": malformed JSON");
  }
  if (!doc.is_object()) throw InputError(origin + ": config must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "synthetic" && key != "train" && key != "schedule" && key != "mining") {
      throw InputError(origin + ": unknown section \"" + key + "\"");
    }
  }

  RunConfig cfg;
  Section syn(doc, "synthetic", origin);
  syn.read("n_relations", cfg.synthetic.n_relations);
  syn.read("n_entities_per_type", cfg.synthetic.n_entities_per_type);
  syn.read("n_type_classes", cfg.synthetic.n_type_classes);
  syn.read("n_instances", cfg.synthetic.n_instances);
  syn.read("label_noise", cfg.synthetic.label_noise);
  syn.read("feature_noise", cfg.synthetic.feature_noise);
  syn.read("type_signal", cfg.synthetic.type_signal);
  syn.read("test_fraction", cfg.synthetic.test_fraction);
  syn.read("seed", cfg.synthetic.seed);
  std::string noise_mode = "uniform";
  syn.read("label_noise_mode", noise_mode);
  syn.reject_unknown();
  if (noise_mode == "uniform") {
    cfg.synthetic.label_noise_mode = LabelNoiseMode::kUniform;
  } else if (noise_mode == "cyclic") {
    cfg.synthetic.label_noise_mode = LabelNoiseMode::kCyclic;
  } else {
    syn.fail("label_noise_mode", "must be \"uniform\" or \"cyclic\"");
  }

  Section tr(doc, "train", origin);
  tr.read("epochs", cfg.train.epochs);
  tr.read("batch_size", cfg.train.batch_size);
  tr.read("learning_rate", cfg.train.learning_rate);
  tr.read("seed", cfg.train.seed);
  tr.read("eps", cfg.train.eps);
  tr.read("init_scale", cfg.train.init_scale);
  std::string encoding = "semantic";
  std::string optimizer = "sgd";
  tr.read("encoding", encoding);
  tr.read("optimizer", optimizer);
  tr.reject_unknown();
  if (encoding == "semantic") {
    cfg.train.encoding = EncodingMethod::kSemantic;
  } else if (encoding == "coherent") {
    cfg.train.encoding = EncodingMethod::kCoherent;
  } else {
    tr.fail("encoding", "must be \"coherent\" or \"semantic\"");
  }
  if (optimizer == "sgd") {
    cfg.train.optimizer = OptimizerKind::kSgd;
  } else if (optimizer == "adam") {
    cfg.train.optimizer = OptimizerKind::kAdam;
  } else {
    tr.fail("optimizer", "must be \"sgd\" or \"adam\"");
  }

  Section sc(doc, "schedule", origin);
  std::string mode = "constant";
  sc.read("mode", mode);
  sc.read("lambda", cfg.train.schedule.lambda_const);
  sc.read("alpha", cfg.train.schedule.alpha);
  cfg.train.schedule.total_epochs = cfg.train.epochs;
  sc.read("total_epochs", cfg.train.schedule.total_epochs);
  sc.reject_unknown();
  if (mode == "constant") {
    cfg.train.schedule.mode = ScheduleMode::kConstant;
  } else if (mode == "triangular") {
    cfg.train.schedule.mode = ScheduleMode::kTriangular;
  } else {
    sc.fail("mode", "must be \"constant\" or \"triangular\"");
  }
  if (cfg.train.schedule.lambda_const < 0.0 || cfg.train.schedule.alpha < 0.0) {
    sc.fail("", "weights must be >= 0");
  }

  Section mi(doc, "mining", origin);
  mi.read("min_overlap", cfg.mining.min_overlap);
  mi.read("min_count", cfg.mining.min_count);
  mi.reject_unknown();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), path.string());
}

void write_loss_report(const LossReport& report, const Batch& batch,
                       bool with_grads, std::ostream& out) {
  ordered_json doc;
  doc["total"] = report.total;
  ordered_json per_set;
  for (ConstraintKind kind : kAllKinds) {
    per_set[std::string(kind_name(kind))] = report.per_set[static_cast<std::size_t>(kind)];
  }
  doc["per_set"] = per_set;
  doc["active_pairs"] = report.active_pairs;
  if (!report.per_pair.empty()) {
    ordered_json pairs = ordered_json::array();
    for (const auto& t : report.per_pair) {
      pairs.push_back({{"m", batch.instances[t.m].id},
                       {"n", batch.instances[t.n].id},
                       {"set", std::string(kind_name(t.kind))},
                       {"value", t.value}});
    }
    doc["per_pair"] = pairs;
  }
  if (with_grads) {
    ordered_json grads = ordered_json::object();
    for (std::size_t i = 0; i < report.grads.size(); ++i) {
      grads[batch.instances[i].id] = report.grads[i];
    }
    doc["grads"] = grads;
  }
  out << doc.dump(2) << '\n';
}

void write_violation_report(const ViolationReport& report, std::ostream& out) {
  ordered_json doc;
  for (ConstraintKind kind : kAllKinds) {
    doc[std::string(kind_name(kind))] = report.count(kind);
  }
  doc["total"] = report.total;
  out << doc.dump() << '\n';
}

void write_history(std::span<const EpochRecord> history, std::ostream& out) {
  for (const auto& rec : history) {
    ordered_json line;
    line["epoch"] = rec.epoch;
    line["L_O"] = rec.loss_o;
    line["L_C"] = rec.loss_c;
    line["lambda"] = rec.lambda;
    line["violations"] = rec.violations;
    out << line.dump() << '\n';
  }
}

}  // namespace clc
