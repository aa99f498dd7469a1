// clc: command-line front end for the constraint loss library.
//
//   clc mine       --triples kb.tsv --out constraints.json
//   clc encode     --constraints c.json --method coherent|semantic
//   clc loss       --batch batch.jsonl --constraints c.json --method semantic
//   clc gradcheck  --batch batch.jsonl --constraints c.json
//   clc synth      --config cfg.json --out-dir data/
//   clc train      --config cfg.json --out model.bin --history hist.jsonl
//   clc violations --preds preds.jsonl --constraints c.json
//   clc repair     --preds preds.jsonl --constraints c.json --out fixed.jsonl
//
// Exit status: 0 success, 1 input error, 2 internal or numerical error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "clc/constraint_loss.h"
#include "clc/constraint_miner.h"
#include "clc/constraint_repr.h"
#include "clc/error.h"
#include "clc/inference.h"
#include "clc/io.h"
#include "clc/kb_store.h"
#include "clc/training.h"

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

// Writes to `path`, or to stdout when it is empty.
void emit(const std::string& path, const std::function<void(std::ostream&)>& write) {
  if (path.empty()) {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path);
  if (!out) throw clc::InputError("cannot write file: " + path);
  write(out);
}

struct Vocabulary {
  std::string vocab_path;

  // --vocab wins; otherwise the list embedded in the constraint file.
  clc::RelationVocabulary resolve(const std::string& constraints_path) const {
    if (!vocab_path.empty()) return clc::RelationVocabulary::load(vocab_path);
    return clc::load_constraint_vocabulary(constraints_path);
  }
};

const std::map<std::string, clc::EncodingMethod> kMethods = {
    {"coherent", clc::EncodingMethod::kCoherent},
    {"semantic", clc::EncodingMethod::kSemantic}};

const std::map<std::string, clc::PairMode> kPairModes = {
    {"unordered", clc::PairMode::kUnordered},
    {"ordered", clc::PairMode::kOrdered},
    {"ordered-self", clc::PairMode::kOrderedWithSelf}};

// ---------------------------------------------------------------------------

void add_mine(CLI::App& app, Globals&) {
  auto* cmd = app.add_subcommand("mine", "Mine type and cardinality constraints from a triple file");
  struct Opts {
    std::string triples, out, vocab, vocab_out;
    clc::MiningOptions mining;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--triples", o->triples, "Tab-separated subj/rel/obj file")->required();
  cmd->add_option("--out", o->out, "Constraint file to write")->required();
  cmd->add_option("--vocab", o->vocab,
                  "Relation vocabulary; unknown relations are errors when given");
  cmd->add_option("--vocab-out", o->vocab_out, "Write the relation vocabulary here");
  cmd->add_option("--min-overlap", o->mining.min_overlap, "Shared entities per type rule")
      ->capture_default_str();
  cmd->add_option("--min-count", o->mining.min_count,
                  "Multi-valued entities per cardinality rule")
      ->capture_default_str();
  cmd->callback([o] {
    auto loaded = o->vocab.empty()
                      ? clc::load_triples(o->triples, clc::VocabPolicy::kGrow)
                      : clc::load_triples(o->triples, clc::VocabPolicy::kStrict,
                                          clc::RelationVocabulary::load(o->vocab));
    auto sets = clc::mine_constraints(loaded.store, loaded.vocab, o->mining);
    clc::save_constraints(sets, loaded.vocab, o->out);
    if (!o->vocab_out.empty()) loaded.vocab.save(o->vocab_out);
  });
}

void add_encode(CLI::App& app, Globals&) {
  auto* cmd = app.add_subcommand("encode", "Print the binary encoding of a constraint file");
  struct Opts {
    std::string constraints, out, method = "semantic";
    Vocabulary vocab;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--constraints", o->constraints)->required();
  cmd->add_option("--method", o->method)->check(CLI::IsMember(kMethods))->capture_default_str();
  cmd->add_option("--vocab", o->vocab.vocab_path);
  cmd->add_option("--out", o->out, "Output file (default stdout)");
  cmd->callback([o] {
    auto vocab = o->vocab.resolve(o->constraints);
    auto sets = clc::load_constraints(o->constraints, vocab);
    emit(o->out, [&](std::ostream& out) {
      if (kMethods.at(o->method) == clc::EncodingMethod::kCoherent) {
        clc::dump(clc::build_coherent(sets), out);
      } else {
        clc::dump(clc::build_semantic(sets), out);
      }
    });
  });
}

struct LossFlags {
  std::string batch, constraints, out, method = "semantic", pairs = "unordered";
  Vocabulary vocab;
  double eps = clc::kDefaultEps;
  bool penalize_empty = false;
  bool literal_co = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--batch", batch, "JSONL batch with gold triples and probabilities")
        ->required();
    cmd->add_option("--constraints", constraints)->required();
    cmd->add_option("--method", method)->check(CLI::IsMember(kMethods))->capture_default_str();
    cmd->add_option("--vocab", vocab.vocab_path);
    cmd->add_option("--pairs", pairs, "Which instance pairs are summed")
        ->check(CLI::IsMember(kPairModes))
        ->capture_default_str();
    cmd->add_option("--eps", eps, "Floor inside the logarithm")->capture_default_str();
    cmd->add_flag("--penalize-empty", penalize_empty,
                  "Charge -log(eps) for active pairs whose set is empty");
    cmd->add_flag("--literal-co", literal_co, "Use the inverted co indicator");
    cmd->add_option("--out", out, "Output file (default stdout)");
  }

  clc::LossOptions options(int threads) const {
    clc::LossOptions opts;
    opts.eps = eps;
    opts.pairs = kPairModes.at(pairs);
    opts.penalize_empty_sets = penalize_empty;
    opts.indicator.literal_co = literal_co;
    opts.threads = threads;
    return opts;
  }
};

void add_loss(CLI::App& app, Globals& g) {
  auto* cmd = app.add_subcommand("loss", "Compute the batch constraint loss");
  auto o = std::make_shared<LossFlags>();
  auto grads = std::make_shared<bool>(false);
  auto terms = std::make_shared<bool>(false);
  o->attach(cmd);
  cmd->add_flag("--grads", *grads, "Include d loss / d probs per instance");
  cmd->add_flag("--pair-terms", *terms, "Include every non-zero local term");
  cmd->callback([o, grads, terms, &g] {
    auto vocab = o->vocab.resolve(o->constraints);
    auto sets = clc::load_constraints(o->constraints, vocab);
    auto batch = clc::load_batch(o->batch, vocab);
    auto encoding = clc::ConstraintEncoding::make(kMethods.at(o->method), sets);
    auto opts = o->options(g.threads);
    opts.want_grads = *grads;
    opts.want_pair_terms = *terms;
    auto report = clc::batch_constraint_loss(batch, encoding, vocab, opts);
    emit(o->out, [&](std::ostream& out) {
      clc::write_loss_report(report, batch, *grads, out);
    });
  });
}

void add_gradcheck(CLI::App& app, Globals& g) {
  auto* cmd = app.add_subcommand("gradcheck",
                                 "Compare analytic gradients with central differences");
  auto o = std::make_shared<LossFlags>();
  auto h = std::make_shared<double>(1e-5);
  o->attach(cmd);
  cmd->add_option("--step", *h, "Finite-difference step")->capture_default_str();
  cmd->callback([o, h, &g] {
    auto vocab = o->vocab.resolve(o->constraints);
    auto sets = clc::load_constraints(o->constraints, vocab);
    auto batch = clc::load_batch(o->batch, vocab);
    auto encoding = clc::ConstraintEncoding::make(kMethods.at(o->method), sets);
    double err = clc::grad_check(batch, encoding, vocab, o->options(g.threads), *h);
    emit(o->out, [&](std::ostream& out) {
      nlohmann::ordered_json doc;
      doc["method"] = o->method;
      doc["instances"] = batch.instances.size();
      doc["step"] = *h;
      doc["max_rel_error"] = err;
      out << doc.dump() << '\n';
    });
  });
}

// Config file plus the global seed, which overrides both data and training
// seeds when given.
clc::RunConfig run_config(const std::string& path, const Globals& g) {
  clc::RunConfig cfg = path.empty() ? clc::RunConfig{} : clc::load_run_config(path);
  if (g.seed) {
    cfg.synthetic.seed = *g.seed;
    cfg.train.seed = *g.seed;
  }
  cfg.train.threads = g.threads;
  return cfg;
}

void add_synth(CLI::App& app, Globals& g) {
  auto* cmd = app.add_subcommand("synth", "Generate a synthetic benchmark");
  struct Opts {
    std::string config, out_dir;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--config", o->config, "Run config; only the synthetic section is used");
  cmd->add_option("--out-dir", o->out_dir,
                  "Writes kb.tsv, vocab.txt, instances.jsonl, planted.json")
      ->required();
  cmd->callback([o, &g] {
    auto cfg = run_config(o->config, g);
    auto data = clc::generate_synthetic(cfg.synthetic);
    const fs::path dir = o->out_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw clc::InputError("cannot create directory: " + dir.string());
    clc::save_triples(data.store, data.vocab, dir / "kb.tsv");
    data.vocab.save(dir / "vocab.txt");
    clc::save_instances(data.instances, data.vocab, dir / "instances.jsonl");
    clc::save_constraints(data.planted, data.vocab, dir / "planted.json");
  });
}

void add_train(CLI::App& app, Globals& g) {
  auto* cmd = app.add_subcommand("train", "Train the softmax classifier with the constraint loss");
  struct Opts {
    std::string config, out, history, instances, constraints, vocab, method;
    std::string preds_out, constraints_out, vocab_out, summary;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--config", o->config, "Run config (synthetic, train, schedule, mining)");
  cmd->add_option("--out", o->out, "Model file to write")->required();
  cmd->add_option("--history", o->history, "Per-epoch JSONL history");
  cmd->add_option("--instances", o->instances,
                  "Train on this instance file instead of generating data");
  cmd->add_option("--constraints", o->constraints,
                  "Constraint file; mined from the generated KB when omitted");
  cmd->add_option("--vocab", o->vocab);
  cmd->add_option("--method", o->method, "Overrides train.encoding")
      ->check(CLI::IsMember(kMethods));
  cmd->add_option("--preds-out", o->preds_out, "Predictions on the held-out split");
  cmd->add_option("--constraints-out", o->constraints_out, "The constraints used");
  cmd->add_option("--vocab-out", o->vocab_out);
  cmd->add_option("--summary", o->summary, "Accuracy summary (default stdout)");
  cmd->callback([o, &g] {
    auto cfg = run_config(o->config, g);
    if (!o->method.empty()) cfg.train.encoding = kMethods.at(o->method);

    clc::RelationVocabulary vocab;
    std::vector<clc::LabeledInstance> instances;
    clc::ConstraintSets sets;
    if (o->instances.empty()) {
      auto data = clc::generate_synthetic(cfg.synthetic);
      vocab = data.vocab;
      instances = std::move(data.instances);
      sets = o->constraints.empty() ? clc::mine_constraints(data.store, vocab, cfg.mining)
                                    : clc::load_constraints(o->constraints, vocab);
    } else {
      if (o->constraints.empty()) {
        throw clc::InputError("--instances needs --constraints");
      }
      vocab = Vocabulary{o->vocab}.resolve(o->constraints);
      sets = clc::load_constraints(o->constraints, vocab);
      instances = clc::load_instances(o->instances, vocab);
    }

    std::vector<clc::LabeledInstance> train_split, test_split;
    for (auto& inst : instances) (inst.test ? test_split : train_split).push_back(inst);
    if (train_split.empty()) throw clc::InputError("no training instances");

    auto result = clc::train(train_split, sets, vocab, cfg.train, test_split);
    result.model.save(o->out);
    if (!o->history.empty()) {
      emit(o->history, [&](std::ostream& out) { clc::write_history(result.history, out); });
    }
    if (!o->preds_out.empty()) {
      clc::save_predictions(clc::predict_all(result.model, test_split), vocab, o->preds_out);
    }
    if (!o->constraints_out.empty()) clc::save_constraints(sets, vocab, o->constraints_out);
    if (!o->vocab_out.empty()) vocab.save(o->vocab_out);

    emit(o->summary, [&](std::ostream& out) {
      nlohmann::ordered_json doc;
      doc["train_instances"] = train_split.size();
      doc["test_instances"] = test_split.size();
      doc["train_accuracy"] = clc::accuracy(result.model, train_split);
      doc["test_accuracy"] =
          test_split.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(clc::accuracy(result.model, test_split));
      doc["final_violations"] = result.history.back().violations;
      out << doc.dump() << '\n';
    });
  });
}

struct AuditFlags {
  std::string preds, constraints, out;
  Vocabulary vocab;
  bool literal_co = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--preds", preds, "JSONL predictions")->required();
    cmd->add_option("--constraints", constraints)->required();
    cmd->add_option("--vocab", vocab.vocab_path);
    cmd->add_flag("--literal-co", literal_co, "Use the inverted co indicator");
  }
};

void add_violations(CLI::App& app, Globals&) {
  auto* cmd = app.add_subcommand("violations", "Count contradictory prediction pairs");
  auto o = std::make_shared<AuditFlags>();
  o->attach(cmd);
  cmd->add_option("--out", o->out, "Report file (default stdout)");
  cmd->callback([o] {
    auto vocab = o->vocab.resolve(o->constraints);
    auto sets = clc::load_constraints(o->constraints, vocab);
    auto preds = clc::load_predictions(o->preds, vocab);
    clc::IndicatorOptions ind;
    ind.literal_co = o->literal_co;
    auto report = clc::count_violations(preds, sets, vocab, ind);
    emit(o->out, [&](std::ostream& out) { clc::write_violation_report(report, out); });
  });
}

void add_repair(CLI::App& app, Globals& g) {
  auto* cmd = app.add_subcommand("repair", "Reassign predictions to remove violations");
  auto o = std::make_shared<AuditFlags>();
  auto group_limit = std::make_shared<std::size_t>(12);
  auto summary = std::make_shared<std::string>();
  o->attach(cmd);
  cmd->add_option("--out", o->out, "Repaired predictions (default stdout)");
  cmd->add_option("--group-limit", *group_limit, "Largest group solved exactly")
      ->capture_default_str();
  cmd->add_option("--summary", *summary, "Write a repair summary here");
  cmd->callback([o, group_limit, summary, &g] {
    auto vocab = o->vocab.resolve(o->constraints);
    auto sets = clc::load_constraints(o->constraints, vocab);
    auto preds = clc::load_predictions(o->preds, vocab);
    clc::RepairOptions opts;
    opts.group_limit = *group_limit;
    opts.indicator.literal_co = o->literal_co;
    opts.threads = g.threads;
    auto result = clc::repair_predictions(preds, sets, vocab, opts);
    emit(o->out, [&](std::ostream& out) {
      clc::write_predictions(result.predictions, vocab, out);
    });
    if (!summary->empty()) {
      emit(*summary, [&](std::ostream& out) {
        std::size_t exact = 0;
        for (const auto& grp : result.groups) exact += grp.exact ? 1 : 0;
        nlohmann::ordered_json doc;
        doc["groups"] = result.groups.size();
        doc["exact_groups"] = exact;
        doc["infeasible_groups"] = result.infeasible_groups();
        doc["changed"] = result.changed();
        out << doc.dump() << '\n';
      });
    }
  });
}

int run(int argc, char** argv) {
  CLI::App app{"Relation constraint mining, constraint losses and prediction repair", "clc"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random draw");
  app.add_option("--threads", g.threads, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  add_mine(app, g);
  add_encode(app, g);
  add_loss(app, g);
  add_gradcheck(app, g);
  add_synth(app, g);
  add_train(app, g);
  add_violations(app, g);
  add_repair(app, g);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "clc: " << e.what() << '\n';
    return 1;
  } catch (const clc::InputError& e) {
    std::cerr << "clc: " << e.what() << '\n';
    return 1;
  } catch (const clc::NumericalError& e) {
    std::cerr << "clc: numerical error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "clc: internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
