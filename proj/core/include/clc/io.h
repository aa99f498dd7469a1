#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "clc/constraint_loss.h"
#include "clc/constraint_miner.h"
#include "clc/inference.h"
#include "clc/kb_store.h"
#include "clc/training.h"

namespace clc {

// Line-delimited JSON records `{"id", "subj", "rel", "obj", "probs"}`; rel is
// a relation name from vocab.
Batch load_batch(const std::filesystem::path& path, const RelationVocabulary& vocab);
void save_batch(const Batch& batch, const RelationVocabulary& vocab,
                const std::filesystem::path& path);

// Line-delimited JSON records `{"id", "subj", "obj", "probs"}` with optional
// "rel" (gold relation name) and "predicted" (relation name; argmax of probs
// when absent).
PredictionSet load_predictions(const std::filesystem::path& path,
                               const RelationVocabulary& vocab);
void write_predictions(const PredictionSet& preds, const RelationVocabulary& vocab,
                       std::ostream& out);
void save_predictions(const PredictionSet& preds, const RelationVocabulary& vocab,
                      const std::filesystem::path& path);

// Line-delimited JSON records `{"id", "subj", "rel", "obj", "true_rel",
// "test", "features"}`.
std::vector<LabeledInstance> load_instances(const std::filesystem::path& path,
                                            const RelationVocabulary& vocab);
void save_instances(std::span<const LabeledInstance> instances,
                    const RelationVocabulary& vocab,
                    const std::filesystem::path& path);

// A JSON object with optional "synthetic", "train", "schedule" and "mining"
// sections. Missing fields keep their defaults; unknown fields are errors.
// schedule.total_epochs defaults to train.epochs.
struct RunConfig {
  SyntheticDatasetSpec synthetic;
  TrainConfig train;
  MiningOptions mining;
};

RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text, const std::string& origin = "config");

// Reports, one JSON document each.
void write_loss_report(const LossReport& report, const Batch& batch,
                       bool with_grads, std::ostream& out);
// Columns ts, to, tso, cs, co, total.
void write_violation_report(const ViolationReport& report, std::ostream& out);
// One `{"epoch", "L_O", "L_C", "lambda", "violations"}` line per record.
void write_history(std::span<const EpochRecord> history, std::ostream& out);

}  // namespace clc
