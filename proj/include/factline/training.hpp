#pragma once

// Task losses, the cyclic exponential learning-rate schedule, weighted task
// interleaving with gradient accumulation, and the multitask training loop.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "factline/common.hpp"
#include "factline/encoder.hpp"
#include "factline/nn/autograd.hpp"

namespace factline::training {

// task ids: "T" triplets, "C" fact classification, "SD" sentence decoding,
// "NLI" inference pairs, "EC" entailment/contradiction quadruplets, "ER"
// entity-relation graphs
const std::vector<std::string>& all_tasks();

struct TrainConfig {
    double lr_max = 8e-5;
    double lr_min = 1e-6;
    int cycle_epochs = 8;
    int epochs = 8;
    int batches_per_epoch = 800;  // optimizer steps per epoch; fixtures run 100
    int batch_size = 32;
    std::map<std::string, double> task_weights;  // absent task -> weight 1
    int window = 0;                              // 0: one slot per active task
    bool check_accumulation = true;
    std::uint64_t seed = 0;
    std::vector<std::string> active = {"T"};
    int er_negative_spans = 8;
    int er_negative_pairs = 8;

    void validate() const;
};

struct TripletExample {
    std::string anchor;
    std::string positive;
    std::string negative;
};

struct LabeledFact {
    std::string text;
    int category = 0;
    int health = 0;
    int comparison = 0;
    std::vector<int> observations;  // indices of positive classes
    std::vector<int> anatomy;
};

struct SdExample {
    std::string text;
};

struct NliExample {
    std::string premise;
    std::string hypothesis;
    int label = 0;  // 0 entailment, 1 neutral, 2 contradiction
};

struct ErExample {
    std::string text;
    std::vector<encoder::Entity> entities;
    std::vector<encoder::Relation> relations;  // indices into entities
};

struct Datasets {
    std::vector<TripletExample> triplets;
    std::vector<LabeledFact> facts;
    std::vector<SdExample> sentences;
    std::vector<NliExample> nli;
    std::vector<std::pair<std::string, std::string>> ec_entail;
    std::vector<std::pair<std::string, std::string>> ec_contra;
    std::vector<ErExample> er;
    std::vector<TripletExample> val_triplets;  // optional per-epoch validation
};

// --- losses -----------------------------------------------------------------

// Binary cross-entropy on a similarity-difference logit: log(1+exp(-logit)).
double bce_logit_loss(double logit);

// Embedding rows are matched by row; returns the batch mean loss.
nn::Var triplet_bce_loss(nn::Tape& t, nn::Var anchor, nn::Var positive, nn::Var negative);
nn::Var ec_quadruplet_loss(nn::Tape& t, nn::Var ent_premise, nn::Var ent_hypothesis,
                           nn::Var con_premise, nn::Var con_hypothesis);

// Shape-checked wrappers used by the C/SD/NLI/ER assembly.
nn::Var single_label_loss(nn::Var logits, const std::vector<int>& targets);
nn::Var multi_label_loss(nn::Var logits, const nn::Mat& targets01);

// Full classification loss for a batch of labeled facts: CE over category,
// health and comparison plus mean per-class BCE over observations and anatomy.
nn::Var classification_loss(nn::Tape& t, const encoder::FactEncoder& enc, nn::Var emb,
                            const std::vector<const LabeledFact*>& batch);

// Teacher-forced reconstruction of one sentence from its own embedding.
nn::Var sd_loss(nn::Tape& t, const encoder::FactEncoder& enc, nn::Var emb_row,
                const std::vector<int>& tokens_with_eos);

// SpERT-style span cross-entropy plus relation BCE with sampled negatives.
nn::Var er_loss(nn::Tape& t, const encoder::FactEncoder& enc, const ErExample& example, Rng& rng,
                int negative_spans, int negative_pairs);

// --- schedule and interleaving ------------------------------------------------

double lr_schedule(long step, const TrainConfig& cfg);

class TaskInterleaver {
  public:
    TaskInterleaver(std::vector<std::string> tasks, const std::map<std::string, double>& weights,
                    int window, std::uint64_t seed);

    const std::vector<std::string>& tasks() const { return tasks_; }
    int window() const { return window_; }
    std::vector<std::string> next_window();
    std::string next();

  private:
    std::vector<std::string> tasks_;
    std::vector<double> residual_;  // sampling distribution for free slots
    int window_;
    Rng rng_;
    std::vector<std::string> buffer_;
    std::size_t cursor_ = 0;
};

// --- the loop ----------------------------------------------------------------

struct LossRecord {
    long step = 0;  // optimizer step (accumulation window) index
    std::string task;
    double loss = 0.0;
    double lr = 0.0;
};

struct EpochMetric {
    int epoch = 0;
    std::string name;
    double value = 0.0;
};

struct TrainResult {
    std::vector<LossRecord> history;
    std::vector<EpochMetric> metrics;
    std::map<std::string, long> task_batches;  // gradient-contribution counters
};

// Fraction of triplets ranked correctly: sim(anchor, positive) > sim(anchor, negative).
double triplet_ranking_accuracy(const encoder::EmbeddingBackend& model,
                                const std::vector<TripletExample>& triplets);

TrainResult train(const TrainConfig& cfg, const Datasets& data, encoder::FactEncoder& model);

void save_loss_history(const std::filesystem::path& csv_path,
                       const std::vector<LossRecord>& history);

}  // namespace factline::training
