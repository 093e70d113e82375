#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "factline/common.hpp"

namespace factline::sampling {

// levsim(x,y) = 1 - lev(x,y) / max(|x|,|y|); levsim("","") = 1.
int edit_distance(std::string_view x, std::string_view y);
double levsim(std::string_view x, std::string_view y);

// |a∩b| / |a∪b| with J(∅,∅) = 1.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

// Seeded k-means (k-means++ init, Lloyd iterations with a fixed cap).
std::vector<int> cluster_sentences(const Eigen::MatrixXd& embeddings, int k, std::uint64_t seed,
                                   int max_iters = 50);

enum class Rule1Kind { Observation, Anatomy };

struct Triplet {
    std::string anchor;
    std::string positive;
    std::string negative;
    int rule_id = 0;
    std::optional<Rule1Kind> sub_kind;  // rule 1 only

    bool operator==(const Triplet&) const = default;
};

// Per-sentence signals required by the sampling rules. Text is the key.
struct AuxSignals {
    std::map<std::string, Eigen::VectorXd> aux_embedding;                // unit vectors
    std::map<std::string, int> cluster_id;                               // c(x)
    std::map<std::string, int> health_status;                            // HS(x)
    std::map<std::string, std::set<std::string>> cig_labels;             // CIGL(x)
    std::map<std::string, std::set<std::string>> radgraph_items;         // RG(x)
    std::map<std::string, std::set<std::string>> fact_paraphrases;       // rule 1, facts
    std::map<std::string, std::set<std::string>> anatomy_paraphrases;    // rule 1, locations
    std::map<std::string, std::set<std::string>> paraphrase_sets;        // S(f), rule 3

    void save(const std::filesystem::path& dir) const;
    static AuxSignals load(const std::filesystem::path& dir);
};

struct RuleConfig {
    double margin_cos = 0.1;
    double margin_lev = 0.1;
    double margin_rg = 0.2;
    int k_clusters = 20;
    std::uint64_t seed = 0;
};

struct Validation {
    bool ok = false;
    std::string reason;  // first violated clause, empty when ok
};

// Re-evaluates the full rule predicate from the signals. Shares no code with
// the sampler's candidate construction.
Validation validate_triplet(const Triplet& t, const AuxSignals& aux, const RuleConfig& cfg);

// Draws up to n validated triplets for one rule. Exhaustion yields a shorter
// list plus a warning on the given stream (default stderr).
std::vector<Triplet> sample_triplets(int rule_id, const std::vector<std::string>& corpus,
                                     const AuxSignals& aux, const RuleConfig& cfg, int n,
                                     std::uint64_t seed,
                                     const std::vector<Triplet>* hard_source = nullptr);

void save_triplets(const std::filesystem::path& jsonl_path, const std::vector<Triplet>& triplets);
std::vector<Triplet> load_triplets(const std::filesystem::path& jsonl_path);

}  // namespace factline::sampling
