#pragma once

// Evaluation protocols: label entailment/contradiction, similarity rankings
// (AUC, a@k, c@k, j@k), threshold-tuned entailment/contradiction splitting,
// 3-class inference accuracy, scorer AUC, and template-based report recovery.

#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "factline/annotation.hpp"
#include "factline/corpus.hpp"
#include "factline/encoder.hpp"
#include "factline/metrics.hpp"
#include "factline/training.hpp"

namespace factline::evaluation {

using annotation::GoldLabelVector;

// x entails y iff every non-omitted observation of y matches x and every
// anatomy bit set in y is set in x.
bool label_entails(const GoldLabelVector& x, const GoldLabelVector& y);

// Some observation is 1 on one side and 0 on the other. Anatomy never
// contradicts.
bool label_contradicts(const GoldLabelVector& x, const GoldLabelVector& y);

// Similarity of the ordered item pair (query, candidate).
using SimFn = std::function<double(std::size_t, std::size_t)>;

// Midrank AUC of positive scores over negative scores.
double rank_auc(const std::vector<double>& positives, const std::vector<double>& negatives);

struct RankingResult {
    double auc = 0.0;
    std::map<int, double> a_at_k;  // mean over i<=k of relevant fraction in top i
    std::map<int, double> c_at_k;  // mean count of contradictions in top k
    int auc_queries = 0;           // queries with both classes present
};

// Every sentence queries all others; relevance is entailment in either
// direction. Queries lacking a relevant or an irrelevant candidate are
// excluded from the AUC average but kept for a@k and c@k.
RankingResult sentence_ranking_eval(const SimFn& sim, std::size_t count,
                                    const std::vector<GoldLabelVector>& labels,
                                    const std::vector<int>& ks);

// j@k = mean over queries of the mean Jaccard overlap between the query bag
// and each of its top-k ranked bags.
std::map<int, double> report_jaccard_eval(const SimFn& sim, std::size_t count,
                                          const std::vector<std::set<std::string>>& tag_bags,
                                          const std::vector<int>& ks);

struct SimPair {
    double similarity = 0.0;
    bool entailment = false;  // false: contradiction
};

// Candidate thresholds are midpoints of adjacent sorted unique similarities
// plus below-minimum and above-maximum sentinels; picks the candidate with
// the best macro accuracy, ties to the lowest threshold.
double tune_threshold(const std::vector<SimPair>& pairs);

struct NliSimResult {
    double bt = 0.0;
    double a_e = 0.0;   // % entailment pairs at or above bt
    double a_c = 0.0;   // % contradiction pairs below bt
    double a_ec = 0.0;  // macro average
};

NliSimResult nli_similarity_eval(const std::vector<SimPair>& pairs, double bt);

// Percent of pairs whose argmax inference class matches the label.
double nli_classification_eval(const encoder::FactEncoder& model,
                               const std::vector<training::NliExample>& pairs);

using PairScorer = std::function<double(const std::string&, const std::string&)>;

struct LabeledPair {
    std::string premise;
    std::string hypothesis;
    bool entailment = false;
};

// AUC that entailment pairs receive higher scores than contradiction pairs.
double metric_entcont_auc(const PairScorer& scorer, const std::vector<LabeledPair>& pairs);

// --- template recovery ---------------------------------------------------------

struct TemplateItem {
    int observation = -1;  // gold observation id
    bool present = true;
    int anatomy = -1;  // anatomy id, -1 for location-free
};

// One sentence per item: "(no) {observation} in {location}", joined with
// ". " and closed with a final period. Empty items render "".
std::string labels_to_template_report(const std::vector<TemplateItem>& items,
                                      const annotation::LabelSpaces& spaces);

using RecoverFn = std::function<std::string(const corpus::RawReport&)>;

struct RecoveryRow {
    std::string report_id;
    std::string recovered;
    std::map<std::string, double> scores;
    std::string error;  // non-empty on failure; scores absent
};

struct RecoveryTable {
    std::vector<RecoveryRow> rows;
    std::map<std::string, double> means;  // over successful rows
    long failures = 0;
};

// Recovers each report (labels rendered via templates, or concatenated
// facts), scores it against the original with every named scorer, and
// averages. Per-report failures land in the failure column without aborting
// the batch.
RecoveryTable recovery_eval(const RecoverFn& recover, const std::vector<corpus::RawReport>& reports,
                            const metrics::ScorerRegistry& scorers,
                            const std::vector<std::string>& scorer_names);

// --- result tables ---------------------------------------------------------------

void save_ranking_csv(const std::filesystem::path& path,
                      const std::map<std::string, RankingResult>& rows);
void save_jaccard_csv(const std::filesystem::path& path,
                      const std::map<std::string, std::map<int, double>>& rows);
void save_nli_sim_csv(const std::filesystem::path& path,
                      const std::map<std::string, NliSimResult>& rows);
void save_recovery_csv(const std::filesystem::path& path, const RecoveryTable& table);

struct Curve {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

// Mean-metric-vs-k line plot.
void write_curves_svg(const std::filesystem::path& path, const std::vector<Curve>& curves,
                      const std::string& x_label, const std::string& y_label);

}  // namespace factline::evaluation
