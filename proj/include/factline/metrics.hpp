#pragma once

// Fact-level report scoring (similarity matrix + greedy matching) and the
// in-repo lexical baselines (BLEU, ROUGE-L, CIDEr-D) behind a pluggable
// scorer registry.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace factline::metrics {

// Turns a report into ordered fact texts (sentence splitting plus extraction).
using FactsFn = std::function<std::vector<std::string>(const std::string&)>;
// Embeds texts as unit-norm rows, one row per text.
using EmbedFn = std::function<Eigen::MatrixXd(const std::vector<std::string>&)>;

// M(i, j) = dot(refs.row(i), cands.row(j)). Empty sides give empty dimensions.
Eigen::MatrixXd similarity_matrix(const Eigen::MatrixXd& refs, const Eigen::MatrixXd& cands);

struct GreedyScore {
    double s_row = 0.0;  // mean over rows of the row maximum
    double s_col = 0.0;  // mean over columns of the column maximum
    double score = 0.0;  // (s_row + s_col) / 2
};

GreedyScore greedy_score(const Eigen::MatrixXd& m);

struct BestMatch {
    int index = -1;
    double similarity = 0.0;
};

struct ScoreBreakdown {
    std::vector<std::string> ref_facts;  // exact-string deduplicated, in order
    std::vector<std::string> cand_facts;
    double s_row = 0.0;
    double s_col = 0.0;
    double score = 0.0;
    std::vector<BestMatch> row_best;  // one per ref fact
    std::vector<BestMatch> col_best;  // one per cand fact
};

// Keeps the first occurrence of each exact string.
std::vector<std::string> dedup_exact(const std::vector<std::string>& facts);

// Degenerate conventions: both fact sets empty scores 1.0, exactly one empty
// scores 0.0. Facts are deduplicated by exact string before matching.
ScoreBreakdown cxrfescore(const std::string& ref_text, const std::string& cand_text,
                          const FactsFn& extract_facts, const EmbedFn& embed);

// --- lexical baselines --------------------------------------------------------

// Modified n-gram precision with per-reference clipping, geometric mean over
// the orders the candidate actually has, and a closest-reference brevity
// penalty.
double bleu(const std::vector<std::string>& refs, const std::string& cand, int max_n = 4);

// Longest-common-subsequence F-measure 2PR / (P + R).
double rouge_l(const std::string& ref, const std::string& cand);

// tf-idf n-gram cosine with count clipping and a Gaussian length penalty,
// averaged over the 1..max_n orders and scaled by 10. Document frequencies
// come from the reference sets supplied at construction.
class CiderScorer {
  public:
    explicit CiderScorer(const std::vector<std::vector<std::string>>& ref_sets, int max_n = 4,
                         double sigma = 6.0);

    double score(const std::vector<std::string>& refs, const std::string& cand) const;

  private:
    struct TfIdf {
        std::vector<std::map<std::string, double>> vec;  // per order
        std::vector<double> norm;
        double length = 0.0;  // candidate token count
    };

    TfIdf tf_idf(const std::string& s) const;

    int max_n_;
    double sigma_;
    double log_ref_count_;
    std::map<std::string, int> doc_freq_;
};

// --- registry -------------------------------------------------------------------

using ScorerFn = std::function<double(const std::vector<std::string>&, const std::string&)>;

class ScorerRegistry {
  public:
    void add(const std::string& name, ScorerFn fn);
    bool has(const std::string& name) const;
    std::vector<std::string> names() const;
    double score(const std::string& name, const std::vector<std::string>& refs,
                 const std::string& cand) const;

    // bleu, rouge_l (best reference) and cider_d with idf statistics from the
    // given reference sets.
    static ScorerRegistry with_baselines(const std::vector<std::vector<std::string>>& ref_sets);

  private:
    std::map<std::string, ScorerFn> scorers_;
};

}  // namespace factline::metrics
