#include "factline/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>

#include "factline/common.hpp"
#include "factline/text.hpp"

namespace factline::metrics {

namespace {

std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int n) {
    std::vector<std::string> out;
    if (static_cast<int>(tokens.size()) < n) return out;
    out.reserve(tokens.size() - n + 1);
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string g = tokens[i];
        for (int k = 1; k < n; ++k) {
            g += ' ';
            g += tokens[i + k];
        }
        out.push_back(std::move(g));
    }
    return out;
}

std::map<std::string, int> ngram_counts(const std::vector<std::string>& tokens, int n) {
    std::map<std::string, int> counts;
    for (auto& g : ngrams(tokens, n)) ++counts[g];
    return counts;
}

int lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<int> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) {
                cur[j] = prev[j - 1] + 1;
            } else {
                cur[j] = std::max(prev[j], cur[j - 1]);
            }
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

Eigen::MatrixXd similarity_matrix(const Eigen::MatrixXd& refs, const Eigen::MatrixXd& cands) {
    if (refs.rows() > 0 && cands.rows() > 0 && refs.cols() != cands.cols()) {
        throw ContractError("similarity_matrix dimension mismatch");
    }
    if (refs.rows() == 0 || cands.rows() == 0) {
        return Eigen::MatrixXd(refs.rows(), cands.rows());
    }
    return refs * cands.transpose();
}

GreedyScore greedy_score(const Eigen::MatrixXd& m) {
    if (m.rows() == 0 || m.cols() == 0) {
        throw ContractError("greedy_score on an empty matrix");
    }
    // scalar loops in index order so transposing swaps s_row and s_col exactly
    GreedyScore g;
    double row_sum = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double best = m(i, 0);
        for (Eigen::Index j = 1; j < m.cols(); ++j) best = std::max(best, m(i, j));
        row_sum += best;
    }
    double col_sum = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        double best = m(0, j);
        for (Eigen::Index i = 1; i < m.rows(); ++i) best = std::max(best, m(i, j));
        col_sum += best;
    }
    g.s_row = row_sum / static_cast<double>(m.rows());
    g.s_col = col_sum / static_cast<double>(m.cols());
    g.score = (g.s_row + g.s_col) / 2.0;
    return g;
}

std::vector<std::string> dedup_exact(const std::vector<std::string>& facts) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& f : facts) {
        if (seen.insert(f).second) out.push_back(f);
    }
    return out;
}

ScoreBreakdown cxrfescore(const std::string& ref_text, const std::string& cand_text,
                          const FactsFn& extract_facts, const EmbedFn& embed) {
    ScoreBreakdown b;
    b.ref_facts = dedup_exact(extract_facts(ref_text));
    b.cand_facts = dedup_exact(extract_facts(cand_text));
    if (b.ref_facts.empty() && b.cand_facts.empty()) {
        b.s_row = b.s_col = b.score = 1.0;
        return b;
    }
    if (b.ref_facts.empty() || b.cand_facts.empty()) {
        b.s_row = b.s_col = b.score = 0.0;
        return b;
    }
    const Eigen::MatrixXd m = similarity_matrix(embed(b.ref_facts), embed(b.cand_facts));
    const GreedyScore g = greedy_score(m);
    b.s_row = g.s_row;
    b.s_col = g.s_col;
    b.score = g.score;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Eigen::Index j = 0;
        const double best = m.row(i).maxCoeff(&j);
        b.row_best.push_back({static_cast<int>(j), best});
    }
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        Eigen::Index i = 0;
        const double best = m.col(j).maxCoeff(&i);
        b.col_best.push_back({static_cast<int>(i), best});
    }
    return b;
}

double bleu(const std::vector<std::string>& refs, const std::string& cand, int max_n) {
    if (refs.empty()) throw UsageError("bleu needs at least one reference");
    if (max_n < 1) throw UsageError("bleu needs max_n >= 1");
    const auto cand_tokens = text::word_tokens(cand);
    if (cand_tokens.empty()) return 0.0;

    std::vector<std::vector<std::string>> ref_tokens;
    ref_tokens.reserve(refs.size());
    for (const auto& r : refs) ref_tokens.push_back(text::word_tokens(r));

    // closest reference length, ties to the shorter reference
    const long c_len = static_cast<long>(cand_tokens.size());
    long r_len = static_cast<long>(ref_tokens[0].size());
    for (const auto& rt : ref_tokens) {
        const long len = static_cast<long>(rt.size());
        if (std::abs(len - c_len) < std::abs(r_len - c_len) ||
            (std::abs(len - c_len) == std::abs(r_len - c_len) && len < r_len)) {
            r_len = len;
        }
    }

    double log_sum = 0.0;
    int used = 0;
    for (int n = 1; n <= max_n; ++n) {
        const auto cand_counts = ngram_counts(cand_tokens, n);
        long total = 0;
        for (const auto& [g, c] : cand_counts) total += c;
        if (total == 0) continue;  // candidate too short for this order
        std::vector<std::map<std::string, int>> ref_counts;
        ref_counts.reserve(ref_tokens.size());
        for (const auto& rt : ref_tokens) ref_counts.push_back(ngram_counts(rt, n));
        long matched = 0;
        for (const auto& [g, c] : cand_counts) {
            int best_ref = 0;
            for (const auto& rc : ref_counts) {
                const auto it = rc.find(g);
                if (it != rc.end()) best_ref = std::max(best_ref, it->second);
            }
            matched += std::min(static_cast<long>(c), static_cast<long>(best_ref));
        }
        if (matched == 0) return 0.0;
        log_sum += std::log(static_cast<double>(matched) / static_cast<double>(total));
        ++used;
    }
    if (used == 0) return 0.0;
    const double precision = std::exp(log_sum / static_cast<double>(used));
    const double bp =
        c_len >= r_len ? 1.0
                       : std::exp(1.0 - static_cast<double>(r_len) / static_cast<double>(c_len));
    return bp * precision;
}

double rouge_l(const std::string& ref, const std::string& cand) {
    const auto r = text::word_tokens(ref);
    const auto c = text::word_tokens(cand);
    const int lcs = lcs_length(r, c);
    if (lcs == 0) return 0.0;
    const double p = static_cast<double>(lcs) / static_cast<double>(c.size());
    const double rec = static_cast<double>(lcs) / static_cast<double>(r.size());
    return 2.0 * p * rec / (p + rec);
}

CiderScorer::CiderScorer(const std::vector<std::vector<std::string>>& ref_sets, int max_n,
                         double sigma)
    : max_n_(max_n), sigma_(sigma) {
    if (ref_sets.empty()) throw UsageError("cider needs a reference corpus for idf statistics");
    if (max_n_ < 1) throw UsageError("cider needs max_n >= 1");
    for (const auto& set : ref_sets) {
        std::set<std::string> distinct;
        for (const auto& ref : set) {
            const auto tokens = text::word_tokens(ref);
            for (int n = 1; n <= max_n_; ++n) {
                for (auto& g : ngrams(tokens, n)) distinct.insert(std::move(g));
            }
        }
        for (const auto& g : distinct) ++doc_freq_[g];
    }
    log_ref_count_ =
        ref_sets.size() == 1 ? 1.0 : std::log(static_cast<double>(ref_sets.size()));
}

CiderScorer::TfIdf CiderScorer::tf_idf(const std::string& s) const {
    TfIdf t;
    t.vec.resize(max_n_);
    t.norm.assign(max_n_, 0.0);
    const auto tokens = text::word_tokens(s);
    t.length = static_cast<double>(tokens.size());
    for (int n = 1; n <= max_n_; ++n) {
        for (const auto& [g, count] : ngram_counts(tokens, n)) {
            const auto it = doc_freq_.find(g);
            const double df = it == doc_freq_.end() ? 0.0 : static_cast<double>(it->second);
            const double w =
                static_cast<double>(count) * (log_ref_count_ - std::log(std::max(1.0, df)));
            t.vec[n - 1][g] = w;
            t.norm[n - 1] += w * w;
        }
        t.norm[n - 1] = std::sqrt(t.norm[n - 1]);
    }
    return t;
}

double CiderScorer::score(const std::vector<std::string>& refs, const std::string& cand) const {
    if (refs.empty()) throw UsageError("cider needs at least one reference");
    const TfIdf hyp = tf_idf(cand);
    std::vector<double> val(max_n_, 0.0);
    for (const auto& ref : refs) {
        const TfIdf rv = tf_idf(ref);
        const double delta = hyp.length - rv.length;
        const double penalty = std::exp(-(delta * delta) / (2.0 * sigma_ * sigma_));
        for (int n = 0; n < max_n_; ++n) {
            double dot = 0.0;
            for (const auto& [g, hw] : hyp.vec[n]) {
                const auto it = rv.vec[n].find(g);
                if (it == rv.vec[n].end()) continue;
                dot += std::min(hw, it->second) * it->second;
            }
            if (hyp.norm[n] != 0.0 && rv.norm[n] != 0.0) {
                dot /= hyp.norm[n] * rv.norm[n];
            }
            val[n] += dot * penalty;
        }
    }
    double mean = 0.0;
    for (const double v : val) mean += v;
    mean /= static_cast<double>(max_n_);
    return mean / static_cast<double>(refs.size()) * 10.0;
}

void ScorerRegistry::add(const std::string& name, ScorerFn fn) {
    if (name.empty() || !fn) throw UsageError("scorer registration needs a name and a function");
    scorers_[name] = std::move(fn);
}

bool ScorerRegistry::has(const std::string& name) const { return scorers_.count(name) > 0; }

std::vector<std::string> ScorerRegistry::names() const {
    std::vector<std::string> out;
    out.reserve(scorers_.size());
    for (const auto& [name, fn] : scorers_) out.push_back(name);
    return out;
}

double ScorerRegistry::score(const std::string& name, const std::vector<std::string>& refs,
                             const std::string& cand) const {
    const auto it = scorers_.find(name);
    if (it == scorers_.end()) {
        throw UsageError("unknown scorer \"" + name +
                         "\"; registered: " + text::join(names(), ", "));
    }
    return it->second(refs, cand);
}

ScorerRegistry ScorerRegistry::with_baselines(
    const std::vector<std::vector<std::string>>& ref_sets) {
    ScorerRegistry reg;
    reg.add("bleu", [](const std::vector<std::string>& refs, const std::string& cand) {
        return bleu(refs, cand);
    });
    reg.add("rouge_l", [](const std::vector<std::string>& refs, const std::string& cand) {
        if (refs.empty()) throw UsageError("rouge_l needs at least one reference");
        double best = 0.0;
        for (const auto& r : refs) best = std::max(best, rouge_l(r, cand));
        return best;
    });
    auto cider = std::make_shared<CiderScorer>(ref_sets);
    reg.add("cider_d", [cider](const std::vector<std::string>& refs, const std::string& cand) {
        return cider->score(refs, cand);
    });
    return reg;
}

}  // namespace factline::metrics
