#include "factline/sampling.hpp"

#include <algorithm>
#include <iostream>
#include <tuple>

#include "factline/embedding_cache.hpp"
#include "factline/io.hpp"

namespace factline::sampling {

int edit_distance(std::string_view x, std::string_view y) {
    const std::size_t n = x.size(), m = y.size();
    if (n == 0) return static_cast<int>(m);
    if (m == 0) return static_cast<int>(n);
    std::vector<int> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= m; ++j) {
            const int sub = prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

double levsim(std::string_view x, std::string_view y) {
    const std::size_t longest = std::max(x.size(), y.size());
    if (longest == 0) return 1.0;  // D15-style convention for two empty strings
    return 1.0 - static_cast<double>(edit_distance(x, y)) / static_cast<double>(longest);
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& x : a) inter += b.count(x);
    const std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<int> cluster_sentences(const Eigen::MatrixXd& embeddings, int k, std::uint64_t seed,
                                   int max_iters) {
    const int n = static_cast<int>(embeddings.rows());
    if (k <= 0) throw ContractError("cluster_sentences: k must be positive");
    if (k > n) throw ContractError("cluster_sentences: more clusters than points");
    Rng rng(seed);

    Eigen::MatrixXd centroids(k, embeddings.cols());
    // k-means++ seeding
    centroids.row(0) = embeddings.row(rng.index(static_cast<std::size_t>(n)));
    Eigen::VectorXd best_d2 =
        (embeddings.rowwise() - centroids.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = best_d2.sum();
        int pick = 0;
        if (total <= 0.0) {
            pick = rng.index(static_cast<std::size_t>(n));
        } else {
            double target = rng.uniform() * total;
            for (int i = 0; i < n; ++i) {
                target -= best_d2(i);
                if (target <= 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        centroids.row(c) = embeddings.row(pick);
        best_d2 = best_d2.cwiseMin(
            (embeddings.rowwise() - centroids.row(c)).rowwise().squaredNorm());
    }

    std::vector<int> assign(static_cast<std::size_t>(n), -1);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_dist = (embeddings.row(i) - centroids.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double d = (embeddings.row(i) - centroids.row(c)).squaredNorm();
                if (d < best_dist) {
                    best_dist = d;
                    best = c;
                }
            }
            if (assign[static_cast<std::size_t>(i)] != best) {
                assign[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        if (!changed) break;
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, embeddings.cols());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (int i = 0; i < n; ++i) {
            sums.row(assign[static_cast<std::size_t>(i)]) += embeddings.row(i);
            ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
            } else {
                // revive an empty cluster with the point farthest from its centroid
                int worst = 0;
                double worst_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    const double d =
                        (embeddings.row(i) - centroids.row(assign[static_cast<std::size_t>(i)]))
                            .squaredNorm();
                    if (d > worst_d) {
                        worst_d = d;
                        worst = i;
                    }
                }
                centroids.row(c) = embeddings.row(worst);
            }
        }
    }
    return assign;
}

namespace {

template <typename M>
const typename M::mapped_type& need(const M& map, const std::string& key, const char* signal) {
    const auto it = map.find(key);
    if (it == map.end()) {
        throw ContractError(std::string("missing ") + signal + " for sentence: " + key);
    }
    return it->second;
}

double cosine(const AuxSignals& aux, const std::string& x, const std::string& y) {
    const auto& ex = need(aux.aux_embedding, x, "aux_embedding");
    const auto& ey = need(aux.aux_embedding, y, "aux_embedding");
    if (ex.size() != ey.size()) throw ContractError("aux embeddings of different dimension");
    return ex.dot(ey);
}

bool overlaps(const std::set<std::string>& a, const std::set<std::string>& b) {
    for (const auto& x : a) {
        if (b.count(x)) return true;
    }
    return false;
}

bool in_set(const std::set<std::string>& s, const std::string& x) { return s.count(x) > 0; }

}  // namespace

Validation validate_triplet(const Triplet& t, const AuxSignals& aux, const RuleConfig& cfg) {
    if (t.anchor == t.positive || t.anchor == t.negative || t.positive == t.negative) {
        return {false, "texts not pairwise distinct"};
    }
    switch (t.rule_id) {
        case 1: {
            const auto* sets = &aux.fact_paraphrases;
            if (t.sub_kind == Rule1Kind::Anatomy) sets = &aux.anatomy_paraphrases;
            const auto it = sets->find(t.anchor);
            if (it == sets->end() || !in_set(it->second, t.positive)) {
                return {false, "positive not a paraphrase of anchor"};
            }
            if (in_set(it->second, t.negative)) {
                return {false, "negative is a paraphrase of anchor"};
            }
            const bool emb_prefers_negative =
                cosine(aux, t.anchor, t.positive) < cosine(aux, t.anchor, t.negative);
            const bool lev_prefers_negative =
                edit_distance(t.anchor, t.positive) > edit_distance(t.anchor, t.negative);
            if (emb_prefers_negative && lev_prefers_negative) {
                return {false, "veto: embedding and edit distance both prefer the negative"};
            }
            return {true, ""};
        }
        case 2: {
            if (need(aux.health_status, t.anchor, "health_status") !=
                need(aux.health_status, t.positive, "health_status")) {
                return {false, "anchor-positive health status mismatch"};
            }
            const int ca = need(aux.cluster_id, t.anchor, "cluster_id");
            const int cp = need(aux.cluster_id, t.positive, "cluster_id");
            const int cn = need(aux.cluster_id, t.negative, "cluster_id");
            if (cp != ca) return {false, "anchor-positive cluster mismatch"};
            if (cp == cn) return {false, "positive-negative clusters equal"};
            if (!(cosine(aux, t.anchor, t.positive) >
                  cosine(aux, t.anchor, t.negative) + cfg.margin_cos)) {
                return {false, "cosine margin not met"};
            }
            if (!(levsim(t.anchor, t.positive) > levsim(t.anchor, t.negative) + cfg.margin_lev)) {
                return {false, "levsim margin not met"};
            }
            return {true, ""};
        }
        case 3: {
            bool found_group = false;
            bool negative_clean = false;
            for (const auto& [fact, members] : aux.paraphrase_sets) {
                if (in_set(members, t.anchor) && in_set(members, t.positive)) {
                    found_group = true;
                    if (!in_set(members, t.negative)) {
                        negative_clean = true;
                        break;
                    }
                }
            }
            if (!found_group) return {false, "anchor and positive share no fact group"};
            if (!negative_clean) return {false, "negative inside the fact group"};
            if (need(aux.cluster_id, t.anchor, "cluster_id") ==
                need(aux.cluster_id, t.negative, "cluster_id")) {
                return {false, "anchor-negative clusters equal"};
            }
            const bool emb_prefers_negative =
                cosine(aux, t.anchor, t.positive) < cosine(aux, t.anchor, t.negative);
            const bool lev_prefers_negative =
                edit_distance(t.anchor, t.positive) > edit_distance(t.anchor, t.negative);
            if (emb_prefers_negative && lev_prefers_negative) {
                return {false, "veto: embedding and edit distance both prefer the negative"};
            }
            return {true, ""};
        }
        case 4: {
            const auto& la = need(aux.cig_labels, t.anchor, "cig_labels");
            const auto& lp = need(aux.cig_labels, t.positive, "cig_labels");
            const auto& ln = need(aux.cig_labels, t.negative, "cig_labels");
            if (!overlaps(la, lp)) return {false, "anchor-positive label overlap empty"};
            if (overlaps(la, ln)) return {false, "anchor-negative label overlap"};
            if (overlaps(lp, ln)) return {false, "positive-negative label overlap"};
            if (!(cosine(aux, t.anchor, t.positive) > cosine(aux, t.anchor, t.negative) &&
                  levsim(t.anchor, t.positive) > levsim(t.anchor, t.negative))) {
                return {false, "embedding/levsim consensus failed"};
            }
            return {true, ""};
        }
        case 5: {
            const int ca = need(aux.cluster_id, t.anchor, "cluster_id");
            if (ca != need(aux.cluster_id, t.positive, "cluster_id")) {
                return {false, "anchor-positive cluster mismatch"};
            }
            if (ca == need(aux.cluster_id, t.negative, "cluster_id")) {
                return {false, "anchor-negative clusters equal"};
            }
            const auto& ra = need(aux.radgraph_items, t.anchor, "radgraph_items");
            const auto& rp = need(aux.radgraph_items, t.positive, "radgraph_items");
            const auto& rn = need(aux.radgraph_items, t.negative, "radgraph_items");
            if (!(jaccard(ra, rp) > jaccard(ra, rn) + cfg.margin_rg)) {
                return {false, "radgraph jaccard margin not met"};
            }
            return {true, ""};
        }
        case 6:
            return {true, ""};  // non-degeneracy already checked above
        default:
            throw ContractError("unknown rule id " + std::to_string(t.rule_id));
    }
}

namespace {

// Candidate construction below is deliberately structural (membership pools
// plus local numeric checks) and never calls validate_triplet, so the
// validator stays an independent cross-check.

struct TripletKey {
    std::string a, p, n;
    bool operator<(const TripletKey& o) const {
        return std::tie(a, p, n) < std::tie(o.a, o.p, o.n);
    }
};

double raw_cosine(const AuxSignals& aux, const std::string& x, const std::string& y) {
    return need(aux.aux_embedding, x, "aux_embedding")
        .dot(need(aux.aux_embedding, y, "aux_embedding"));
}

std::vector<std::string> sorted_keys(const std::map<std::string, std::set<std::string>>& m) {
    std::vector<std::string> keys;
    for (const auto& [k, v] : m) {
        if (!v.empty()) keys.push_back(k);
    }
    return keys;
}

}  // namespace

std::vector<Triplet> sample_triplets(int rule_id, const std::vector<std::string>& corpus,
                                     const AuxSignals& aux, const RuleConfig& cfg, int n,
                                     std::uint64_t seed, const std::vector<Triplet>* hard_source) {
    if (rule_id < 1 || rule_id > 6) throw UsageError("unknown rule id " + std::to_string(rule_id));
    if (n < 0) throw ContractError("sample_triplets: negative count");
    std::vector<Triplet> out;
    if (n == 0) return out;
    Rng rng(seed);
    std::set<TripletKey> seen;

    auto emit = [&](Triplet t) {
        if (seen.insert({t.anchor, t.positive, t.negative}).second) {
            out.push_back(std::move(t));
            return true;
        }
        return false;
    };
    auto warn_short = [&] {
        std::cerr << "[sampling] rule " << rule_id << ": corpus exhausted after " << out.size()
                  << " of " << n << " requested triplets\n";
    };

    if (rule_id == 6) {
        if (hard_source == nullptr) throw UsageError("rule 6 requires a hard-triplet source");
        for (const auto& h : *hard_source) {
            if (static_cast<int>(out.size()) >= n) break;
            if (h.anchor == h.positive || h.anchor == h.negative || h.positive == h.negative) {
                continue;  // degenerate source rows are skipped, not fatal
            }
            Triplet t = h;
            t.rule_id = 6;
            t.sub_kind.reset();
            emit(std::move(t));
        }
        if (static_cast<int>(out.size()) < n) warn_short();
        return out;
    }

    // Shared pools
    const long max_failures = 1000 + 200L * n;
    long failures = 0;

    auto try_loop = [&](auto&& attempt) {
        while (static_cast<int>(out.size()) < n && failures < max_failures) {
            if (!attempt()) ++failures;
        }
        if (static_cast<int>(out.size()) < n) warn_short();
    };

    switch (rule_id) {
        case 1: {
            const auto obs_anchors = sorted_keys(aux.fact_paraphrases);
            const auto anat_anchors = sorted_keys(aux.anatomy_paraphrases);
            if (obs_anchors.empty() && anat_anchors.empty()) {
                warn_short();
                return out;
            }
            if (corpus.empty()) throw ContractError("rule 1 needs a negative pool");
            try_loop([&] {
                const bool use_anat =
                    !anat_anchors.empty() &&
                    (obs_anchors.empty() ||
                     rng.below(obs_anchors.size() + anat_anchors.size()) >= obs_anchors.size());
                const auto& anchors = use_anat ? anat_anchors : obs_anchors;
                const auto& sets = use_anat ? aux.anatomy_paraphrases : aux.fact_paraphrases;
                const std::string& a = anchors[rng.below(anchors.size())];
                const auto& pset = sets.at(a);
                std::vector<std::string> ps(pset.begin(), pset.end());
                const std::string& p = ps[rng.below(ps.size())];
                if (p == a) return false;
                // D17: uniform negatives, rejection capped per anchor
                for (int att = 0; att < 1000; ++att) {
                    const std::string& neg = corpus[rng.below(corpus.size())];
                    if (neg == a || neg == p || pset.count(neg)) continue;
                    const bool emb_pref_neg = raw_cosine(aux, a, p) < raw_cosine(aux, a, neg);
                    const bool lev_pref_neg = edit_distance(a, p) > edit_distance(a, neg);
                    if (emb_pref_neg && lev_pref_neg) continue;
                    return emit({a, p, neg, 1,
                                 use_anat ? Rule1Kind::Anatomy : Rule1Kind::Observation});
                }
                return false;
            });
            break;
        }
        case 2: {
            std::map<std::pair<int, int>, std::vector<std::string>> by_cluster_hs;
            std::map<int, std::vector<std::string>> by_cluster;
            for (const auto& s : corpus) {
                const auto cit = aux.cluster_id.find(s);
                const auto hit = aux.health_status.find(s);
                if (cit == aux.cluster_id.end() || hit == aux.health_status.end()) continue;
                by_cluster_hs[{cit->second, hit->second}].push_back(s);
                by_cluster[cit->second].push_back(s);
            }
            try_loop([&] {
                const std::string& a = corpus[rng.below(corpus.size())];
                const auto cit = aux.cluster_id.find(a);
                const auto hit = aux.health_status.find(a);
                if (cit == aux.cluster_id.end() || hit == aux.health_status.end()) return false;
                const auto& pool = by_cluster_hs[{cit->second, hit->second}];
                if (pool.size() < 2) return false;
                const std::string& p = pool[rng.below(pool.size())];
                if (p == a) return false;
                const std::string& neg = corpus[rng.below(corpus.size())];
                const auto nit = aux.cluster_id.find(neg);
                if (nit == aux.cluster_id.end() || nit->second == cit->second) return false;
                if (neg == a || neg == p) return false;
                if (!(raw_cosine(aux, a, p) > raw_cosine(aux, a, neg) + cfg.margin_cos))
                    return false;
                if (!(levsim(a, p) > levsim(a, neg) + cfg.margin_lev)) return false;
                return emit({a, p, neg, 2, std::nullopt});
            });
            break;
        }
        case 3: {
            const auto facts = sorted_keys(aux.paraphrase_sets);
            if (facts.empty() || corpus.empty()) {
                warn_short();
                return out;
            }
            try_loop([&] {
                const std::string& f = facts[rng.below(facts.size())];
                const auto& group = aux.paraphrase_sets.at(f);
                if (group.size() < 2) return false;
                std::vector<std::string> members(group.begin(), group.end());
                const std::string& a = members[rng.below(members.size())];
                const std::string& p = members[rng.below(members.size())];
                if (a == p) return false;
                for (int att = 0; att < 1000; ++att) {
                    const std::string& neg = corpus[rng.below(corpus.size())];
                    if (group.count(neg) || neg == a || neg == p) continue;
                    const auto ca = aux.cluster_id.find(a);
                    const auto cn = aux.cluster_id.find(neg);
                    if (ca == aux.cluster_id.end() || cn == aux.cluster_id.end()) continue;
                    if (ca->second == cn->second) continue;
                    const bool emb_pref_neg = raw_cosine(aux, a, p) < raw_cosine(aux, a, neg);
                    const bool lev_pref_neg = edit_distance(a, p) > edit_distance(a, neg);
                    if (emb_pref_neg && lev_pref_neg) continue;
                    return emit({a, p, neg, 3, std::nullopt});
                }
                return false;
            });
            break;
        }
        case 4: {
            std::map<std::string, std::vector<std::string>> by_label;
            for (const auto& s : corpus) {
                const auto it = aux.cig_labels.find(s);
                if (it == aux.cig_labels.end()) continue;
                for (const auto& l : it->second) by_label[l].push_back(s);
            }
            try_loop([&] {
                const std::string& a = corpus[rng.below(corpus.size())];
                const auto la = aux.cig_labels.find(a);
                if (la == aux.cig_labels.end() || la->second.empty()) return false;
                std::vector<std::string> labels(la->second.begin(), la->second.end());
                const auto& pool = by_label[labels[rng.below(labels.size())]];
                const std::string& p = pool[rng.below(pool.size())];
                if (p == a) return false;
                const auto lp = aux.cig_labels.find(p);
                if (lp == aux.cig_labels.end()) return false;
                const std::string& neg = corpus[rng.below(corpus.size())];
                if (neg == a || neg == p) return false;
                const auto ln = aux.cig_labels.find(neg);
                if (ln == aux.cig_labels.end()) return false;
                if (overlaps(la->second, ln->second) || overlaps(lp->second, ln->second))
                    return false;
                if (!(raw_cosine(aux, a, p) > raw_cosine(aux, a, neg) &&
                      levsim(a, p) > levsim(a, neg))) {
                    return false;
                }
                return emit({a, p, neg, 4, std::nullopt});
            });
            break;
        }
        case 5: {
            std::map<int, std::vector<std::string>> by_cluster;
            for (const auto& s : corpus) {
                const auto it = aux.cluster_id.find(s);
                if (it != aux.cluster_id.end()) by_cluster[it->second].push_back(s);
            }
            try_loop([&] {
                const std::string& a = corpus[rng.below(corpus.size())];
                const auto ca = aux.cluster_id.find(a);
                if (ca == aux.cluster_id.end()) return false;
                const auto& pool = by_cluster[ca->second];
                if (pool.size() < 2) return false;
                const std::string& p = pool[rng.below(pool.size())];
                if (p == a) return false;
                const std::string& neg = corpus[rng.below(corpus.size())];
                if (neg == a || neg == p) return false;
                const auto cn = aux.cluster_id.find(neg);
                if (cn == aux.cluster_id.end() || cn->second == ca->second) return false;
                const auto& ra = need(aux.radgraph_items, a, "radgraph_items");
                const auto& rp = need(aux.radgraph_items, p, "radgraph_items");
                const auto& rn = need(aux.radgraph_items, neg, "radgraph_items");
                if (!(jaccard(ra, rp) > jaccard(ra, rn) + cfg.margin_rg)) return false;
                return emit({a, p, neg, 5, std::nullopt});
            });
            break;
        }
        default:
            break;
    }
    return out;
}

void save_triplets(const std::filesystem::path& jsonl_path, const std::vector<Triplet>& triplets) {
    std::vector<io::json> records;
    records.reserve(triplets.size());
    for (const auto& t : triplets) {
        io::json j = {{"rule", t.rule_id},
                      {"anchor", t.anchor},
                      {"positive", t.positive},
                      {"negative", t.negative}};
        if (t.sub_kind) {
            j["sub_kind"] = *t.sub_kind == Rule1Kind::Observation ? "observation" : "anatomy";
        }
        records.push_back(std::move(j));
    }
    io::write_jsonl(jsonl_path, records);
}

std::vector<Triplet> load_triplets(const std::filesystem::path& jsonl_path) {
    std::vector<Triplet> out;
    for (const auto& j : io::read_jsonl(jsonl_path)) {
        Triplet t;
        t.rule_id = j.value("rule", 0);
        t.anchor = j.at("anchor").get<std::string>();
        t.positive = j.at("positive").get<std::string>();
        t.negative = j.at("negative").get<std::string>();
        if (j.contains("sub_kind")) {
            t.sub_kind = j.at("sub_kind").get<std::string>() == "anatomy" ? Rule1Kind::Anatomy
                                                                          : Rule1Kind::Observation;
        }
        out.push_back(std::move(t));
    }
    return out;
}

void AuxSignals::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::vector<std::string> texts;
    texts.reserve(aux_embedding.size());
    Eigen::Index dim = 0;
    for (const auto& [k, v] : aux_embedding) {
        texts.push_back(k);
        dim = v.size();
    }
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(texts.size()), dim);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        rows.row(static_cast<Eigen::Index>(i)) = aux_embedding.at(texts[i]).transpose();
    }
    io::write_embedding_cache(dir / "aux_embeddings.bin", texts, rows);

    std::vector<io::json> signal_records;
    std::set<std::string> all_texts(texts.begin(), texts.end());
    for (const auto& [k, v] : cluster_id) all_texts.insert(k);
    for (const auto& [k, v] : health_status) all_texts.insert(k);
    for (const auto& [k, v] : cig_labels) all_texts.insert(k);
    for (const auto& [k, v] : radgraph_items) all_texts.insert(k);
    for (const auto& t : all_texts) {
        io::json j = {{"text", t}};
        if (aux_embedding.count(t)) j["emb"] = true;
        if (const auto it = cluster_id.find(t); it != cluster_id.end()) j["cluster"] = it->second;
        if (const auto it = health_status.find(t); it != health_status.end())
            j["health"] = it->second;
        if (const auto it = cig_labels.find(t); it != cig_labels.end())
            j["cig"] = std::vector<std::string>(it->second.begin(), it->second.end());
        if (const auto it = radgraph_items.find(t); it != radgraph_items.end())
            j["rg"] = std::vector<std::string>(it->second.begin(), it->second.end());
        signal_records.push_back(std::move(j));
    }
    io::write_jsonl(dir / "signals.jsonl", signal_records);

    std::vector<io::json> para_records;
    auto dump_sets = [&](const std::map<std::string, std::set<std::string>>& m, const char* kind) {
        for (const auto& [k, v] : m) {
            para_records.push_back(
                {{"kind", kind},
                 {"key", k},
                 {"members", std::vector<std::string>(v.begin(), v.end())}});
        }
    };
    dump_sets(fact_paraphrases, "fact");
    dump_sets(anatomy_paraphrases, "anatomy");
    dump_sets(paraphrase_sets, "group");
    io::write_jsonl(dir / "paraphrases.jsonl", para_records);
}

AuxSignals AuxSignals::load(const std::filesystem::path& dir) {
    AuxSignals aux;
    std::vector<std::string> texts;
    for (const auto& j : io::read_jsonl(dir / "signals.jsonl")) {
        const std::string t = j.at("text").get<std::string>();
        if (j.value("emb", false)) texts.push_back(t);
        if (j.contains("cluster")) aux.cluster_id[t] = j.at("cluster").get<int>();
        if (j.contains("health")) aux.health_status[t] = j.at("health").get<int>();
        if (j.contains("cig")) {
            for (const auto& l : j.at("cig")) aux.cig_labels[t].insert(l.get<std::string>());
        }
        if (j.contains("rg")) {
            for (const auto& l : j.at("rg")) aux.radgraph_items[t].insert(l.get<std::string>());
        }
    }
    const Eigen::MatrixXd rows = io::read_embedding_cache(dir / "aux_embeddings.bin", texts);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        aux.aux_embedding[texts[i]] = rows.row(static_cast<Eigen::Index>(i)).transpose();
    }
    for (const auto& j : io::read_jsonl(dir / "paraphrases.jsonl")) {
        const std::string kind = j.at("kind").get<std::string>();
        const std::string key = j.at("key").get<std::string>();
        std::set<std::string> members;
        for (const auto& m : j.at("members")) members.insert(m.get<std::string>());
        if (kind == "fact") aux.fact_paraphrases[key] = std::move(members);
        else if (kind == "anatomy") aux.anatomy_paraphrases[key] = std::move(members);
        else if (kind == "group") aux.paraphrase_sets[key] = std::move(members);
        else throw ParseError("unknown paraphrase kind '" + kind + "'");
    }
    return aux;
}

}  // namespace factline::sampling
