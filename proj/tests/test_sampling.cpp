#include "factline/sampling.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "factline/common.hpp"

using namespace factline;

namespace {

// memoized recursive formulation, independent of the two-row implementation
int oracle_distance(const std::string& x, const std::string& y) {
    std::map<std::pair<int, int>, int> memo;
    auto rec = [&](auto&& self, int i, int j) -> int {
        if (i == 0) return j;
        if (j == 0) return i;
        const auto key = std::make_pair(i, j);
        if (const auto it = memo.find(key); it != memo.end()) return it->second;
        int best = std::min(self(self, i - 1, j), self(self, i, j - 1)) + 1;
        const int sub = self(self, i - 1, j - 1) + (x[i - 1] == y[j - 1] ? 0 : 1);
        best = std::min(best, sub);
        memo[key] = best;
        return best;
    };
    return rec(rec, static_cast<int>(x.size()), static_cast<int>(y.size()));
}

std::string random_string(Rng& rng, std::size_t max_len) {
    const std::size_t len = rng.below(max_len + 1);
    std::string s;
    for (std::size_t i = 0; i < len; ++i) s.push_back(static_cast<char>('a' + rng.below(4)));
    return s;
}

Eigen::VectorXd tilted_axis(int dim, int axis, int tilt_axis, double tilt) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    v(axis) = 1.0;
    v(tilt_axis) += tilt;
    v.normalize();
    return v;
}

struct Fixture {
    std::vector<std::string> corpus;
    sampling::AuxSignals aux;
};

// 4 synthetic "facts" x 6 near-duplicate variants plus 2 anatomy groups; all
// signals engineered so every rule has abundant valid candidates.
Fixture make_fixture() {
    Fixture fx;
    const std::vector<std::string> bases = {"cardiomegaly", "pneumothorax", "atelectasis",
                                            "consolidation"};
    const int dim = 16;
    for (int k = 0; k < 4; ++k) {
        const std::string fact_key = "fact_" + std::to_string(k);
        for (int i = 0; i < 6; ++i) {
            const std::string s = bases[k] + " finding variant " + std::to_string(i);
            fx.corpus.push_back(s);
            fx.aux.aux_embedding[s] = tilted_axis(dim, k, 8 + k, 0.03 * i);
            fx.aux.cluster_id[s] = k;
            fx.aux.health_status[s] = k < 2 ? 1 : 0;
            fx.aux.cig_labels[s] = {"lab_" + std::to_string(k)};
            fx.aux.radgraph_items[s] = {"o" + std::to_string(k), "a" + std::to_string(k),
                                        "m" + std::to_string(k) + "_" + std::to_string(i)};
            fx.aux.paraphrase_sets[fact_key].insert(s);
            if (i > 0) fx.aux.fact_paraphrases[bases[k] + " finding variant 0"].insert(s);
        }
    }
    const std::vector<std::string> regions = {"left hemithorax", "right hemithorax"};
    for (int g = 0; g < 2; ++g) {
        for (int i = 0; i < 4; ++i) {
            const std::string s = regions[g] + " region variant " + std::to_string(i);
            fx.corpus.push_back(s);
            fx.aux.aux_embedding[s] = tilted_axis(dim, 4 + g, 12 + g, 0.03 * i);
            fx.aux.cluster_id[s] = 4 + g;
            fx.aux.health_status[s] = 0;
            fx.aux.cig_labels[s] = {"anat_lab_" + std::to_string(g)};
            fx.aux.radgraph_items[s] = {"oa" + std::to_string(g),
                                        "ma" + std::to_string(g) + "_" + std::to_string(i)};
            if (i > 0) fx.aux.anatomy_paraphrases[regions[g] + " region variant 0"].insert(s);
        }
    }
    return fx;
}

// hand-built three-sentence worlds for the validator fixtures
sampling::AuxSignals tiny_aux(const std::string& a, double deg_a, const std::string& p,
                              double deg_p, const std::string& n, double deg_n) {
    sampling::AuxSignals aux;
    auto emb = [](double deg) {
        const double rad = deg * 3.14159265358979323846 / 180.0;
        Eigen::VectorXd v(2);
        v << std::cos(rad), std::sin(rad);
        return v;
    };
    aux.aux_embedding[a] = emb(deg_a);
    aux.aux_embedding[p] = emb(deg_p);
    aux.aux_embedding[n] = emb(deg_n);
    return aux;
}

}  // namespace

TEST_CASE("edit distance matches DP oracle on random pairs") {
    Rng rng(2024);
    for (int t = 0; t < 1000; ++t) {
        const std::string x = random_string(rng, 20);
        const std::string y = random_string(rng, 20);
        CHECK(sampling::edit_distance(x, y) == oracle_distance(x, y));
    }
}

TEST_CASE("levsim values and properties") {
    CHECK(sampling::levsim("abc", "abc") == doctest::Approx(1.0));
    CHECK(sampling::levsim("kitten", "sitting") == doctest::Approx(1.0 - 3.0 / 7.0));
    CHECK(sampling::levsim("", "abc") == doctest::Approx(0.0));
    CHECK(sampling::levsim("", "") == doctest::Approx(1.0));
    Rng rng(7);
    for (int t = 0; t < 200; ++t) {
        const std::string x = random_string(rng, 20);
        const std::string y = random_string(rng, 20);
        const double xy = sampling::levsim(x, y);
        CHECK(xy == doctest::Approx(sampling::levsim(y, x)));
        CHECK(xy >= 0.0);
        CHECK(xy <= 1.0);
    }
}

TEST_CASE("jaccard values") {
    CHECK(sampling::jaccard({"x"}, {"x"}) == doctest::Approx(1.0));
    CHECK(sampling::jaccard({"a", "b"}, {"b", "c"}) == doctest::Approx(1.0 / 3.0));
    CHECK(sampling::jaccard({}, {}) == doctest::Approx(1.0));
    CHECK(sampling::jaccard({"a"}, {}) == doctest::Approx(0.0));
}

TEST_CASE("k-means recovers well separated blobs") {
    Rng rng(11);
    const int per_blob = 20;
    Eigen::MatrixXd pts(3 * per_blob, 2);
    const double cx[3] = {0.0, 10.0, 0.0};
    const double cy[3] = {0.0, 0.0, 10.0};
    for (int b = 0; b < 3; ++b) {
        for (int i = 0; i < per_blob; ++i) {
            pts(b * per_blob + i, 0) = cx[b] + 0.3 * rng.normal();
            pts(b * per_blob + i, 1) = cy[b] + 0.3 * rng.normal();
        }
    }
    const auto labels = sampling::cluster_sentences(pts, 3, 99);
    for (int b = 0; b < 3; ++b) {
        const int rep = labels[static_cast<std::size_t>(b * per_blob)];
        for (int i = 1; i < per_blob; ++i) {
            CHECK(labels[static_cast<std::size_t>(b * per_blob + i)] == rep);
        }
    }
    CHECK(labels[0] != labels[per_blob]);
    CHECK(labels[0] != labels[2 * per_blob]);
    CHECK(labels[per_blob] != labels[2 * per_blob]);

    const auto again = sampling::cluster_sentences(pts, 3, 99);
    CHECK(labels == again);
}

TEST_CASE("k-means edge cases") {
    Eigen::MatrixXd pts(3, 2);
    pts << 0, 0, 5, 0, 0, 5;
    const auto singletons = sampling::cluster_sentences(pts, 3, 1);
    CHECK(std::set<int>(singletons.begin(), singletons.end()).size() == 3);
    CHECK_THROWS_AS(sampling::cluster_sentences(pts, 4, 1), ContractError);
    CHECK_THROWS_AS(sampling::cluster_sentences(pts, 0, 1), ContractError);
}

TEST_CASE("validator rule 1: paraphrase membership and veto") {
    const std::string a = "cardiomegaly is present";
    const std::string p = "the heart is enlarged";
    const std::string n = "no pleural effusion";
    auto aux = tiny_aux(a, 0, p, 20, n, 70);
    aux.fact_paraphrases[a] = {p, "enlarged cardiac silhouette"};
    sampling::RuleConfig cfg;

    auto v = sampling::validate_triplet({a, p, n, 1, sampling::Rule1Kind::Observation}, aux, cfg);
    CHECK(v.ok);

    auto bad_p =
        sampling::validate_triplet({a, n, p, 1, sampling::Rule1Kind::Observation}, aux, cfg);
    CHECK_FALSE(bad_p.ok);
    CHECK(bad_p.reason == "positive not a paraphrase of anchor");

    aux.fact_paraphrases[a].insert(n);
    auto bad_n =
        sampling::validate_triplet({a, p, n, 1, sampling::Rule1Kind::Observation}, aux, cfg);
    CHECK_FALSE(bad_n.ok);
    CHECK(bad_n.reason == "negative is a paraphrase of anchor");
    aux.fact_paraphrases[a].erase(n);

    // embedding prefers the negative AND the negative is string-closer: veto
    const std::string near = "cardiomegaly is presen";
    auto aux2 = tiny_aux(a, 0, p, 20, near, 5);
    aux2.fact_paraphrases[a] = {p};
    auto veto =
        sampling::validate_triplet({a, p, near, 1, sampling::Rule1Kind::Observation}, aux2, cfg);
    CHECK_FALSE(veto.ok);
    CHECK(veto.reason == "veto: embedding and edit distance both prefer the negative");

    // one arm of the veto alone does not reject
    auto aux3 = tiny_aux(a, 0, p, 20, near, 40);
    aux3.fact_paraphrases[a] = {p};
    CHECK(sampling::validate_triplet({a, p, near, 1, sampling::Rule1Kind::Observation}, aux3, cfg)
              .ok);
}

TEST_CASE("validator rule 2: clusters, health status, margins") {
    const std::string a = "small left pleural effusion";
    const std::string p = "small left pleural effusions";
    const std::string n = "no pneumothorax identified";
    auto aux = tiny_aux(a, 0, p, 10, n, 80);
    aux.cluster_id = {{a, 0}, {p, 0}, {n, 1}};
    aux.health_status = {{a, 1}, {p, 1}, {n, 0}};
    sampling::RuleConfig cfg;

    CHECK(sampling::validate_triplet({a, p, n, 2, std::nullopt}, aux, cfg).ok);

    auto hs = aux;
    hs.health_status[p] = 0;
    auto v = sampling::validate_triplet({a, p, n, 2, std::nullopt}, hs, cfg);
    CHECK_FALSE(v.ok);
    CHECK(v.reason == "anchor-positive health status mismatch");

    auto cl = aux;
    cl.cluster_id[p] = 2;
    v = sampling::validate_triplet({a, p, n, 2, std::nullopt}, cl, cfg);
    CHECK_FALSE(v.ok);
    CHECK(v.reason == "anchor-positive cluster mismatch");

    auto cl2 = aux;
    cl2.cluster_id[n] = 0;
    v = sampling::validate_triplet({a, p, n, 2, std::nullopt}, cl2, cfg);
    CHECK_FALSE(v.ok);
    CHECK(v.reason == "positive-negative clusters equal");

    auto close_emb = tiny_aux(a, 0, p, 10, n, 12);
    close_emb.cluster_id = aux.cluster_id;
    close_emb.health_status = aux.health_status;
    v = sampling::validate_triplet({a, p, n, 2, std::nullopt}, close_emb, cfg);
    CHECK_FALSE(v.ok);
    CHECK(v.reason == "cosine margin not met");

    const std::string near_n = "small left pleural effusio";
    auto lev = tiny_aux(a, 0, p, 10, near_n, 80);
    lev.cluster_id = {{a, 0}, {p, 0}, {near_n, 1}};
    lev.health_status = {{a, 1}, {p, 1}, {near_n, 0}};
    v = sampling::validate_triplet({a, p, near_n, 2, std::nullopt}, lev, cfg);
    CHECK_FALSE(v.ok);
    CHECK(v.reason == "levsim margin not met");
}

TEST_CASE("validator rule 3: fact group membership") {
    const std::string a = "pleural effusion is seen";
    const std::string p = "there is a pleural effusion";
    const std::string n = "lungs are clear";
    auto aux = tiny_aux(a, 0, p, 15, n, 85);
    aux.paraphrase_sets["f1"] = {a, p, "effusion in the pleural space"};
    aux.cluster_id = {{a, 0}, {p, 0}, {n, 3}};
    sampling::RuleConfig cfg;

    CHECK(sampling::validate_triplet({a, p, n, 3, std::nullopt}, aux, cfg).ok);

    auto inside = aux;
    inside.paraphrase_sets["f1"].insert(n);
    auto v = sampling::validate_triplet({a, p, n, 3, std::nullopt}, inside, cfg);
    CHECK_FALSE(v.ok);
    CHECK(v.reason == "negative inside the fact group");

    auto nogroup = aux;
    nogroup.paraphrase_sets["f1"].erase(p);
    v = sampling::validate_triplet({a, p, n, 3, std::nullopt}, nogroup, cfg);
    CHECK_FALSE(v.ok);
    CHECK(v.reason == "anchor and positive share no fact group");

    auto same_cluster = aux;
    same_cluster.cluster_id[n] = 0;
    v = sampling::validate_triplet({a, p, n, 3, std::nullopt}, same_cluster, cfg);
    CHECK_FALSE(v.ok);
    CHECK(v.reason == "anchor-negative clusters equal");
}

TEST_CASE("validator rule 4: label overlap pattern") {
    const std::string a = "pulmonary edema is present";
    const std::string p = "pulmonary edema is evident";
    const std::string n = "pneumonia in the right lobe";
    auto aux = tiny_aux(a, 0, p, 15, n, 75);
    aux.cig_labels = {{a, {"edema"}}, {p, {"edema", "effusion"}}, {n, {"pneumonia"}}};
    sampling::RuleConfig cfg;

    CHECK(sampling::validate_triplet({a, p, n, 4, std::nullopt}, aux, cfg).ok);

    auto an = aux;
    an.cig_labels[n] = {"edema"};
    auto v = sampling::validate_triplet({a, p, n, 4, std::nullopt}, an, cfg);
    CHECK_FALSE(v.ok);
    CHECK(v.reason == "anchor-negative label overlap");

    auto pn = aux;
    pn.cig_labels[n] = {"effusion"};
    v = sampling::validate_triplet({a, p, n, 4, std::nullopt}, pn, cfg);
    CHECK_FALSE(v.ok);
    CHECK(v.reason == "positive-negative label overlap");

    auto ap = aux;
    ap.cig_labels[p] = {"pneumothorax"};
    v = sampling::validate_triplet({a, p, n, 4, std::nullopt}, ap, cfg);
    CHECK_FALSE(v.ok);
    CHECK(v.reason == "anchor-positive label overlap empty");

    auto consensus = tiny_aux(a, 0, p, 15, n, 5);
    consensus.cig_labels = aux.cig_labels;
    v = sampling::validate_triplet({a, p, n, 4, std::nullopt}, consensus, cfg);
    CHECK_FALSE(v.ok);
    CHECK(v.reason == "embedding/levsim consensus failed");
}

TEST_CASE("validator rule 5: radgraph jaccard margin") {
    const std::string a = "small effusion at the left base";
    const std::string p = "small effusion layering on the left";
    const std::string n = "no pneumothorax";
    auto aux = tiny_aux(a, 0, p, 10, n, 80);
    aux.cluster_id = {{a, 2}, {p, 2}, {n, 5}};
    aux.radgraph_items = {{a, {"obs:effusion", "anat:pleural"}},
                          {p, {"obs:effusion", "anat:pleural", "mod:small"}},
                          {n, {"obs:pneumothorax"}}};
    sampling::RuleConfig cfg;

    CHECK(sampling::validate_triplet({a, p, n, 5, std::nullopt}, aux, cfg).ok);

    auto rg = aux;
    rg.radgraph_items[n] = {"obs:effusion", "anat:pleural"};
    auto v = sampling::validate_triplet({a, p, n, 5, std::nullopt}, rg, cfg);
    CHECK_FALSE(v.ok);
    CHECK(v.reason == "radgraph jaccard margin not met");

    auto cl = aux;
    cl.cluster_id[p] = 3;
    v = sampling::validate_triplet({a, p, n, 5, std::nullopt}, cl, cfg);
    CHECK_FALSE(v.ok);
    CHECK(v.reason == "anchor-positive cluster mismatch");

    auto cl2 = aux;
    cl2.cluster_id[n] = 2;
    v = sampling::validate_triplet({a, p, n, 5, std::nullopt}, cl2, cfg);
    CHECK_FALSE(v.ok);
    CHECK(v.reason == "anchor-negative clusters equal");
}

TEST_CASE("validator rule 6 and distinctness") {
    sampling::AuxSignals aux;
    sampling::RuleConfig cfg;
    CHECK(sampling::validate_triplet({"a", "b", "c", 6, std::nullopt}, aux, cfg).ok);
    auto v = sampling::validate_triplet({"a", "b", "a", 6, std::nullopt}, aux, cfg);
    CHECK_FALSE(v.ok);
    CHECK(v.reason == "texts not pairwise distinct");
    v = sampling::validate_triplet({"a", "a", "c", 1, std::nullopt}, aux, cfg);
    CHECK_FALSE(v.ok);
}

TEST_CASE("validator reports missing signals by name") {
    const std::string a = "x one", p = "x two", n = "y three";
    auto aux = tiny_aux(a, 0, p, 10, n, 80);
    aux.cluster_id = {{a, 0}, {p, 0}, {n, 1}};
    aux.health_status = {{a, 1}, {n, 0}};  // p missing
    sampling::RuleConfig cfg;
    CHECK_THROWS_WITH_AS(sampling::validate_triplet({a, p, n, 2, std::nullopt}, aux, cfg),
                         doctest::Contains("health_status"), ContractError);
}

TEST_CASE("sampler output validates for every rule") {
    const Fixture fx = make_fixture();
    sampling::RuleConfig cfg;
    for (int rule = 1; rule <= 5; ++rule) {
        CAPTURE(rule);
        const auto triplets = sampling::sample_triplets(rule, fx.corpus, fx.aux, cfg, 200, 42);
        CHECK(triplets.size() == 200);
        std::set<std::tuple<std::string, std::string, std::string>> seen;
        for (const auto& t : triplets) {
            CHECK(t.rule_id == rule);
            const auto v = sampling::validate_triplet(t, fx.aux, cfg);
            CAPTURE(t.anchor);
            CAPTURE(t.positive);
            CAPTURE(t.negative);
            CAPTURE(v.reason);
            CHECK(v.ok);
            CHECK(seen.insert({t.anchor, t.positive, t.negative}).second);
        }
    }
}

TEST_CASE("sampler determinism") {
    const Fixture fx = make_fixture();
    sampling::RuleConfig cfg;
    for (int rule = 1; rule <= 5; ++rule) {
        const auto a = sampling::sample_triplets(rule, fx.corpus, fx.aux, cfg, 50, 9);
        const auto b = sampling::sample_triplets(rule, fx.corpus, fx.aux, cfg, 50, 9);
        CHECK(a == b);
        const auto c = sampling::sample_triplets(rule, fx.corpus, fx.aux, cfg, 50, 10);
        CHECK(a != c);
    }
}

TEST_CASE("sampler edge cases") {
    const Fixture fx = make_fixture();
    sampling::RuleConfig cfg;
    CHECK(sampling::sample_triplets(1, fx.corpus, fx.aux, cfg, 0, 1).empty());
    CHECK_THROWS_AS(sampling::sample_triplets(7, fx.corpus, fx.aux, cfg, 5, 1), UsageError);
    CHECK_THROWS_AS(sampling::sample_triplets(6, fx.corpus, fx.aux, cfg, 5, 1), UsageError);

    // all sentences share one cluster: rule 2 has no valid negative
    auto stuck = fx.aux;
    for (auto& [k, v] : stuck.cluster_id) v = 0;
    CHECK(sampling::sample_triplets(2, fx.corpus, stuck, cfg, 10, 3).empty());
}

TEST_CASE("rule 6 consumes a hard-triplet source") {
    const Fixture fx = make_fixture();
    sampling::RuleConfig cfg;
    std::vector<sampling::Triplet> hard;
    for (int i = 0; i < 10; ++i) {
        hard.push_back({"anchor " + std::to_string(i), "pos " + std::to_string(i),
                        "neg " + std::to_string(i), 6, std::nullopt});
    }
    hard.push_back({"same", "same", "other", 6, std::nullopt});  // degenerate, skipped
    const auto out = sampling::sample_triplets(6, fx.corpus, fx.aux, cfg, 50, 1, &hard);
    CHECK(out.size() == 10);
    for (const auto& t : out) CHECK(sampling::validate_triplet(t, fx.aux, cfg).ok);

    const auto capped = sampling::sample_triplets(6, fx.corpus, fx.aux, cfg, 4, 1, &hard);
    CHECK(capped.size() == 4);
}

TEST_CASE("aux signals round-trip through a bundle directory") {
    const Fixture fx = make_fixture();
    const auto dir = std::filesystem::temp_directory_path() / "fl_aux_bundle";
    std::filesystem::remove_all(dir);
    fx.aux.save(dir);
    const auto loaded = sampling::AuxSignals::load(dir);

    CHECK(loaded.cluster_id == fx.aux.cluster_id);
    CHECK(loaded.health_status == fx.aux.health_status);
    CHECK(loaded.cig_labels == fx.aux.cig_labels);
    CHECK(loaded.radgraph_items == fx.aux.radgraph_items);
    CHECK(loaded.fact_paraphrases == fx.aux.fact_paraphrases);
    CHECK(loaded.anatomy_paraphrases == fx.aux.anatomy_paraphrases);
    CHECK(loaded.paraphrase_sets == fx.aux.paraphrase_sets);
    REQUIRE(loaded.aux_embedding.size() == fx.aux.aux_embedding.size());
    for (const auto& [text, vec] : fx.aux.aux_embedding) {
        REQUIRE(loaded.aux_embedding.count(text) == 1);
        // cache stores float32, so compare with a float tolerance
        CHECK((loaded.aux_embedding.at(text) - vec).cwiseAbs().maxCoeff() < 1e-6);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("triplet jsonl round-trip") {
    const Fixture fx = make_fixture();
    sampling::RuleConfig cfg;
    auto triplets = sampling::sample_triplets(1, fx.corpus, fx.aux, cfg, 20, 5);
    const auto path = std::filesystem::temp_directory_path() / "fl_triplets.jsonl";
    sampling::save_triplets(path, triplets);
    const auto loaded = sampling::load_triplets(path);
    CHECK(loaded == triplets);
    std::filesystem::remove(path);
}
