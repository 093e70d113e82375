#include "factline/extraction.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>

#include <doctest.h>

#include "factline/cache.hpp"
#include "factline/common.hpp"
#include "factline/io.hpp"
#include "factline/llm.hpp"
#include "factline/text.hpp"

using namespace factline;
using extraction::extract_corpus;
using extraction::extract_facts;
using extraction::ExtractionPair;
using extraction::ExtractorKind;
using extraction::Fact;

namespace {

corpus::Sentence sent(const std::string& text, int index = 0) {
    return {"r1", corpus::SectionKind::Findings, index, text};
}

std::vector<std::string> fact_texts(const std::vector<Fact>& facts) {
    std::vector<std::string> out;
    for (const auto& f : facts) out.push_back(f.text);
    return out;
}

extraction::RuleBasedExtractor keyword_extractor() {
    return extraction::RuleBasedExtractor(
        {"opacity", "density", "effusion", "pneumothorax", "consolidation", "nodule"});
}

class FakeExtractor final : public extraction::Extractor {
  public:
    FakeExtractor(std::vector<std::string> raw, ExtractorKind kind)
        : raw_(std::move(raw)), kind_(kind) {}
    std::vector<std::string> extract(const std::string&) const override { return raw_; }
    ExtractorKind kind() const override { return kind_; }

  private:
    std::vector<std::string> raw_;
    ExtractorKind kind_;
};

class StubTransport final : public llm::Transport {
  public:
    explicit StubTransport(std::function<std::string(const std::string&)> fn)
        : fn_(std::move(fn)) {}

    std::string complete(const std::string&, const std::string& prompt) override {
        ++calls;
        return fn_(prompt);
    }

    int calls = 0;

  private:
    std::function<std::string(const std::string&)> fn_;
};

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("factline_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

const std::filesystem::path kPrompts = std::filesystem::path(FACTLINE_DATA_DIR) / "prompts";

llm::PromptTemplate tiny_template() { return {"fact_extraction_tiny", "Extract.\n\n{input}\n"}; }

std::shared_ptr<llm::Client> stub_client(std::shared_ptr<StubTransport> transport,
                                         const std::filesystem::path& cache_dir = {}) {
    llm::ClientConfig cfg;
    cfg.model = "teacher-test";
    cfg.max_retries = 0;
    cfg.retry_delay_ms = 0;
    cfg.cache_dir = cache_dir;
    return std::make_shared<llm::Client>(std::move(transport), cfg);
}

}  // namespace

TEST_CASE("rule-based extractor splits keyword conjunctions and distributes cues") {
    const auto ex = keyword_extractor();

    auto facts = [&](const std::string& s) { return fact_texts(extract_facts(sent(s), ex)); };

    CHECK(facts("Opacity and density in the right lobe") ==
          std::vector<std::string>{"opacity", "density in the right lobe"});
    CHECK(facts("no effusion, pneumothorax, and consolidation") ==
          std::vector<std::string>{"no effusion", "no pneumothorax", "no consolidation"});
    CHECK(facts("without effusion and pneumothorax") ==
          std::vector<std::string>{"without effusion", "without pneumothorax"});
    CHECK(facts("negative for effusion and free of pneumothorax") ==
          std::vector<std::string>{"negative for effusion", "free of pneumothorax"});

    // a side without an observation keyword blocks the split
    CHECK(facts("opacity and stable appearance") ==
          std::vector<std::string>{"opacity and stable appearance"});
    CHECK(facts("clear lungs, normal heart") ==
          std::vector<std::string>{"clear lungs, normal heart"});

    // separators inside brackets are not top-level
    CHECK(facts("effusion (small, layering) and pneumothorax") ==
          std::vector<std::string>{"effusion (small, layering)", "pneumothorax"});

    CHECK(facts("Pleural effusion.") == std::vector<std::string>{"pleural effusion"});
    CHECK(facts("NO Effusion And Pneumothorax") ==
          std::vector<std::string>{"no effusion", "no pneumothorax"});
    CHECK(facts("") == std::vector<std::string>{});
    CHECK(facts("   ") == std::vector<std::string>{});

    // pure function: reruns are identical
    for (int i = 0; i < 3; ++i) {
        CHECK(facts("no effusion, pneumothorax, and consolidation") ==
              std::vector<std::string>{"no effusion", "no pneumothorax", "no consolidation"});
    }

    CHECK_THROWS_AS(extraction::RuleBasedExtractor(std::vector<std::string>{}), UsageError);
}

TEST_CASE("rule-based extractor ships with the keyword lexicon file") {
    const auto ex = extraction::RuleBasedExtractor::load(
        std::filesystem::path(FACTLINE_DATA_DIR) / "observation_keywords.txt");
    const auto facts = fact_texts(extract_facts(sent("No effusion and pneumothorax."), ex));
    CHECK(facts == std::vector<std::string>{"no effusion", "no pneumothorax"});
}

TEST_CASE("extract_facts cleans, dedups and stamps provenance") {
    const corpus::Sentence s = sent("ignored", 3);
    const FakeExtractor fake({" effusion .", "effusion", "worsening edema. stable lines", "",
                              "1.5 cm nodule.", "effusion"},
                             ExtractorKind::Student);
    const auto facts = extract_facts(s, fake);
    CHECK(fact_texts(facts) == std::vector<std::string>{"effusion",
                                                        "worsening edema stable lines",
                                                        "1.5 cm nodule"});
    for (const auto& f : facts) {
        CHECK(f.sentence_id == "r1#findings#3");
        CHECK(f.extractor == ExtractorKind::Student);
        CHECK(f.text.find(". ") == std::string::npos);
        CHECK_FALSE(f.text.empty());
        CHECK_FALSE(f.text.back() == '.');
    }
}

TEST_CASE("extractor kind names round trip") {
    for (const auto k : {ExtractorKind::RuleBased, ExtractorKind::Student, ExtractorKind::Llm}) {
        CHECK(extraction::extractor_kind_from_name(extraction::extractor_kind_name(k)) == k);
    }
    CHECK_THROWS_AS(extraction::extractor_kind_from_name("teacher"), ParseError);
}

TEST_CASE("inverse token frequency ranking matches the hand count") {
    const std::vector<corpus::Sentence> corpus = {sent("a b", 0), sent("a c", 1), sent("a", 2)};
    const auto ranked = extraction::rank_by_inverse_token_frequency(corpus);
    REQUIRE(ranked.size() == 3);
    CHECK(ranked[0].sentence.text == "a b");
    CHECK(ranked[1].sentence.text == "a c");
    CHECK(ranked[2].sentence.text == "a");
    CHECK(ranked[0].score == doctest::Approx(1.0 / 3.0 + 1.0));
    CHECK(ranked[1].score == doctest::Approx(1.0 / 3.0 + 1.0));
    CHECK(ranked[2].score == doctest::Approx(1.0 / 3.0));

    const auto single = extraction::rank_by_inverse_token_frequency({sent("only one", 0)});
    REQUIRE(single.size() == 1);
    CHECK(single[0].score == doctest::Approx(2.0));

    // identical sentences tie; lexicographic order is a no-op, input order kept
    const auto same = extraction::rank_by_inverse_token_frequency(
        {sent("x y", 0), sent("x y", 1), sent("x y", 2)});
    for (std::size_t i = 0; i < same.size(); ++i) {
        CHECK(same[i].sentence.index == static_cast<int>(i));
        CHECK(same[i].score == doctest::Approx(1.0 / 3.0 + 1.0 / 3.0));
    }

    CHECK(extraction::rank_by_inverse_token_frequency({}).empty());

    // lexicographic tie-break on distinct texts with equal scores
    const auto tied = extraction::rank_by_inverse_token_frequency(
        {sent("z q", 0), sent("b q", 1)});  // z and b both unique, q shared
    CHECK(tied[0].sentence.text == "b q");
    CHECK(tied[1].sentence.text == "z q");
}

TEST_CASE("distillation subset takes the hardest sentences per cluster") {
    // two separable clusters; unique tokens make difficulty = token count
    const std::vector<corpus::Sentence> corpus = {
        sent("u1 u2 u3", 0), sent("u4 u5", 1), sent("u6", 2),
        sent("v1 v2 v3", 3), sent("v4 v5", 4), sent("v6", 5),
    };
    Eigen::MatrixXd emb(6, 2);
    emb << 0.0, 0.1, 0.1, 0.0, 0.05, 0.05, 10.0, 10.1, 10.1, 10.0, 10.05, 10.05;

    const auto picked = extraction::build_distillation_subset(corpus, emb, 2, 4, 7);
    REQUIRE(picked.size() == 4);
    std::set<std::string> texts;
    for (const auto& s : picked) texts.insert(s.text);
    CHECK(texts == std::set<std::string>{"u1 u2 u3", "u4 u5", "v1 v2 v3", "v4 v5"});
    // round-robin: the first two picks are the two cluster maxima
    std::set<std::string> first_two = {picked[0].text, picked[1].text};
    CHECK(first_two == std::set<std::string>{"u1 u2 u3", "v1 v2 v3"});

    SUBCASE("budget at least corpus size returns everything") {
        const auto all = extraction::build_distillation_subset(corpus, emb, 2, 10, 7);
        CHECK(all.size() == 6);
    }
    SUBCASE("one cluster reduces to global ranking") {
        const auto top = extraction::build_distillation_subset(corpus, emb, 1, 3, 7);
        REQUIRE(top.size() == 3);
        CHECK(top[0].text == "u1 u2 u3");  // score tie with v1 v2 v3, lexicographic
        CHECK(top[1].text == "v1 v2 v3");
        CHECK(top[2].text == "u4 u5");
    }
    SUBCASE("cluster contribution floor holds") {
        const auto five = extraction::build_distillation_subset(corpus, emb, 2, 5, 7);
        CHECK(five.size() == 5);
        // both clusters have 3 >= ceil(5/2) members, so each contributes >= 2
        int left = 0;
        for (const auto& s : five) left += s.text[0] == 'u' ? 1 : 0;
        CHECK(left >= 2);
        CHECK(static_cast<int>(five.size()) - left >= 2);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(extraction::build_distillation_subset(corpus, emb, 7, 4, 7), UsageError);
        CHECK_THROWS_AS(extraction::build_distillation_subset(corpus, emb, 0, 4, 7), UsageError);
        CHECK_THROWS_AS(extraction::build_distillation_subset(corpus, emb, 2, 0, 7), UsageError);
        Eigen::MatrixXd bad(3, 2);
        bad.setZero();
        CHECK_THROWS_AS(extraction::build_distillation_subset(corpus, bad, 2, 4, 7),
                        ContractError);
    }
}

TEST_CASE("student target serialization round trips") {
    CHECK(extraction::serialize_student_target({}) == "NONE");
    CHECK(extraction::serialize_student_target({"a b", "c"}) == "a b ; c");
    CHECK(extraction::parse_student_target("NONE").empty());
    CHECK(extraction::parse_student_target("none").empty());
    CHECK(extraction::parse_student_target("").empty());
    CHECK(extraction::parse_student_target("a b ; c") == std::vector<std::string>{"a b", "c"});

    // the decoder emits space-joined tokens; the delimiter survives that path
    const auto tokens = text::word_tokens(extraction::serialize_student_target({"no edema", "x"}));
    CHECK(extraction::parse_student_target(text::join(tokens, " ")) ==
          std::vector<std::string>{"no edema", "x"});
}

namespace {

struct GrammarSample {
    std::string sentence;
    std::vector<std::string> facts;
};

// closed report grammar: the student has to learn fact splitting, negation
// distribution and the NONE case from examples alone
std::vector<GrammarSample> grammar_samples(int count, std::uint64_t seed) {
    static const std::vector<std::string> obs = {
        "opacity", "effusion",     "pneumothorax", "consolidation", "atelectasis", "edema",
        "nodule",  "cardiomegaly", "mass",         "fracture",      "granuloma",   "scarring"};
    static const std::vector<std::string> loc = {"right lung", "left lung",  "right base",
                                                 "left base",  "upper lobe", "lower lobe",
                                                 "right apex", "left apex"};
    Rng rng(seed);
    std::set<std::string> seen;
    std::vector<GrammarSample> out;
    while (static_cast<int>(out.size()) < count) {
        const int pattern = static_cast<int>(rng.below(10));
        GrammarSample g;
        const std::string& o1 = obs[rng.index(obs.size())];
        const std::string& l1 = loc[rng.index(loc.size())];
        if (pattern < 2) {
            g.sentence = o1 + " in the " + l1;
            g.facts = {g.sentence};
        } else if (pattern < 6) {
            std::string o2 = obs[rng.index(obs.size())];
            while (o2 == o1) o2 = obs[rng.index(obs.size())];
            g.sentence = o1 + " and " + o2 + " in the " + l1;
            g.facts = {o1 + " in the " + l1, o2 + " in the " + l1};
        } else if (pattern < 8) {
            g.sentence = "no " + o1 + " in the " + l1;
            g.facts = {g.sentence};
        } else if (pattern < 9) {
            std::string o2 = obs[rng.index(obs.size())];
            while (o2 == o1) o2 = obs[rng.index(obs.size())];
            g.sentence = "no " + o1 + " or " + o2;
            g.facts = {"no " + o1, "no " + o2};
        } else {
            g.sentence = "the " + l1 + " is clear";
            g.facts = {};
        }
        if (seen.insert(g.sentence).second) out.push_back(std::move(g));
    }
    return out;
}

std::vector<ExtractionPair> to_pairs(const std::vector<GrammarSample>& samples) {
    std::vector<ExtractionPair> out;
    for (const auto& g : samples) out.push_back({g.sentence, g.facts});
    return out;
}

}  // namespace

TEST_CASE("student memorizes a toy pair set and round trips through disk") {
    const auto samples = grammar_samples(12, 3);
    auto pairs = to_pairs(samples);
    pairs.push_back({"the right lung is clear", {}});

    extraction::StudentConfig cfg;
    cfg.epochs = 120;
    cfg.batch_size = 4;
    cfg.seed = 5;
    const auto student = extraction::StudentExtractor::train(pairs, cfg);
    CHECK(extraction::exact_match_accuracy(student, pairs) == doctest::Approx(1.0));
    CHECK(student.kind() == ExtractorKind::Student);

    const auto dir = fresh_dir("student");
    student.save(dir / "student.bin");
    const auto reloaded = extraction::StudentExtractor::load(dir / "student.bin");
    for (const auto& p : pairs) {
        CHECK(reloaded.extract(p.sentence_text) == student.extract(p.sentence_text));
    }

    CHECK_THROWS_AS(extraction::StudentExtractor().extract("anything"), UsageError);
    CHECK_THROWS_AS(extraction::StudentExtractor::train({}, cfg), InputError);
    extraction::StudentConfig bad = cfg;
    bad.epochs = 0;
    CHECK_THROWS_AS(extraction::StudentExtractor::train(pairs, bad), ConfigError);
}

TEST_CASE("student generalizes on the fixture grammar" * doctest::timeout(800)) {
    const auto samples = grammar_samples(500, 11);
    const auto pairs = to_pairs(samples);
    const std::vector<ExtractionPair> train(pairs.begin(), pairs.end() - 50);
    const std::vector<ExtractionPair> holdout(pairs.end() - 50, pairs.end());

    extraction::StudentConfig cfg;
    cfg.seed = 11;
    const auto student = extraction::StudentExtractor::train(train, cfg);
    const double acc = extraction::exact_match_accuracy(student, holdout);
    MESSAGE("holdout exact match: ", acc);
    CHECK(acc >= 0.90);
}

TEST_CASE("prompt templates render placeholders and keep JSON braces") {
    const auto tmpl = llm::PromptTemplate::load(kPrompts / "fact_extraction.txt");
    CHECK(tmpl.id() == "fact_extraction");
    const std::string rendered = tmpl.render({{"input", "Opacity and density in the right lobe"}});
    CHECK(rendered.find("JSON list") != std::string::npos);
    CHECK(rendered.find("Opacity and density in the right lobe") != std::string::npos);
    CHECK(rendered.find("{input}") == std::string::npos);

    CHECK_THROWS_AS(tmpl.render({}), UsageError);
    CHECK_THROWS_AS(tmpl.render({{"input", "x"}, {"extra", "y"}}), UsageError);

    // JSON object examples in prompt bodies survive rendering untouched
    const auto meta = llm::PromptTemplate::load(kPrompts / "fact_to_metadata.txt");
    const std::string mr = meta.render({{"input", "small right pleural effusion"}});
    CHECK(mr.find("\"anatomical location\"") != std::string::npos);
    CHECK(mr.find('{') != std::string::npos);

    const auto nli = llm::PromptTemplate::load(kPrompts / "nli_label_simple.txt");
    const std::string nr = nli.render({{"premise", "p text"}, {"hypothesis", "h text"}});
    CHECK(nr.find("premise: p text") != std::string::npos);
    CHECK(nr.find("hypothesis: h text") != std::string::npos);
}

TEST_CASE("prompt library ships every teacher template") {
    const auto lib = llm::PromptLibrary::load_dir(kPrompts);
    const std::vector<std::string> expected = {
        "anatomy_to_paraphrases", "example_to_similar",  "fact_extraction",
        "fact_to_anatomy",        "fact_to_comparison",  "fact_to_metadata",
        "fact_to_observations",   "fact_to_paraphrases", "hard_triplets",
        "nli_label_reasoned",     "nli_label_simple",    "premise_to_contradictions",
        "premise_to_ecn"};
    CHECK(lib.ids() == expected);
    for (const auto& id : expected) CHECK(lib.has(id));
    CHECK_THROWS_WITH_AS(lib.get("nope"),
                         doctest::Contains("unknown prompt template"), UsageError);
}

TEST_CASE("disk cache round trips, stays immutable and survives corruption") {
    const auto dir = fresh_dir("cache");
    const pipeline::DiskCache cache(dir);

    // binary-safe round trip
    std::string blob(1 << 20, '\0');
    Rng rng(9);
    for (auto& c : blob) c = static_cast<char>(rng.below(256));
    blob[100] = '\n';
    const std::string key = pipeline::DiskCache::key_of({"op", "tmpl", "model", "input"});
    CHECK_FALSE(cache.get(key).has_value());
    cache.put(key, blob);
    REQUIRE(cache.get(key).has_value());
    CHECK(*cache.get(key) == blob);

    // first write wins
    cache.put(key, "other");
    CHECK(*cache.get(key) == blob);

    // field boundaries are part of the key
    CHECK(pipeline::DiskCache::key_of({"ab", "c"}) != pipeline::DiskCache::key_of({"a", "bc"}));

    SUBCASE("truncated entry reads as a miss and heals on the next put") {
        const auto path = cache.entry_path(key);
        std::filesystem::resize_file(path, 40);
        CHECK_FALSE(cache.get(key).has_value());
        cache.put(key, "healed");
        REQUIRE(cache.get(key).has_value());
        CHECK(*cache.get(key) == "healed");
    }
    SUBCASE("garbage entry reads as a miss") {
        std::ofstream(cache.entry_path(key), std::ios::binary) << "not a cache entry";
        CHECK_FALSE(cache.get(key).has_value());
    }
    SUBCASE("flipped payload byte reads as a miss") {
        const auto path = cache.entry_path(key);
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(-1, std::ios::end);
        f.put('x');
        f.close();
        CHECK_FALSE(cache.get(key).has_value());
    }
}

TEST_CASE("llm client caches replies and retries failures") {
    const auto dir = fresh_dir("llm_cache");
    const auto tmpl = tiny_template();

    SUBCASE("warm cache performs zero network calls") {
        auto t1 = std::make_shared<StubTransport>([](const std::string&) { return "[\"a\"]"; });
        auto c1 = stub_client(t1, dir);
        CHECK(c1->complete("extract_facts", tmpl, {{"input", "s1"}}) == "[\"a\"]");
        CHECK(c1->complete("extract_facts", tmpl, {{"input", "s1"}}) == "[\"a\"]");
        CHECK(t1->calls == 1);

        auto t2 = std::make_shared<StubTransport>(
            [](const std::string&) -> std::string { throw InputError("network used"); });
        auto c2 = stub_client(t2, dir);
        CHECK(c2->complete("extract_facts", tmpl, {{"input", "s1"}}) == "[\"a\"]");
        CHECK(t2->calls == 0);

        // any key component change misses the cache
        CHECK_THROWS_AS(c2->complete("extract_facts", tmpl, {{"input", "s2"}}), InputError);
        CHECK_THROWS_AS(c2->complete("other_op", tmpl, {{"input", "s1"}}), InputError);
    }

    SUBCASE("transient failures are retried") {
        int failures = 2;
        auto t = std::make_shared<StubTransport>([&](const std::string&) -> std::string {
            if (failures-- > 0) throw InputError("flaky");
            return "ok";
        });
        llm::ClientConfig cfg;
        cfg.model = "m";
        cfg.max_retries = 2;
        cfg.retry_delay_ms = 0;
        llm::Client client(t, cfg);
        CHECK(client.complete("op", tmpl, {{"input", "x"}}) == "ok");
        CHECK(t->calls == 3);
    }

    SUBCASE("exhausted retries surface a retryable error") {
        auto t = std::make_shared<StubTransport>(
            [](const std::string&) -> std::string { throw InputError("down"); });
        llm::ClientConfig cfg;
        cfg.model = "m";
        cfg.max_retries = 1;
        cfg.retry_delay_ms = 0;
        llm::Client client(t, cfg);
        CHECK_THROWS_WITH_AS(client.complete("op", tmpl, {{"input", "x"}}),
                             doctest::Contains("after 2 attempts"), InputError);
        CHECK(t->calls == 2);
    }

    SUBCASE("corrupted cache entries are refetched") {
        auto t = std::make_shared<StubTransport>([](const std::string&) { return "fresh"; });
        auto client = stub_client(t, dir / "heal");
        CHECK(client->complete("op", tmpl, {{"input", "x"}}) == "fresh");
        CHECK(t->calls == 1);
        for (const auto& entry : std::filesystem::directory_iterator(dir / "heal")) {
            std::filesystem::resize_file(entry.path(), 3);
        }
        CHECK(client->complete("op", tmpl, {{"input", "x"}}) == "fresh");
        CHECK(t->calls == 2);
    }
}

TEST_CASE("llm extractor parses replies with one fence-stripping repair") {
    const auto tmpl = tiny_template();

    SUBCASE("published examples round trip through a recorded transport") {
        auto t = std::make_shared<StubTransport>([](const std::string& prompt) -> std::string {
            if (prompt.find("Opacity and density") != std::string::npos) {
                return R"(["opacity in the right lobe", "density in the right lobe"])";
            }
            return R"(["no CHF identified", "no focal infiltrate identified",
                        "no gross effusion identified"])";
        });
        const extraction::LlmExtractor ex(stub_client(t), tmpl);
        CHECK(fact_texts(extract_facts(sent("Opacity and density in the right lobe"), ex)) ==
              std::vector<std::string>{"opacity in the right lobe", "density in the right lobe"});
        CHECK(fact_texts(extract_facts(
                  sent("NO chf, focal inifiltrate, or gross effusionis identified"), ex)) ==
              std::vector<std::string>{"no CHF identified", "no focal infiltrate identified",
                                       "no gross effusion identified"});
    }

    SUBCASE("code fences are stripped as the single repair") {
        auto t = std::make_shared<StubTransport>(
            [](const std::string&) { return "```json\n[\"edema\"]\n```"; });
        const extraction::LlmExtractor ex(stub_client(t), tmpl);
        CHECK(fact_texts(extract_facts(sent("edema"), ex)) == std::vector<std::string>{"edema"});
    }

    SUBCASE("empty array means no facts") {
        auto t = std::make_shared<StubTransport>([](const std::string&) { return "[]"; });
        const extraction::LlmExtractor ex(stub_client(t), tmpl);
        CHECK(extract_facts(sent("Clear."), ex).empty());
    }

    SUBCASE("unparseable replies mark the sentence unextracted") {
        auto t = std::make_shared<StubTransport>([](const std::string& prompt) -> std::string {
            if (prompt.find("good sentence") != std::string::npos) return R"(["kept fact"])";
            if (prompt.find("number list") != std::string::npos) return "[1, 2]";
            return "I could not find any facts.";
        });
        const extraction::LlmExtractor ex(stub_client(t), tmpl);
        CHECK_THROWS_AS(ex.extract("prose reply"), ParseError);

        const std::vector<corpus::Sentence> sentences = {
            sent("good sentence", 0), sent("number list", 1), sent("prose reply", 2)};
        const auto run = extract_corpus(sentences, ex);
        CHECK(fact_texts(run.facts) == std::vector<std::string>{"kept fact"});
        CHECK(run.unextracted ==
              std::vector<std::string>{"r1#findings#1", "r1#findings#2"});
    }

    SUBCASE("transport failures also mark the sentence unextracted") {
        auto t = std::make_shared<StubTransport>(
            [](const std::string&) -> std::string { throw InputError("endpoint down"); });
        const extraction::LlmExtractor ex(stub_client(t), tmpl);
        const auto run = extract_corpus({sent("anything", 0)}, ex);
        CHECK(run.facts.empty());
        CHECK(run.unextracted == std::vector<std::string>{"r1#findings#0"});
    }

    SUBCASE("duplicate and dirty replies are cleaned like any extractor output") {
        auto t = std::make_shared<StubTransport>(
            [](const std::string&) { return R"(["effusion.", "effusion", " effusion "])"; });
        const extraction::LlmExtractor ex(stub_client(t), tmpl);
        CHECK(fact_texts(extract_facts(sent("x"), ex)) == std::vector<std::string>{"effusion"});
    }
}

TEST_CASE("rule-based errors propagate out of extract_corpus") {
    // a non-llm extractor must not have its failures swallowed
    class Broken final : public extraction::Extractor {
      public:
        std::vector<std::string> extract(const std::string&) const override {
            throw InputError("bad input");
        }
        ExtractorKind kind() const override { return ExtractorKind::RuleBased; }
    };
    CHECK_THROWS_AS(extract_corpus({sent("x", 0)}, Broken{}), InputError);
}

TEST_CASE("fact store round trips through jsonl") {
    const auto dir = fresh_dir("facts");
    const std::vector<Fact> facts = {
        {"no effusion", "r1#findings#0", ExtractorKind::RuleBased},
        {"opacity in the right lobe", "r1#findings#1", ExtractorKind::Llm},
        {"edema", "r2#impression#0", ExtractorKind::Student},
    };
    const auto path = dir / "facts.jsonl";
    extraction::save_facts(path, facts);

    const auto records = io::read_jsonl(path);
    REQUIRE(records.size() == 3);
    for (const auto& r : records) {
        CHECK(r.contains("sentence_id"));
        CHECK(r.contains("fact"));
        CHECK(r.contains("extractor"));
    }
    CHECK(records[0].at("extractor") == "rule_based");

    CHECK(extraction::load_facts(path) == facts);
}
