#pragma once

// Fact extraction: three interchangeable extractors (deterministic rules, a
// trained student sequence model, a remote LLM) plus the distillation
// workflow that decides which sentences the expensive teacher annotates.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "factline/corpus.hpp"
#include "factline/llm.hpp"

namespace factline::extraction {

enum class ExtractorKind { RuleBased, Student, Llm };

std::string extractor_kind_name(ExtractorKind k);
ExtractorKind extractor_kind_from_name(std::string_view name);  // unknown -> ParseError

struct Fact {
    std::string text;  // one observation, no internal sentence terminator
    std::string sentence_id;
    ExtractorKind extractor = ExtractorKind::RuleBased;
    bool operator==(const Fact&) const = default;
};

// teacher output for one sentence; the student's training data
struct ExtractionPair {
    std::string sentence_text;
    std::vector<std::string> facts;  // may be empty
};

class Extractor {
  public:
    virtual ~Extractor() = default;
    // raw fact texts for one sentence, before the shared cleanup
    virtual std::vector<std::string> extract(const std::string& sentence) const = 0;
    virtual ExtractorKind kind() const = 0;
};

// Shared cleanup and Fact assembly: trims, strips terminators, drops empties
// and duplicates (first occurrence wins).
std::vector<Fact> extract_facts(const corpus::Sentence& sentence, const Extractor& extractor);

struct ExtractionRun {
    std::vector<Fact> facts;
    std::vector<std::string> unextracted;  // sentence ids the llm failed on
};

// LLM transport/parse failures are recorded per sentence instead of aborting
// the run; other extractors propagate their errors.
ExtractionRun extract_corpus(const std::vector<corpus::Sentence>& sentences,
                             const Extractor& extractor);

// Splits on top-level ", " and " and " when every side carries an observation
// keyword, distributing a leading negation cue; otherwise the sentence is one
// fact. Pure function of the text.
class RuleBasedExtractor final : public Extractor {
  public:
    explicit RuleBasedExtractor(std::vector<std::string> observation_keywords);
    static RuleBasedExtractor load(const std::filesystem::path& keywords_file);

    std::vector<std::string> extract(const std::string& sentence) const override;
    ExtractorKind kind() const override { return ExtractorKind::RuleBased; }

  private:
    std::vector<std::vector<std::string>> keywords_;  // tokenized phrases
};

// target string for the student: facts joined with " ; ", "NONE" when empty
std::string serialize_student_target(const std::vector<std::string>& facts);
std::vector<std::string> parse_student_target(const std::string& target);

struct StudentConfig {
    int token_dim = 64;
    int layers = 1;  // encoder self-attention layers
    int heads = 2;
    int ff_dim = 128;
    int max_len = 32;  // input and target truncation, in tokens
    int epochs = 30;
    int batch_size = 16;
    double lr_max = 3e-3;
    double lr_min = 3e-4;
    std::uint64_t seed = 0;

    void validate() const;
};

// Sequence-to-sequence imitator of the teacher: one-layer-deep transformer
// encoder, a decoder that cross-attends over all encoder token states, greedy
// decoding into the " ; "-joined target format.
class StudentExtractor final : public Extractor {
  public:
    StudentExtractor();  // untrained handle; extract() is a usage error
    StudentExtractor(StudentExtractor&&) noexcept;
    StudentExtractor& operator=(StudentExtractor&&) noexcept;
    ~StudentExtractor() override;

    static StudentExtractor train(const std::vector<ExtractionPair>& pairs,
                                  const StudentConfig& cfg);
    static StudentExtractor load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    std::vector<std::string> extract(const std::string& sentence) const override;
    ExtractorKind kind() const override { return ExtractorKind::Student; }

  private:
    struct Model;
    explicit StudentExtractor(std::unique_ptr<Model> model);
    std::unique_ptr<Model> model_;
};

// fraction of pairs whose decoded fact list equals the teacher's, after both
// sides pass the shared token normalization
double exact_match_accuracy(const Extractor& extractor,
                            const std::vector<ExtractionPair>& pairs);

// Parses a reply as a JSON list of strings; one repair attempt strips code
// fences. Anything else is a parse error.
std::vector<std::string> parse_fact_reply(const std::string& reply);

class LlmExtractor final : public Extractor {
  public:
    LlmExtractor(std::shared_ptr<llm::Client> client, llm::PromptTemplate tmpl);

    std::vector<std::string> extract(const std::string& sentence) const override;
    ExtractorKind kind() const override { return ExtractorKind::Llm; }

  private:
    std::shared_ptr<llm::Client> client_;
    llm::PromptTemplate tmpl_;
};

// difficulty(s) = sum over token occurrences of 1 / corpus frequency
std::vector<double> inverse_token_frequency_scores(const std::vector<corpus::Sentence>& sentences);

struct RankedSentence {
    corpus::Sentence sentence;
    double score = 0.0;
};

// descending score; ties broken lexicographically by text
std::vector<RankedSentence> rank_by_inverse_token_frequency(
    const std::vector<corpus::Sentence>& sentences);

// K-means over auxiliary embeddings, then round-robin across clusters taking
// each cluster's hardest unpicked sentence until the budget is spent.
std::vector<corpus::Sentence> build_distillation_subset(
    const std::vector<corpus::Sentence>& sentences, const Eigen::MatrixXd& aux_embeddings,
    int k_clusters, int budget, std::uint64_t seed);

void save_facts(const std::filesystem::path& jsonl_path, const std::vector<Fact>& facts);
std::vector<Fact> load_facts(const std::filesystem::path& jsonl_path);

}  // namespace factline::extraction
