#pragma once

// The fact encoder: a small transformer producing 128-D unit embeddings, plus
// the task heads (classification, NLI, sentence decoding, span/relation
// extraction). One forward implementation serves both training (tape graphs)
// and inference (values read off a throwaway tape).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "factline/common.hpp"
#include "factline/nn/autograd.hpp"
#include "factline/nn/optim.hpp"
#include "factline/text.hpp"

namespace factline::encoder {

struct EncoderConfig {
    int vocab_size = 0;
    int token_dim = 128;
    int layers = 2;
    int heads = 4;
    int ff_dim = 256;
    int projection_dim = 128;  // fixed: the embedding contract
    int max_len = 48;
    int decoder_dim = 256;  // fixed decoder geometry
    int decoder_heads = 1;
    int decoder_layers = 1;
    int category_classes = 5;
    int health_classes = 4;
    int comparison_classes = 15;
    int observation_classes = 74;
    int anatomy_classes = 38;
    int nli_classes = 3;
    int entity_types = 4;  // non-null span classes
    int relation_types = 3;
    int span_max_width = 4;
    int width_dim = 16;

    void validate() const;  // throws ConfigError on a broken contract
};

struct Entity {
    int start = 0;  // token span [start, end)
    int end = 0;
    int type = 0;
    bool operator==(const Entity&) const = default;
};

struct Relation {
    int head = 0;  // indices into EntityGraph::entities
    int tail = 0;
    int type = 0;
    bool operator==(const Relation&) const = default;
};

struct EntityGraph {
    std::vector<Entity> entities;
    std::vector<Relation> relations;
};

// Anything that maps texts to rows of unit-norm 128-D vectors can back the
// score and evaluation layers.
class EmbeddingBackend {
  public:
    virtual ~EmbeddingBackend() = default;
    virtual Eigen::MatrixXd encode(const std::vector<std::string>& texts) const = 0;
    virtual int dim() const = 0;
};

class FactEncoder : public EmbeddingBackend {
  public:
    FactEncoder(EncoderConfig cfg, text::Vocabulary vocab, std::uint64_t seed = 0);

    const EncoderConfig& config() const { return cfg_; }
    const text::Vocabulary& vocab() const { return vocab_; }
    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }

    // Tokenization with truncation to max_len (warned, not an error).
    std::vector<int> tokenize(const std::string& s, bool add_eos = false) const;

    // Graph-building forward passes. `seqs` are BOS-prefixed token id lists.
    nn::Var encode_var(nn::Tape& t, const std::vector<std::vector<int>>& seqs) const;
    nn::Var token_states_var(nn::Tape& t, const std::vector<int>& seq) const;
    nn::Var head_logits_var(nn::Tape& t, nn::Var emb, const std::string& head) const;
    nn::Var nli_logits_var(nn::Tape& t, nn::Var premise, nn::Var hypothesis) const;
    // Teacher-forced decoder logits, one row per input position.
    nn::Var decode_logits_var(nn::Tape& t, nn::Var emb_row, const std::vector<int>& inputs) const;
    nn::Var span_logits_var(nn::Tape& t, nn::Var states,
                            const std::vector<std::pair<int, int>>& spans) const;
    nn::Var relation_logits_var(nn::Tape& t, nn::Var states,
                                const std::vector<std::pair<int, int>>& spans,
                                const std::vector<std::pair<int, int>>& pairs) const;

    // Plain-value inference.
    Eigen::MatrixXd encode(const std::vector<std::string>& texts) const override;
    int dim() const override { return cfg_.projection_dim; }
    Eigen::VectorXd classify(const Eigen::VectorXd& emb, const std::string& head) const;
    Eigen::VectorXd nli_logits(const Eigen::VectorXd& premise, const Eigen::VectorXd& hypothesis) const;
    std::vector<int> decode_sentence(const Eigen::VectorXd& emb, int max_len) const;
    EntityGraph extract_graph(const std::vector<int>& tokens, int span_max_width,
                              double threshold) const;

    void save(const std::filesystem::path& path) const;
    static FactEncoder load(const std::filesystem::path& path);

  private:
    struct States {
        nn::Var all;  // sum(len) x token_dim
        std::vector<int> offsets;
        std::vector<int> lens;
    };
    States forward_states(nn::Tape& t, const std::vector<std::vector<int>>& seqs) const;
    nn::Var attention(nn::Tape& t, nn::Var x, const std::vector<int>& offsets,
                      const std::vector<int>& lens, const std::string& prefix, int heads,
                      bool causal, nn::Var memory) const;
    nn::Var layer_norm(nn::Tape& t, nn::Var x, const std::string& prefix) const;
    nn::Var linear(nn::Tape& t, nn::Var x, const std::string& w, const std::string& b) const;
    nn::Var span_features(nn::Tape& t, nn::Var states,
                          const std::vector<std::pair<int, int>>& spans) const;

    EncoderConfig cfg_;
    text::Vocabulary vocab_;
    mutable nn::ParamStore params_;
};

}  // namespace factline::encoder
