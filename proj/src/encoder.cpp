#include "factline/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iostream>

#include "factline/io.hpp"

namespace factline::encoder {

void EncoderConfig::validate() const {
    if (projection_dim != 128) throw ConfigError("projection dim must be 128");
    if (decoder_dim != 256 || decoder_heads != 1 || decoder_layers != 1) {
        throw ConfigError("decoder must be 256-dim, 1 head, 1 layer");
    }
    if (vocab_size <= 4) throw ConfigError("vocabulary too small");
    if (token_dim <= 0 || layers <= 0 || heads <= 0 || ff_dim <= 0 || max_len <= 1) {
        throw ConfigError("encoder dimensions must be positive");
    }
    if (token_dim % heads != 0) throw ConfigError("token dim not divisible by head count");
    if (span_max_width <= 0 || width_dim <= 0 || entity_types <= 0 || relation_types <= 0) {
        throw ConfigError("span head dimensions must be positive");
    }
}

FactEncoder::FactEncoder(EncoderConfig cfg, text::Vocabulary vocab, std::uint64_t seed)
    : cfg_(cfg), vocab_(std::move(vocab)) {
    if (cfg_.vocab_size == 0) cfg_.vocab_size = vocab_.size();
    if (cfg_.vocab_size != vocab_.size()) throw ConfigError("config/vocabulary size mismatch");
    cfg_.validate();

    Rng rng(seed);
    auto weight = [&](const std::string& name, int r, int c) {
        nn::init_normal(params_.create(name, r, c), rng, 0.02);
    };
    auto bias = [&](const std::string& name, int c) {
        nn::init_zeros(params_.create(name, 1, c));
    };
    auto gamma = [&](const std::string& name, int c) { params_.create(name, 1, c).value.setOnes(); };
    auto attn_block = [&](const std::string& p, int qdim, int kdim) {
        weight(p + ".wq", qdim, qdim);
        bias(p + ".bq", qdim);
        weight(p + ".wk", kdim, qdim);
        bias(p + ".bk", qdim);
        weight(p + ".wv", kdim, qdim);
        bias(p + ".bv", qdim);
        weight(p + ".wo", qdim, qdim);
        bias(p + ".bo", qdim);
    };

    const int d = cfg_.token_dim;
    weight("tok_emb", cfg_.vocab_size, d);
    weight("pos_emb", cfg_.max_len, d);
    for (int l = 0; l < cfg_.layers; ++l) {
        const std::string p = "enc" + std::to_string(l);
        attn_block(p + ".attn", d, d);
        gamma(p + ".ln1.g", d);
        bias(p + ".ln1.b", d);
        weight(p + ".ff.w1", d, cfg_.ff_dim);
        bias(p + ".ff.b1", cfg_.ff_dim);
        weight(p + ".ff.w2", cfg_.ff_dim, d);
        bias(p + ".ff.b2", d);
        gamma(p + ".ln2.g", d);
        bias(p + ".ln2.b", d);
    }
    weight("proj.w", d, cfg_.projection_dim);
    bias("proj.b", cfg_.projection_dim);

    const std::vector<std::pair<std::string, int>> class_heads = {
        {"category", cfg_.category_classes},
        {"health", cfg_.health_classes},
        {"comparison", cfg_.comparison_classes},
        {"observations", cfg_.observation_classes},
        {"anatomy", cfg_.anatomy_classes}};
    for (const auto& [name, classes] : class_heads) {
        weight("head." + name + ".w", cfg_.projection_dim, classes);
        bias("head." + name + ".b", classes);
    }
    weight("nli.w", 3 * cfg_.projection_dim, cfg_.nli_classes);
    bias("nli.b", cfg_.nli_classes);

    const int dd = cfg_.decoder_dim;
    weight("dec.tok_emb", cfg_.vocab_size, dd);
    weight("dec.pos_emb", cfg_.max_len, dd);
    attn_block("dec.self", dd, dd);
    gamma("dec.ln1.g", dd);
    bias("dec.ln1.b", dd);
    attn_block("dec.cross", dd, dd);
    gamma("dec.ln2.g", dd);
    bias("dec.ln2.b", dd);
    weight("dec.ff.w1", dd, dd);
    bias("dec.ff.b1", dd);
    weight("dec.ff.w2", dd, dd);
    bias("dec.ff.b2", dd);
    gamma("dec.ln3.g", dd);
    bias("dec.ln3.b", dd);
    weight("dec.mem.w", cfg_.projection_dim, dd);
    bias("dec.mem.b", dd);
    weight("dec.out.w", dd, cfg_.vocab_size);
    bias("dec.out.b", cfg_.vocab_size);

    const int span_feat = d + cfg_.width_dim;
    weight("er.width_emb", cfg_.span_max_width + 1, cfg_.width_dim);
    weight("er.span.w", span_feat, cfg_.entity_types + 1);
    bias("er.span.b", cfg_.entity_types + 1);
    weight("er.rel.w", 2 * span_feat, cfg_.relation_types);
    bias("er.rel.b", cfg_.relation_types);
}

std::vector<int> FactEncoder::tokenize(const std::string& s, bool add_eos) const {
    std::vector<int> ids = vocab_.encode(s, true, add_eos);
    if (static_cast<int>(ids.size()) > cfg_.max_len) {
        std::cerr << "[encoder] truncating input of " << ids.size() << " tokens to "
                  << cfg_.max_len << "\n";
        ids.resize(static_cast<std::size_t>(cfg_.max_len));
        if (add_eos) ids.back() = text::Vocabulary::kEos;
    }
    return ids;
}

nn::Var FactEncoder::linear(nn::Tape& t, nn::Var x, const std::string& w,
                            const std::string& b) const {
    return nn::add_rowvec(nn::matmul(x, t.leaf(params_.at(w))), t.leaf(params_.at(b)));
}

nn::Var FactEncoder::layer_norm(nn::Tape& t, nn::Var x, const std::string& prefix) const {
    nn::Var normed = nn::layer_norm_rows(x);
    return nn::add_rowvec(nn::mul_rowvec(normed, t.leaf(params_.at(prefix + ".g"))),
                          t.leaf(params_.at(prefix + ".b")));
}

nn::Var FactEncoder::attention(nn::Tape& t, nn::Var x, const std::vector<int>& offsets,
                               const std::vector<int>& lens, const std::string& prefix, int heads,
                               bool causal, nn::Var memory) const {
    const int dim = x.cols();
    const int dh = dim / heads;
    nn::Var q = linear(t, x, prefix + ".wq", prefix + ".bq");
    nn::Var src = memory.valid() ? memory : x;
    nn::Var k = linear(t, src, prefix + ".wk", prefix + ".bk");
    nn::Var v = linear(t, src, prefix + ".wv", prefix + ".bv");

    std::vector<nn::Var> seq_outs;
    seq_outs.reserve(offsets.size());
    for (std::size_t s = 0; s < offsets.size(); ++s) {
        const int off = offsets[s];
        const int len = lens[s];
        const int koff = memory.valid() ? 0 : off;
        const int klen = memory.valid() ? memory.rows() : len;
        std::vector<nn::Var> head_outs;
        head_outs.reserve(static_cast<std::size_t>(heads));
        for (int h = 0; h < heads; ++h) {
            nn::Var qs = nn::block(q, off, h * dh, len, dh);
            nn::Var ks = nn::block(k, koff, h * dh, klen, dh);
            nn::Var vs = nn::block(v, koff, h * dh, klen, dh);
            nn::Var scores = nn::scale(nn::matmul_nt(qs, ks), 1.0 / std::sqrt(dh));
            nn::Var attn;
            if (causal) {
                nn::Mat mask = nn::Mat::Zero(len, klen);
                for (int i = 0; i < len; ++i) {
                    for (int j = i + 1; j < klen; ++j) mask(i, j) = -1e9;
                }
                attn = nn::masked_softmax_rows(scores, mask);
            } else {
                attn = nn::softmax_rows(scores);
            }
            head_outs.push_back(nn::matmul(attn, vs));
        }
        seq_outs.push_back(heads == 1 ? head_outs[0] : nn::hstack(head_outs));
    }
    nn::Var ctx = seq_outs.size() == 1 ? seq_outs[0] : nn::vstack(seq_outs);
    return linear(t, ctx, prefix + ".wo", prefix + ".bo");
}

FactEncoder::States FactEncoder::forward_states(nn::Tape& t,
                                                const std::vector<std::vector<int>>& seqs) const {
    if (seqs.empty()) throw ContractError("encoder forward needs at least one sequence");
    std::vector<int> flat;
    std::vector<int> positions;
    std::vector<int> offsets;
    std::vector<int> lens;
    for (const auto& seq : seqs) {
        if (seq.empty()) throw ContractError("encoder forward got an empty token sequence");
        if (static_cast<int>(seq.size()) > cfg_.max_len) {
            throw ContractError("token sequence exceeds max length; tokenize() truncates");
        }
        offsets.push_back(static_cast<int>(flat.size()));
        lens.push_back(static_cast<int>(seq.size()));
        for (std::size_t i = 0; i < seq.size(); ++i) {
            flat.push_back(seq[i]);
            positions.push_back(static_cast<int>(i));
        }
    }
    nn::Var tok = nn::gather_rows(t.leaf(params_.at("tok_emb")), flat);
    nn::Var pos = nn::gather_rows(t.leaf(params_.at("pos_emb")), positions);
    nn::Var x = nn::add(tok, pos);
    for (int l = 0; l < cfg_.layers; ++l) {
        const std::string p = "enc" + std::to_string(l);
        nn::Var attn = attention(t, x, offsets, lens, p + ".attn", cfg_.heads, false, {});
        x = layer_norm(t, nn::add(x, attn), p + ".ln1");
        nn::Var hidden = nn::relu(linear(t, x, p + ".ff.w1", p + ".ff.b1"));
        nn::Var ff = linear(t, hidden, p + ".ff.w2", p + ".ff.b2");
        x = layer_norm(t, nn::add(x, ff), p + ".ln2");
    }
    return {x, std::move(offsets), std::move(lens)};
}

nn::Var FactEncoder::encode_var(nn::Tape& t, const std::vector<std::vector<int>>& seqs) const {
    States st = forward_states(t, seqs);
    nn::Var cls = nn::gather_rows(st.all, st.offsets);
    nn::Var proj = linear(t, cls, "proj.w", "proj.b");
    return nn::l2_normalize_rows(proj);
}

nn::Var FactEncoder::token_states_var(nn::Tape& t, const std::vector<int>& seq) const {
    return forward_states(t, {seq}).all;
}

nn::Var FactEncoder::head_logits_var(nn::Tape& t, nn::Var emb, const std::string& head) const {
    static const std::vector<std::string> known = {"category", "health", "comparison",
                                                   "observations", "anatomy"};
    if (std::find(known.begin(), known.end(), head) == known.end()) {
        throw UsageError("unknown classification head '" + head + "'");
    }
    if (emb.cols() != cfg_.projection_dim) {
        throw ContractError("classification head expects 128-D embeddings");
    }
    return linear(t, emb, "head." + head + ".w", "head." + head + ".b");
}

nn::Var FactEncoder::nli_logits_var(nn::Tape& t, nn::Var premise, nn::Var hypothesis) const {
    if (premise.cols() != cfg_.projection_dim || hypothesis.cols() != cfg_.projection_dim ||
        premise.rows() != hypothesis.rows()) {
        throw ContractError("nli head expects matched 128-D embedding batches");
    }
    nn::Var feats = nn::hstack({premise, hypothesis, nn::mul(premise, hypothesis)});
    return linear(t, feats, "nli.w", "nli.b");
}

nn::Var FactEncoder::decode_logits_var(nn::Tape& t, nn::Var emb_row,
                                       const std::vector<int>& inputs) const {
    if (inputs.empty()) throw ContractError("decoder needs at least one input token");
    if (static_cast<int>(inputs.size()) > cfg_.max_len) {
        throw ContractError("decoder input exceeds max length");
    }
    if (emb_row.rows() != 1 || emb_row.cols() != cfg_.projection_dim) {
        throw ContractError("decoder memory must be one 128-D embedding");
    }
    const int len = static_cast<int>(inputs.size());
    std::vector<int> positions(inputs.size());
    for (int i = 0; i < len; ++i) positions[static_cast<std::size_t>(i)] = i;
    nn::Var tok = nn::gather_rows(t.leaf(params_.at("dec.tok_emb")), inputs);
    nn::Var pos = nn::gather_rows(t.leaf(params_.at("dec.pos_emb")), positions);
    nn::Var x = nn::add(tok, pos);
    nn::Var memory = linear(t, emb_row, "dec.mem.w", "dec.mem.b");

    const std::vector<int> offsets = {0};
    const std::vector<int> lens = {len};
    nn::Var sa = attention(t, x, offsets, lens, "dec.self", cfg_.decoder_heads, true, {});
    x = layer_norm(t, nn::add(x, sa), "dec.ln1");
    nn::Var ca = attention(t, x, offsets, lens, "dec.cross", cfg_.decoder_heads, false, memory);
    x = layer_norm(t, nn::add(x, ca), "dec.ln2");
    nn::Var hidden = nn::relu(linear(t, x, "dec.ff.w1", "dec.ff.b1"));
    nn::Var ff = linear(t, hidden, "dec.ff.w2", "dec.ff.b2");
    x = layer_norm(t, nn::add(x, ff), "dec.ln3");
    return linear(t, x, "dec.out.w", "dec.out.b");
}

nn::Var FactEncoder::span_features(nn::Tape& t, nn::Var states,
                                   const std::vector<std::pair<int, int>>& spans) const {
    const int n_tokens = states.rows();
    std::vector<std::pair<int, int>> ranges;
    std::vector<int> widths;
    ranges.reserve(spans.size());
    widths.reserve(spans.size());
    for (const auto& [start, end] : spans) {
        if (start < 0 || end <= start || end > n_tokens) {
            throw ContractError("span outside token range");
        }
        ranges.emplace_back(start, end - start);
        widths.push_back(std::min(end - start, cfg_.span_max_width));
    }
    nn::Var pooled = nn::max_pool_rows(states, ranges);
    nn::Var width_emb = nn::gather_rows(t.leaf(params_.at("er.width_emb")), widths);
    return nn::hstack({pooled, width_emb});
}

nn::Var FactEncoder::span_logits_var(nn::Tape& t, nn::Var states,
                                     const std::vector<std::pair<int, int>>& spans) const {
    return linear(t, span_features(t, states, spans), "er.span.w", "er.span.b");
}

nn::Var FactEncoder::relation_logits_var(nn::Tape& t, nn::Var states,
                                         const std::vector<std::pair<int, int>>& spans,
                                         const std::vector<std::pair<int, int>>& pairs) const {
    nn::Var feats = span_features(t, states, spans);
    std::vector<int> head_idx;
    std::vector<int> tail_idx;
    for (const auto& [h, tail] : pairs) {
        if (h < 0 || tail < 0 || h >= static_cast<int>(spans.size()) ||
            tail >= static_cast<int>(spans.size()) || h == tail) {
            throw ContractError("relation pair references a bad span index");
        }
        head_idx.push_back(h);
        tail_idx.push_back(tail);
    }
    nn::Var lhs = nn::gather_rows(feats, head_idx);
    nn::Var rhs = nn::gather_rows(feats, tail_idx);
    return linear(t, nn::hstack({lhs, rhs}), "er.rel.w", "er.rel.b");
}

Eigen::MatrixXd FactEncoder::encode(const std::vector<std::string>& texts) const {
    if (texts.empty()) return Eigen::MatrixXd(0, cfg_.projection_dim);
    std::vector<std::vector<int>> seqs;
    seqs.reserve(texts.size());
    for (const auto& s : texts) seqs.push_back(tokenize(s));
    nn::Tape t;
    return encode_var(t, seqs).val();
}

Eigen::VectorXd FactEncoder::classify(const Eigen::VectorXd& emb, const std::string& head) const {
    if (emb.size() != cfg_.projection_dim) {
        throw ContractError("classification head expects 128-D embeddings");
    }
    nn::Tape t;
    nn::Var row = t.constant(emb.transpose());
    return head_logits_var(t, row, head).val().row(0).transpose();
}

Eigen::VectorXd FactEncoder::nli_logits(const Eigen::VectorXd& premise,
                                        const Eigen::VectorXd& hypothesis) const {
    if (premise.size() != cfg_.projection_dim || hypothesis.size() != cfg_.projection_dim) {
        throw ContractError("nli head expects matched 128-D embedding batches");
    }
    nn::Tape t;
    nn::Var p = t.constant(premise.transpose());
    nn::Var h = t.constant(hypothesis.transpose());
    return nli_logits_var(t, p, h).val().row(0).transpose();
}

std::vector<int> FactEncoder::decode_sentence(const Eigen::VectorXd& emb, int max_len) const {
    if (emb.size() != cfg_.projection_dim) {
        throw ContractError("decoder memory must be one 128-D embedding");
    }
    std::vector<int> ids = {text::Vocabulary::kBos};
    std::vector<int> out;
    while (static_cast<int>(out.size()) < max_len &&
           static_cast<int>(ids.size()) < cfg_.max_len) {
        nn::Tape t;
        nn::Var logits = decode_logits_var(t, t.constant(emb.transpose()), ids);
        Eigen::Index next = 0;
        logits.val().row(logits.rows() - 1).maxCoeff(&next);
        if (static_cast<int>(next) == text::Vocabulary::kEos) break;
        out.push_back(static_cast<int>(next));
        ids.push_back(static_cast<int>(next));
    }
    return out;
}

EntityGraph FactEncoder::extract_graph(const std::vector<int>& tokens, int span_max_width,
                                       double threshold) const {
    EntityGraph graph;
    if (tokens.empty()) return graph;
    std::vector<int> content = tokens;
    if (static_cast<int>(content.size()) + 1 > cfg_.max_len) {
        std::cerr << "[encoder] truncating span-extraction input of " << content.size()
                  << " tokens to " << (cfg_.max_len - 1) << "\n";
        content.resize(static_cast<std::size_t>(cfg_.max_len - 1));
    }
    std::vector<int> seq = {text::Vocabulary::kBos};
    seq.insert(seq.end(), content.begin(), content.end());

    const int n = static_cast<int>(content.size());
    const int max_w = std::min(span_max_width, cfg_.span_max_width);
    std::vector<std::pair<int, int>> spans;  // offsets into `tokens`
    for (int start = 0; start < n; ++start) {
        for (int w = 1; w <= max_w && start + w <= n; ++w) spans.emplace_back(start, start + w);
    }
    if (spans.empty()) return graph;

    nn::Tape t;
    nn::Var states = token_states_var(t, seq);
    std::vector<std::pair<int, int>> shifted;  // +1 for the leading [CLS]/BOS row
    shifted.reserve(spans.size());
    for (const auto& [a, b] : spans) shifted.emplace_back(a + 1, b + 1);
    const nn::Mat probs = nn::softmax_rows(span_logits_var(t, states, shifted)).val();

    std::vector<int> kept;  // indices into spans
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const double non_null = 1.0 - probs(static_cast<Eigen::Index>(i), 0);
        if (non_null < threshold) continue;
        Eigen::Index best = 0;
        probs.row(static_cast<Eigen::Index>(i)).tail(cfg_.entity_types).maxCoeff(&best);
        graph.entities.push_back({spans[i].first, spans[i].second, static_cast<int>(best)});
        kept.push_back(static_cast<int>(i));
    }
    if (graph.entities.size() < 2) return graph;

    std::vector<std::pair<int, int>> pairs;
    for (std::size_t a = 0; a < kept.size(); ++a) {
        for (std::size_t b = 0; b < kept.size(); ++b) {
            if (a != b) pairs.emplace_back(kept[a], kept[b]);
        }
    }
    const nn::Mat rel = relation_logits_var(t, states, shifted, pairs).val();
    std::size_t pair_idx = 0;
    for (std::size_t a = 0; a < kept.size(); ++a) {
        for (std::size_t b = 0; b < kept.size(); ++b) {
            if (a == b) continue;
            for (int r = 0; r < cfg_.relation_types; ++r) {
                const double prob =
                    1.0 / (1.0 + std::exp(-rel(static_cast<Eigen::Index>(pair_idx), r)));
                if (prob >= threshold) {
                    graph.relations.push_back(
                        {static_cast<int>(a), static_cast<int>(b), r});
                }
            }
            ++pair_idx;
        }
    }
    return graph;
}

namespace {

io::json config_to_json(const EncoderConfig& c) {
    return {{"vocab_size", c.vocab_size},
            {"token_dim", c.token_dim},
            {"layers", c.layers},
            {"heads", c.heads},
            {"ff_dim", c.ff_dim},
            {"projection_dim", c.projection_dim},
            {"max_len", c.max_len},
            {"decoder_dim", c.decoder_dim},
            {"decoder_heads", c.decoder_heads},
            {"decoder_layers", c.decoder_layers},
            {"category_classes", c.category_classes},
            {"health_classes", c.health_classes},
            {"comparison_classes", c.comparison_classes},
            {"observation_classes", c.observation_classes},
            {"anatomy_classes", c.anatomy_classes},
            {"nli_classes", c.nli_classes},
            {"entity_types", c.entity_types},
            {"relation_types", c.relation_types},
            {"span_max_width", c.span_max_width},
            {"width_dim", c.width_dim}};
}

EncoderConfig config_from_json(const io::json& j) {
    EncoderConfig c;
    c.vocab_size = j.at("vocab_size").get<int>();
    c.token_dim = j.at("token_dim").get<int>();
    c.layers = j.at("layers").get<int>();
    c.heads = j.at("heads").get<int>();
    c.ff_dim = j.at("ff_dim").get<int>();
    c.projection_dim = j.at("projection_dim").get<int>();
    c.max_len = j.at("max_len").get<int>();
    c.decoder_dim = j.at("decoder_dim").get<int>();
    c.decoder_heads = j.at("decoder_heads").get<int>();
    c.decoder_layers = j.at("decoder_layers").get<int>();
    c.category_classes = j.at("category_classes").get<int>();
    c.health_classes = j.at("health_classes").get<int>();
    c.comparison_classes = j.at("comparison_classes").get<int>();
    c.observation_classes = j.at("observation_classes").get<int>();
    c.anatomy_classes = j.at("anatomy_classes").get<int>();
    c.nli_classes = j.at("nli_classes").get<int>();
    c.entity_types = j.at("entity_types").get<int>();
    c.relation_types = j.at("relation_types").get<int>();
    c.span_max_width = j.at("span_max_width").get<int>();
    c.width_dim = j.at("width_dim").get<int>();
    return c;
}

constexpr char kCheckpointMagic[9] = "FLCK0001";

void append_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t read_u64(const std::string& buf, std::size_t pos) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    }
    return v;
}

}  // namespace

void FactEncoder::save(const std::filesystem::path& path) const {
    io::json tensors = io::json::array();
    for (const auto* p : params_.all()) {
        tensors.push_back(
            {{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
    }
    const io::json header = {
        {"config", config_to_json(cfg_)}, {"vocab", vocab_.tokens()}, {"tensors", tensors}};
    const std::string header_text = header.dump();

    std::string buf(kCheckpointMagic, 8);
    append_u64(buf, header_text.size());
    buf += header_text;
    for (const auto* p : params_.all()) {
        for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
            for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
                const double d = p->value(r, c);
                char raw[8];
                std::memcpy(raw, &d, 8);
                buf.append(raw, 8);
            }
        }
    }
    io::atomic_write(path, buf);
}

FactEncoder FactEncoder::load(const std::filesystem::path& path) {
    const std::string buf = io::slurp(path);
    if (buf.size() < 16 || buf.compare(0, 8, kCheckpointMagic, 8) != 0) {
        throw ParseError("not a checkpoint file: " + path.string());
    }
    const std::uint64_t header_len = read_u64(buf, 8);
    if (16 + header_len > buf.size()) throw ParseError("truncated checkpoint header");
    io::json header;
    try {
        header = io::json::parse(buf.substr(16, header_len));
    } catch (const std::exception& e) {
        throw ParseError(std::string("bad checkpoint header: ") + e.what());
    }

    const EncoderConfig cfg = config_from_json(header.at("config"));
    std::vector<std::string> tokens;
    for (const auto& tok : header.at("vocab")) tokens.push_back(tok.get<std::string>());
    FactEncoder enc(cfg, text::Vocabulary::from_tokens(tokens), 0);

    const auto& tensors = header.at("tensors");
    if (tensors.size() != enc.params_.all().size()) {
        throw ParseError("checkpoint tensor count mismatch");
    }
    std::size_t pos = 16 + header_len;
    for (const auto& desc : tensors) {
        nn::Param& p = enc.params_.at(desc.at("name").get<std::string>());
        const auto rows = desc.at("rows").get<Eigen::Index>();
        const auto cols = desc.at("cols").get<Eigen::Index>();
        if (rows != p.value.rows() || cols != p.value.cols()) {
            throw ParseError("checkpoint tensor shape mismatch for " + p.name);
        }
        const std::size_t bytes = static_cast<std::size_t>(rows * cols) * 8;
        if (pos + bytes > buf.size()) throw ParseError("truncated checkpoint data");
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) {
                double d = 0.0;
                std::memcpy(&d, buf.data() + pos, 8);
                p.value(r, c) = d;
                pos += 8;
            }
        }
    }
    if (pos != buf.size()) throw ParseError("trailing bytes in checkpoint");
    return enc;
}

}  // namespace factline::encoder
