#include "factline/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>
#include <optional>
#include <set>

#include <json.hpp>

#include "factline/io.hpp"
#include "factline/nn/autograd.hpp"
#include "factline/nn/optim.hpp"
#include "factline/sampling.hpp"
#include "factline/text.hpp"

namespace factline::extraction {
namespace {

constexpr const char* kCues[] = {"negative for", "free of", "without", "no"};

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

// drop sentence terminators that sit at a word boundary, keeping e.g. "1.5"
std::string strip_terminators(std::string_view raw) {
    std::string s = text::collapse_whitespace(text::trim(raw));
    std::string prev;
    do {
        prev = s;
        std::string out;
        out.reserve(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (is_terminator(s[i]) && (i + 1 == s.size() || s[i + 1] == ' ')) continue;
            out += s[i];
        }
        s = text::collapse_whitespace(text::trim(out));
    } while (s != prev);
    return s;
}

std::string leading_cue(const std::string& s) {
    for (const char* cue : kCues) {
        if (text::starts_with_word(s, cue)) return cue;
    }
    return "";
}

// split on top-level ", and ", ", " and " and "; returns {s} when none fires
std::vector<std::string> split_top_level(const std::string& s) {
    static constexpr std::string_view seps[] = {", and ", ", ", " and "};
    std::vector<std::string> parts;
    std::size_t start = 0;
    int depth = 0;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (c == '(' || c == '[') ++depth;
        if (c == ')' || c == ']') depth = std::max(0, depth - 1);
        bool matched = false;
        if (depth == 0) {
            for (const auto sep : seps) {
                if (s.compare(i, sep.size(), sep) == 0) {
                    parts.push_back(s.substr(start, i - start));
                    i += sep.size();
                    start = i;
                    matched = true;
                    break;
                }
            }
        }
        if (!matched) ++i;
    }
    parts.push_back(s.substr(start));
    return parts;
}

bool contains_phrase(const std::vector<std::string>& tokens,
                     const std::vector<std::string>& phrase) {
    if (phrase.empty() || tokens.size() < phrase.size()) return false;
    for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
        bool all = true;
        for (std::size_t j = 0; j < phrase.size() && all; ++j) all = tokens[i + j] == phrase[j];
        if (all) return true;
    }
    return false;
}

std::string normalize_tokens(const std::string& s) {
    return text::join(text::word_tokens(s), " ");
}

std::optional<std::vector<std::string>> try_parse_fact_list(const std::string& s) {
    const nlohmann::json j = nlohmann::json::parse(s, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_array()) return std::nullopt;
    std::vector<std::string> out;
    for (const auto& e : j) {
        if (!e.is_string()) return std::nullopt;
        out.push_back(e.get<std::string>());
    }
    return out;
}

std::string strip_code_fences(const std::string& reply) {
    const auto open = reply.find("```");
    if (open == std::string::npos) return reply;
    auto body = reply.find('\n', open);
    if (body == std::string::npos) return reply;
    ++body;
    const auto close = reply.rfind("```");
    if (close <= body) return reply;
    return reply.substr(body, close - body);
}

}  // namespace

std::string extractor_kind_name(ExtractorKind k) {
    switch (k) {
        case ExtractorKind::RuleBased: return "rule_based";
        case ExtractorKind::Student: return "student";
        case ExtractorKind::Llm: return "llm";
    }
    throw ContractError("unhandled extractor kind");
}

ExtractorKind extractor_kind_from_name(std::string_view name) {
    if (name == "rule_based") return ExtractorKind::RuleBased;
    if (name == "student") return ExtractorKind::Student;
    if (name == "llm") return ExtractorKind::Llm;
    throw ParseError("unknown extractor kind \"" + std::string(name) + "\"");
}

std::vector<Fact> extract_facts(const corpus::Sentence& sentence, const Extractor& extractor) {
    const auto raw = extractor.extract(sentence.text);
    std::vector<Fact> out;
    std::set<std::string> seen;
    for (const auto& r : raw) {
        const std::string cleaned = strip_terminators(r);
        if (cleaned.empty() || !seen.insert(cleaned).second) continue;
        out.push_back({cleaned, corpus::sentence_id(sentence), extractor.kind()});
    }
    return out;
}

ExtractionRun extract_corpus(const std::vector<corpus::Sentence>& sentences,
                             const Extractor& extractor) {
    ExtractionRun run;
    for (const auto& s : sentences) {
        try {
            auto facts = extract_facts(s, extractor);
            run.facts.insert(run.facts.end(), facts.begin(), facts.end());
        } catch (const ParseError&) {
            if (extractor.kind() != ExtractorKind::Llm) throw;
            run.unextracted.push_back(corpus::sentence_id(s));
        } catch (const InputError&) {
            if (extractor.kind() != ExtractorKind::Llm) throw;
            run.unextracted.push_back(corpus::sentence_id(s));
        }
    }
    return run;
}

RuleBasedExtractor::RuleBasedExtractor(std::vector<std::string> observation_keywords) {
    for (const auto& k : observation_keywords) {
        auto tokens = text::word_tokens(k);
        if (!tokens.empty()) keywords_.push_back(std::move(tokens));
    }
    if (keywords_.empty()) throw UsageError("rule-based extractor needs observation keywords");
}

RuleBasedExtractor RuleBasedExtractor::load(const std::filesystem::path& keywords_file) {
    std::vector<std::string> keywords;
    for (const auto& line : io::read_lines(keywords_file)) {
        const std::string t = text::trim(line);
        if (t.empty() || t[0] == '#') continue;
        keywords.push_back(t);
    }
    return RuleBasedExtractor(std::move(keywords));
}

std::vector<std::string> RuleBasedExtractor::extract(const std::string& sentence) const {
    const std::string s = strip_terminators(text::lower(sentence));
    if (s.empty()) return {};

    const auto parts = split_top_level(s);
    if (parts.size() < 2) return {s};

    std::vector<std::vector<std::string>> part_tokens;
    for (const auto& p : parts) {
        auto tokens = text::word_tokens(p);
        const bool carries = std::any_of(keywords_.begin(), keywords_.end(),
                                         [&](const auto& k) { return contains_phrase(tokens, k); });
        if (!carries) return {s};
        part_tokens.push_back(std::move(tokens));
    }

    const std::string cue = leading_cue(s);
    std::vector<std::string> out;
    for (const auto& p : parts) {
        std::string fact = text::trim(p);
        if (fact.empty()) return {s};
        if (!cue.empty() && leading_cue(fact).empty()) fact = cue + " " + fact;
        out.push_back(std::move(fact));
    }
    return out;
}

std::string serialize_student_target(const std::vector<std::string>& facts) {
    if (facts.empty()) return "NONE";
    return text::join(facts, " ; ");
}

std::vector<std::string> parse_student_target(const std::string& target) {
    const std::string t = text::collapse_whitespace(text::trim(target));
    if (t.empty() || text::lower(t) == "none") return {};
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto sep = t.find(" ; ", start);
        const std::string piece =
            text::trim(t.substr(start, sep == std::string::npos ? sep : sep - start));
        if (!piece.empty()) out.push_back(piece);
        if (sep == std::string::npos) break;
        start = sep + 3;
    }
    return out;
}

void StudentConfig::validate() const {
    if (token_dim < 1 || layers < 1 || heads < 1 || ff_dim < 1) {
        throw ConfigError("student dimensions must be positive");
    }
    if (token_dim % heads != 0) throw ConfigError("student token dim not divisible by heads");
    if (max_len < 4) throw ConfigError("student max length too small");
    if (epochs < 1 || batch_size < 1) throw ConfigError("student epochs/batch must be positive");
    if (lr_min <= 0.0 || lr_max < lr_min) throw ConfigError("student learning rates out of order");
}

namespace {

constexpr char kStudentMagic[9] = "flstudnt";

void append_u64(std::string& buf, std::uint64_t v) {
    char raw[8];
    std::memcpy(raw, &v, 8);
    buf.append(raw, 8);
}

std::uint64_t read_u64(const std::string& buf, std::size_t pos) {
    std::uint64_t v = 0;
    std::memcpy(&v, buf.data() + pos, 8);
    return v;
}

nlohmann::json student_config_to_json(const StudentConfig& c) {
    return {{"token_dim", c.token_dim}, {"layers", c.layers},
            {"heads", c.heads},         {"ff_dim", c.ff_dim},
            {"max_len", c.max_len},     {"epochs", c.epochs},
            {"batch_size", c.batch_size}, {"lr_max", c.lr_max},
            {"lr_min", c.lr_min},       {"seed", c.seed}};
}

StudentConfig student_config_from_json(const nlohmann::json& j) {
    StudentConfig c;
    c.token_dim = j.at("token_dim").get<int>();
    c.layers = j.at("layers").get<int>();
    c.heads = j.at("heads").get<int>();
    c.ff_dim = j.at("ff_dim").get<int>();
    c.max_len = j.at("max_len").get<int>();
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.lr_max = j.at("lr_max").get<double>();
    c.lr_min = j.at("lr_min").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

}  // namespace

struct StudentExtractor::Model {
    StudentConfig cfg;
    text::Vocabulary vocab;
    mutable nn::ParamStore params;

    Model(StudentConfig c, text::Vocabulary v, std::uint64_t seed)
        : cfg(std::move(c)), vocab(std::move(v)) {
        Rng rng(seed);
        const int d = cfg.token_dim;
        const auto weight = [&](const std::string& name, int r, int cols) {
            nn::init_normal(params.create(name, r, cols), rng, 0.02);
        };
        const auto bias = [&](const std::string& name, int cols) {
            nn::init_zeros(params.create(name, 1, cols));
        };
        const auto attn_params = [&](const std::string& prefix) {
            for (const char* part : {"wq", "wk", "wv", "wo"}) weight(prefix + "." + part, d, d);
            for (const char* part : {"bq", "bk", "bv", "bo"}) bias(prefix + "." + part, d);
        };
        const auto ff_params = [&](const std::string& prefix) {
            weight(prefix + ".w1", d, cfg.ff_dim);
            bias(prefix + ".b1", cfg.ff_dim);
            weight(prefix + ".w2", cfg.ff_dim, d);
            bias(prefix + ".b2", d);
        };
        weight("emb.tok", vocab.size(), d);
        weight("emb.pos", cfg.max_len, d);
        weight("dec.pos", cfg.max_len, d);
        for (int l = 0; l < cfg.layers; ++l) {
            attn_params("enc" + std::to_string(l) + ".a");
            ff_params("enc" + std::to_string(l) + ".ff");
        }
        attn_params("dec.a");
        attn_params("dec.x");
        ff_params("dec.ff");
        weight("out.w", d, vocab.size());
        bias("out.b", vocab.size());
    }

    nn::Var linear(nn::Tape& t, nn::Var x, const std::string& w, const std::string& b) const {
        return nn::add_rowvec(nn::matmul(x, t.leaf(params.at(w))), t.leaf(params.at(b)));
    }

    nn::Var attention(nn::Tape& t, const std::string& prefix, nn::Var q_in, nn::Var kv_in,
                      bool causal) const {
        const int dh = cfg.token_dim / cfg.heads;
        nn::Var q = linear(t, q_in, prefix + ".wq", prefix + ".bq");
        nn::Var k = linear(t, kv_in, prefix + ".wk", prefix + ".bk");
        nn::Var v = linear(t, kv_in, prefix + ".wv", prefix + ".bv");
        std::vector<nn::Var> heads_out;
        heads_out.reserve(static_cast<std::size_t>(cfg.heads));
        for (int h = 0; h < cfg.heads; ++h) {
            nn::Var qs = nn::block(q, 0, h * dh, q.rows(), dh);
            nn::Var ks = nn::block(k, 0, h * dh, k.rows(), dh);
            nn::Var vs = nn::block(v, 0, h * dh, v.rows(), dh);
            nn::Var scores = nn::scale(nn::matmul_nt(qs, ks), 1.0 / std::sqrt(dh));
            nn::Var attn;
            if (causal) {
                nn::Mat mask = nn::Mat::Zero(qs.rows(), ks.rows());
                for (int i = 0; i < qs.rows(); ++i) {
                    for (int j = i + 1; j < ks.rows(); ++j) mask(i, j) = -1e9;
                }
                attn = nn::masked_softmax_rows(scores, mask);
            } else {
                attn = nn::softmax_rows(scores);
            }
            heads_out.push_back(nn::matmul(attn, vs));
        }
        nn::Var ctx = cfg.heads == 1 ? heads_out[0] : nn::hstack(heads_out);
        return linear(t, ctx, prefix + ".wo", prefix + ".bo");
    }

    std::vector<int> tokenize(const std::string& s, bool add_eos) const {
        auto ids = vocab.encode(s, /*add_bos=*/true, add_eos);
        if (static_cast<int>(ids.size()) > cfg.max_len) {
            ids.resize(static_cast<std::size_t>(cfg.max_len));
            if (add_eos) ids.back() = text::Vocabulary::kEos;
        }
        return ids;
    }

    nn::Var encode_states(nn::Tape& t, const std::vector<int>& seq) const {
        std::vector<int> positions(seq.size());
        std::iota(positions.begin(), positions.end(), 0);
        nn::Var x = nn::add(nn::gather_rows(t.leaf(params.at("emb.tok")), seq),
                            nn::gather_rows(t.leaf(params.at("emb.pos")), positions));
        for (int l = 0; l < cfg.layers; ++l) {
            const std::string p = "enc" + std::to_string(l);
            nn::Var sa = attention(t, p + ".a", x, x, /*causal=*/false);
            x = nn::layer_norm_rows(nn::add(x, sa));
            nn::Var hidden = nn::relu(linear(t, x, p + ".ff.w1", p + ".ff.b1"));
            nn::Var ff = linear(t, hidden, p + ".ff.w2", p + ".ff.b2");
            x = nn::layer_norm_rows(nn::add(x, ff));
        }
        return x;
    }

    nn::Var decode_logits(nn::Tape& t, nn::Var states, const std::vector<int>& inputs) const {
        std::vector<int> positions(inputs.size());
        std::iota(positions.begin(), positions.end(), 0);
        nn::Var y = nn::add(nn::gather_rows(t.leaf(params.at("emb.tok")), inputs),
                            nn::gather_rows(t.leaf(params.at("dec.pos")), positions));
        nn::Var sa = attention(t, "dec.a", y, y, /*causal=*/true);
        y = nn::layer_norm_rows(nn::add(y, sa));
        nn::Var ca = attention(t, "dec.x", y, states, /*causal=*/false);
        y = nn::layer_norm_rows(nn::add(y, ca));
        nn::Var hidden = nn::relu(linear(t, y, "dec.ff.w1", "dec.ff.b1"));
        nn::Var ff = linear(t, hidden, "dec.ff.w2", "dec.ff.b2");
        y = nn::layer_norm_rows(nn::add(y, ff));
        return linear(t, y, "out.w", "out.b");
    }

    std::string greedy_decode(const std::string& sentence) const {
        const auto src = tokenize(sentence, /*add_eos=*/false);
        std::vector<int> ids = {text::Vocabulary::kBos};
        std::vector<int> out;
        while (static_cast<int>(out.size()) < cfg.max_len &&
               static_cast<int>(ids.size()) < cfg.max_len) {
            nn::Tape t;
            nn::Var logits = decode_logits(t, encode_states(t, src), ids);
            Eigen::Index next = 0;
            logits.val().row(logits.rows() - 1).maxCoeff(&next);
            if (static_cast<int>(next) == text::Vocabulary::kEos) break;
            out.push_back(static_cast<int>(next));
            ids.push_back(static_cast<int>(next));
        }
        return vocab.decode(out);
    }
};

StudentExtractor::StudentExtractor() = default;
StudentExtractor::StudentExtractor(StudentExtractor&&) noexcept = default;
StudentExtractor& StudentExtractor::operator=(StudentExtractor&&) noexcept = default;
StudentExtractor::~StudentExtractor() = default;

StudentExtractor::StudentExtractor(std::unique_ptr<Model> model) : model_(std::move(model)) {}

StudentExtractor StudentExtractor::train(const std::vector<ExtractionPair>& pairs,
                                         const StudentConfig& cfg) {
    if (pairs.empty()) throw InputError("student training needs at least one extraction pair");
    cfg.validate();

    std::vector<std::string> texts;
    std::vector<std::string> targets;
    texts.reserve(pairs.size() * 2);
    for (const auto& p : pairs) {
        texts.push_back(p.sentence_text);
        targets.push_back(serialize_student_target(p.facts));
        texts.push_back(targets.back());
    }
    const auto vocab = text::Vocabulary::build(texts, 1, {";", "none"});
    auto model = std::make_unique<Model>(cfg, vocab, cfg.seed);

    const int n = static_cast<int>(pairs.size());
    std::vector<std::vector<int>> src_ids;
    std::vector<std::vector<int>> dec_inputs;
    std::vector<std::vector<int>> dec_targets;
    src_ids.reserve(pairs.size());
    for (int i = 0; i < n; ++i) {
        src_ids.push_back(model->tokenize(pairs[static_cast<std::size_t>(i)].sentence_text,
                                          /*add_eos=*/false));
        const auto with_eos = model->tokenize(targets[static_cast<std::size_t>(i)],
                                              /*add_eos=*/true);
        dec_inputs.emplace_back(with_eos.begin(), with_eos.end() - 1);
        dec_targets.emplace_back(with_eos.begin() + 1, with_eos.end());
    }

    const int batches = (n + cfg.batch_size - 1) / cfg.batch_size;
    const long total_steps = static_cast<long>(cfg.epochs) * batches;
    nn::AdamW opt;
    Rng rng(cfg.seed);
    std::vector<int> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    model->params.zero_grads();

    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (int b = 0; b < batches; ++b) {
            const int lo = b * cfg.batch_size;
            const int hi = std::min(n, lo + cfg.batch_size);
            nn::Tape tape;
            nn::Var total;
            for (int i = lo; i < hi; ++i) {
                const auto idx = static_cast<std::size_t>(order[i]);
                nn::Var states = model->encode_states(tape, src_ids[idx]);
                nn::Var logits = model->decode_logits(tape, states, dec_inputs[idx]);
                nn::Var one = nn::cross_entropy_mean(logits, dec_targets[idx]);
                total = total.valid() ? nn::add(total, one) : one;
            }
            nn::Var loss = nn::scale(total, 1.0 / static_cast<double>(hi - lo));
            tape.backward(loss);
            const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
            const double lr = cfg.lr_max * std::pow(cfg.lr_min / cfg.lr_max, frac);
            opt.step(model->params, lr);
            ++step;
        }
    }
    return StudentExtractor(std::move(model));
}

std::vector<std::string> StudentExtractor::extract(const std::string& sentence) const {
    if (!model_) throw UsageError("student extractor is untrained");
    return parse_student_target(model_->greedy_decode(sentence));
}

void StudentExtractor::save(const std::filesystem::path& path) const {
    if (!model_) throw UsageError("student extractor is untrained");
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto* p : model_->params.all()) {
        tensors.push_back(
            {{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
    }
    const nlohmann::json header = {{"config", student_config_to_json(model_->cfg)},
                                   {"vocab", model_->vocab.tokens()},
                                   {"tensors", tensors}};
    const std::string header_text = header.dump();

    std::string buf(kStudentMagic, 8);
    append_u64(buf, header_text.size());
    buf += header_text;
    for (const auto* p : model_->params.all()) {
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

StudentExtractor StudentExtractor::load(const std::filesystem::path& path) {
    const std::string buf = io::slurp(path);
    if (buf.size() < 16 || buf.compare(0, 8, kStudentMagic, 8) != 0) {
        throw ParseError("not a student checkpoint: " + path.string());
    }
    const std::uint64_t header_len = read_u64(buf, 8);
    if (16 + header_len > buf.size()) throw ParseError("truncated student checkpoint header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(buf.substr(16, header_len));
    } catch (const std::exception& e) {
        throw ParseError(std::string("bad student checkpoint header: ") + e.what());
    }

    const StudentConfig cfg = student_config_from_json(header.at("config"));
    std::vector<std::string> tokens;
    for (const auto& tok : header.at("vocab")) tokens.push_back(tok.get<std::string>());
    auto model = std::make_unique<Model>(cfg, text::Vocabulary::from_tokens(tokens), 0);

    const auto& tensors = header.at("tensors");
    if (tensors.size() != model->params.all().size()) {
        throw ParseError("student checkpoint tensor count mismatch");
    }
    std::size_t pos = 16 + header_len;
    for (const auto& desc : tensors) {
        nn::Param& p = model->params.at(desc.at("name").get<std::string>());
        const auto rows = desc.at("rows").get<Eigen::Index>();
        const auto cols = desc.at("cols").get<Eigen::Index>();
        if (rows != p.value.rows() || cols != p.value.cols()) {
            throw ParseError("student checkpoint tensor shape mismatch for " + p.name);
        }
        const std::size_t bytes = static_cast<std::size_t>(rows * cols) * 8;
        if (pos + bytes > buf.size()) throw ParseError("truncated student checkpoint data");
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) {
                double d = 0.0;
                std::memcpy(&d, buf.data() + pos, 8);
                p.value(r, c) = d;
                pos += 8;
            }
        }
    }
    return StudentExtractor(std::move(model));
}

double exact_match_accuracy(const Extractor& extractor,
                            const std::vector<ExtractionPair>& pairs) {
    if (pairs.empty()) throw UsageError("exact match needs at least one pair");
    long hits = 0;
    for (const auto& p : pairs) {
        const auto predicted = extractor.extract(p.sentence_text);
        std::vector<std::string> want;
        for (const auto& f : p.facts) want.push_back(normalize_tokens(f));
        std::vector<std::string> got;
        for (const auto& f : predicted) got.push_back(normalize_tokens(f));
        if (want == got) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

std::vector<std::string> parse_fact_reply(const std::string& reply) {
    if (auto parsed = try_parse_fact_list(text::trim(reply))) return *parsed;
    if (auto repaired = try_parse_fact_list(text::trim(strip_code_fences(reply)))) {
        return *repaired;
    }
    throw ParseError("llm fact reply is not a JSON list of strings");
}

LlmExtractor::LlmExtractor(std::shared_ptr<llm::Client> client, llm::PromptTemplate tmpl)
    : client_(std::move(client)), tmpl_(std::move(tmpl)) {
    if (!client_) throw UsageError("llm extractor needs a client");
}

std::vector<std::string> LlmExtractor::extract(const std::string& sentence) const {
    const std::string reply =
        client_->complete("extract_facts", tmpl_, {{"input", sentence}});
    try {
        return parse_fact_reply(reply);
    } catch (const ParseError&) {
        throw ParseError("llm fact reply for \"" + sentence + "\" is not a JSON list of strings");
    }
}

std::vector<double> inverse_token_frequency_scores(
    const std::vector<corpus::Sentence>& sentences) {
    std::map<std::string, long> freq;
    std::vector<std::vector<std::string>> tokenized;
    tokenized.reserve(sentences.size());
    for (const auto& s : sentences) {
        tokenized.push_back(text::word_tokens(s.text));
        for (const auto& t : tokenized.back()) ++freq[t];
    }
    std::vector<double> scores;
    scores.reserve(sentences.size());
    for (const auto& tokens : tokenized) {
        double score = 0.0;
        for (const auto& t : tokens) score += 1.0 / static_cast<double>(freq[t]);
        scores.push_back(score);
    }
    return scores;
}

std::vector<RankedSentence> rank_by_inverse_token_frequency(
    const std::vector<corpus::Sentence>& sentences) {
    const auto scores = inverse_token_frequency_scores(sentences);
    std::vector<RankedSentence> out;
    out.reserve(sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) out.push_back({sentences[i], scores[i]});
    std::stable_sort(out.begin(), out.end(), [](const RankedSentence& a, const RankedSentence& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.sentence.text < b.sentence.text;
    });
    return out;
}

std::vector<corpus::Sentence> build_distillation_subset(
    const std::vector<corpus::Sentence>& sentences, const Eigen::MatrixXd& aux_embeddings,
    int k_clusters, int budget, std::uint64_t seed) {
    const int n = static_cast<int>(sentences.size());
    if (k_clusters < 1 || budget < 1) throw UsageError("clusters and budget must be positive");
    if (k_clusters > n) throw UsageError("more clusters than sentences");
    if (aux_embeddings.rows() != n) {
        throw ContractError("one auxiliary embedding per sentence required");
    }

    const auto scores = inverse_token_frequency_scores(sentences);
    const auto assign = sampling::cluster_sentences(aux_embeddings, k_clusters, seed);

    std::vector<std::vector<int>> clusters(static_cast<std::size_t>(k_clusters));
    for (int i = 0; i < n; ++i) {
        clusters[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])].push_back(i);
    }
    for (auto& members : clusters) {
        std::sort(members.begin(), members.end(), [&](int a, int b) {
            const auto sa = scores[static_cast<std::size_t>(a)];
            const auto sb = scores[static_cast<std::size_t>(b)];
            if (sa != sb) return sa > sb;
            if (sentences[static_cast<std::size_t>(a)].text !=
                sentences[static_cast<std::size_t>(b)].text) {
                return sentences[static_cast<std::size_t>(a)].text <
                       sentences[static_cast<std::size_t>(b)].text;
            }
            return a < b;
        });
    }

    std::vector<corpus::Sentence> picked;
    const int want = std::min(budget, n);
    for (std::size_t round = 0; static_cast<int>(picked.size()) < want; ++round) {
        for (const auto& members : clusters) {
            if (static_cast<int>(picked.size()) >= want) break;
            if (round < members.size()) {
                picked.push_back(sentences[static_cast<std::size_t>(members[round])]);
            }
        }
    }
    return picked;
}

void save_facts(const std::filesystem::path& jsonl_path, const std::vector<Fact>& facts) {
    std::vector<io::json> records;
    records.reserve(facts.size());
    for (const auto& f : facts) {
        records.push_back({{"sentence_id", f.sentence_id},
                           {"fact", f.text},
                           {"extractor", extractor_kind_name(f.extractor)}});
    }
    io::write_jsonl(jsonl_path, records);
}

std::vector<Fact> load_facts(const std::filesystem::path& jsonl_path) {
    std::vector<Fact> out;
    for (const auto& r : io::read_jsonl(jsonl_path)) {
        Fact f;
        f.text = r.at("fact").get<std::string>();
        f.sentence_id = r.at("sentence_id").get<std::string>();
        f.extractor = extractor_kind_from_name(r.at("extractor").get<std::string>());
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace factline::extraction
