#include "factline/training.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "factline/io.hpp"
#include "factline/nn/optim.hpp"

namespace factline::training {

const std::vector<std::string>& all_tasks() {
    static const std::vector<std::string> tasks = {"T", "C", "SD", "NLI", "EC", "ER"};
    return tasks;
}

void TrainConfig::validate() const {
    if (!(lr_min > 0.0 && lr_min < lr_max)) throw ConfigError("need 0 < lr_min < lr_max");
    if (cycle_epochs <= 0 || batches_per_epoch <= 0 || batch_size <= 0 || epochs < 0) {
        throw ConfigError("schedule counts must be positive (epochs may be zero)");
    }
    if (active.empty()) throw ConfigError("no active tasks");
    std::set<std::string> seen;
    for (const auto& task : active) {
        if (std::find(all_tasks().begin(), all_tasks().end(), task) == all_tasks().end()) {
            throw ConfigError("unknown task id '" + task + "'");
        }
        if (!seen.insert(task).second) throw ConfigError("duplicate task id '" + task + "'");
    }
    if (!seen.count("T")) throw ConfigError("task T must be active");
    for (const auto& [task, w] : task_weights) {
        if (w <= 0.0) throw ConfigError("task weight for '" + task + "' must be positive");
    }
    if (window != 0 && window < static_cast<int>(active.size())) {
        throw ConfigError("accumulation window smaller than the active task count");
    }
    if (er_negative_spans < 0 || er_negative_pairs < 0) {
        throw ConfigError("negative sample counts must be nonnegative");
    }
}

// --- losses -----------------------------------------------------------------

double bce_logit_loss(double logit) {
    return std::max(-logit, 0.0) + std::log1p(std::exp(-std::abs(logit)));
}

nn::Var triplet_bce_loss(nn::Tape& t, nn::Var anchor, nn::Var positive, nn::Var negative) {
    (void)t;
    nn::Var delta = nn::sub(nn::row_dot(anchor, positive), nn::row_dot(anchor, negative));
    return nn::mean_all(nn::softplus(nn::neg(delta)));
}

nn::Var ec_quadruplet_loss(nn::Tape& t, nn::Var ent_premise, nn::Var ent_hypothesis,
                           nn::Var con_premise, nn::Var con_hypothesis) {
    (void)t;
    nn::Var delta = nn::sub(nn::row_dot(ent_premise, ent_hypothesis),
                            nn::row_dot(con_premise, con_hypothesis));
    return nn::mean_all(nn::softplus(nn::neg(delta)));
}

nn::Var single_label_loss(nn::Var logits, const std::vector<int>& targets) {
    if (static_cast<int>(targets.size()) != logits.rows()) {
        throw ContractError("one target per logit row required");
    }
    for (const int y : targets) {
        if (y < 0 || y >= logits.cols()) throw ContractError("class target out of range");
    }
    return nn::cross_entropy_mean(logits, targets);
}

nn::Var multi_label_loss(nn::Var logits, const nn::Mat& targets01) {
    if (targets01.rows() != logits.rows() || targets01.cols() != logits.cols()) {
        throw ContractError("multi-label target shape mismatch");
    }
    return nn::bce_with_logits_mean(logits, targets01);
}

nn::Var classification_loss(nn::Tape& t, const encoder::FactEncoder& enc, nn::Var emb,
                            const std::vector<const LabeledFact*>& batch) {
    if (static_cast<int>(batch.size()) != emb.rows()) {
        throw ContractError("one labeled fact per embedding row required");
    }
    const auto& cfg = enc.config();
    const int n = static_cast<int>(batch.size());
    std::vector<int> category(static_cast<std::size_t>(n));
    std::vector<int> health(static_cast<std::size_t>(n));
    std::vector<int> comparison(static_cast<std::size_t>(n));
    nn::Mat obs = nn::Mat::Zero(n, cfg.observation_classes);
    nn::Mat anat = nn::Mat::Zero(n, cfg.anatomy_classes);
    for (int i = 0; i < n; ++i) {
        const LabeledFact& f = *batch[static_cast<std::size_t>(i)];
        category[static_cast<std::size_t>(i)] = f.category;
        health[static_cast<std::size_t>(i)] = f.health;
        comparison[static_cast<std::size_t>(i)] = f.comparison;
        for (const int o : f.observations) {
            if (o < 0 || o >= cfg.observation_classes) {
                throw ContractError("observation label out of range");
            }
            obs(i, o) = 1.0;
        }
        for (const int a : f.anatomy) {
            if (a < 0 || a >= cfg.anatomy_classes) throw ContractError("anatomy label out of range");
            anat(i, a) = 1.0;
        }
    }
    nn::Var loss = single_label_loss(enc.head_logits_var(t, emb, "category"), category);
    loss = nn::add(loss, single_label_loss(enc.head_logits_var(t, emb, "health"), health));
    loss = nn::add(loss, single_label_loss(enc.head_logits_var(t, emb, "comparison"), comparison));
    loss = nn::add(loss, multi_label_loss(enc.head_logits_var(t, emb, "observations"), obs));
    loss = nn::add(loss, multi_label_loss(enc.head_logits_var(t, emb, "anatomy"), anat));
    return loss;
}

nn::Var sd_loss(nn::Tape& t, const encoder::FactEncoder& enc, nn::Var emb_row,
                const std::vector<int>& tokens_with_eos) {
    if (tokens_with_eos.size() < 2) throw ContractError("decoder target needs bos and eos");
    std::vector<int> inputs(tokens_with_eos.begin(), tokens_with_eos.end() - 1);
    std::vector<int> targets(tokens_with_eos.begin() + 1, tokens_with_eos.end());
    nn::Var logits = enc.decode_logits_var(t, emb_row, inputs);
    return single_label_loss(logits, targets);
}

nn::Var er_loss(nn::Tape& t, const encoder::FactEncoder& enc, const ErExample& example, Rng& rng,
                int negative_spans, int negative_pairs) {
    const auto& cfg = enc.config();
    const std::vector<int> seq = enc.tokenize(example.text);
    const int content_len = static_cast<int>(seq.size()) - 1;
    if (content_len <= 0) throw ContractError("er example has no tokens");

    // gold spans surviving truncation, shifted past the leading CLS row
    std::vector<std::pair<int, int>> spans;
    std::vector<int> span_targets;
    std::set<std::pair<int, int>> taken;
    std::vector<int> kept(example.entities.size(), -1);
    for (std::size_t i = 0; i < example.entities.size(); ++i) {
        const auto& e = example.entities[i];
        if (e.start < 0 || e.end <= e.start || e.end > content_len) continue;
        if (e.type < 0 || e.type >= cfg.entity_types) throw ContractError("entity type out of range");
        kept[i] = static_cast<int>(spans.size());
        spans.emplace_back(e.start + 1, e.end + 1);
        span_targets.push_back(e.type + 1);  // class 0 is the null span
        taken.insert(spans.back());
    }
    const int n_gold = static_cast<int>(spans.size());

    for (int added = 0, attempts = 0; added < negative_spans && attempts < 20 * negative_spans;
         ++attempts) {
        const int start = static_cast<int>(rng.below(static_cast<std::size_t>(content_len)));
        const int max_w = std::min(cfg.span_max_width, content_len - start);
        const int width = 1 + static_cast<int>(rng.below(static_cast<std::size_t>(max_w)));
        const std::pair<int, int> span = {start + 1, start + width + 1};
        if (!taken.insert(span).second) continue;
        spans.push_back(span);
        span_targets.push_back(0);
        ++added;
    }

    nn::Var states = enc.token_states_var(t, seq);
    nn::Var loss = single_label_loss(enc.span_logits_var(t, states, spans), span_targets);

    if (n_gold >= 2) {
        std::map<std::pair<int, int>, std::vector<int>> positives;
        for (const auto& r : example.relations) {
            if (r.head < 0 || r.tail < 0 || r.head >= static_cast<int>(kept.size()) ||
                r.tail >= static_cast<int>(kept.size())) {
                throw ContractError("relation references a missing entity");
            }
            if (r.type < 0 || r.type >= cfg.relation_types) {
                throw ContractError("relation type out of range");
            }
            const int h = kept[static_cast<std::size_t>(r.head)];
            const int tl = kept[static_cast<std::size_t>(r.tail)];
            if (h < 0 || tl < 0 || h == tl) continue;
            positives[{h, tl}].push_back(r.type);
        }
        std::vector<std::pair<int, int>> pairs;
        std::vector<std::vector<int>> pair_types;
        for (const auto& [pair, types] : positives) {
            pairs.push_back(pair);
            pair_types.push_back(types);
        }
        std::set<std::pair<int, int>> pair_taken(pairs.begin(), pairs.end());
        for (int added = 0, attempts = 0; added < negative_pairs && attempts < 20 * negative_pairs;
             ++attempts) {
            const int h = static_cast<int>(rng.below(static_cast<std::size_t>(n_gold)));
            const int tl = static_cast<int>(rng.below(static_cast<std::size_t>(n_gold)));
            if (h == tl) continue;
            if (!pair_taken.insert({h, tl}).second) continue;
            pairs.emplace_back(h, tl);
            pair_types.emplace_back();
            ++added;
        }
        if (!pairs.empty()) {
            nn::Mat targets = nn::Mat::Zero(static_cast<Eigen::Index>(pairs.size()),
                                            cfg.relation_types);
            for (std::size_t i = 0; i < pair_types.size(); ++i) {
                for (const int type : pair_types[i]) targets(static_cast<Eigen::Index>(i), type) = 1.0;
            }
            nn::Var rel = enc.relation_logits_var(t, states, spans, pairs);
            loss = nn::add(loss, multi_label_loss(rel, targets));
        }
    }
    return loss;
}

// --- schedule and interleaving ------------------------------------------------

double lr_schedule(long step, const TrainConfig& cfg) {
    const long cycle_steps =
        static_cast<long>(cfg.cycle_epochs) * static_cast<long>(cfg.batches_per_epoch);
    const double f =
        static_cast<double>(((step % cycle_steps) + cycle_steps) % cycle_steps) /
        static_cast<double>(cycle_steps);
    return cfg.lr_max * std::pow(cfg.lr_min / cfg.lr_max, f);
}

TaskInterleaver::TaskInterleaver(std::vector<std::string> tasks,
                                 const std::map<std::string, double>& weights, int window,
                                 std::uint64_t seed)
    : tasks_(std::move(tasks)), window_(window), rng_(seed) {
    const int k = static_cast<int>(tasks_.size());
    if (k == 0) throw ConfigError("no tasks to interleave");
    if (window_ < k) throw ConfigError("accumulation window smaller than the task count");

    std::vector<double> p;
    double total = 0.0;
    for (const auto& task : tasks_) {
        const auto it = weights.find(task);
        const double w = it == weights.end() ? 1.0 : it->second;
        if (w <= 0.0) throw ConfigError("task weight for '" + task + "' must be positive");
        p.push_back(w);
        total += w;
    }
    for (auto& w : p) w /= total;

    // One slot per window is guaranteed per task; the remaining window - k
    // slots are drawn from the residual distribution that restores the target
    // long-run frequencies, clamped when a weight is too small to need any.
    residual_.assign(p.size(), 0.0);
    if (window_ > k) {
        double mass = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            residual_[i] = std::max(window_ * p[i] - 1.0, 0.0) / (window_ - k);
            mass += residual_[i];
        }
        if (mass <= 0.0) {
            residual_.assign(p.size(), 1.0 / static_cast<double>(p.size()));
        } else {
            for (auto& q : residual_) q /= mass;
        }
    }
}

std::vector<std::string> TaskInterleaver::next_window() {
    std::vector<std::string> window;
    window.reserve(static_cast<std::size_t>(window_));
    for (const auto& task : tasks_) window.push_back(task);
    for (int extra = static_cast<int>(tasks_.size()); extra < window_; ++extra) {
        double u = rng_.uniform();
        std::size_t pick = residual_.size() - 1;
        for (std::size_t i = 0; i < residual_.size(); ++i) {
            u -= residual_[i];
            if (u <= 0.0) {
                pick = i;
                break;
            }
        }
        window.push_back(tasks_[pick]);
    }
    rng_.shuffle(window);
    return window;
}

std::string TaskInterleaver::next() {
    if (cursor_ >= buffer_.size()) {
        buffer_ = next_window();
        cursor_ = 0;
    }
    return buffer_[cursor_++];
}

// --- the loop ----------------------------------------------------------------

namespace {

void require_datasets(const TrainConfig& cfg, const Datasets& data) {
    for (const auto& task : cfg.active) {
        bool ok = true;
        if (task == "T") ok = !data.triplets.empty();
        else if (task == "C") ok = !data.facts.empty();
        else if (task == "SD") ok = !data.sentences.empty();
        else if (task == "NLI") ok = !data.nli.empty();
        else if (task == "EC") ok = !data.ec_entail.empty() && !data.ec_contra.empty();
        else if (task == "ER") ok = !data.er.empty();
        if (!ok) throw InputError("missing dataset for active task " + task);
    }
}

std::vector<std::vector<int>> tokenize_all(const encoder::FactEncoder& enc,
                                           const std::vector<std::string>& texts) {
    std::vector<std::vector<int>> seqs;
    seqs.reserve(texts.size());
    for (const auto& s : texts) seqs.push_back(enc.tokenize(s));
    return seqs;
}

nn::Var build_task_loss(nn::Tape& tape, const std::string& task, const TrainConfig& cfg,
                        const Datasets& data, encoder::FactEncoder& model, Rng& rng) {
    const int b = cfg.batch_size;
    const int pd = model.config().projection_dim;
    if (task == "T") {
        std::vector<const TripletExample*> batch;
        for (int i = 0; i < b; ++i) batch.push_back(&data.triplets[rng.below(data.triplets.size())]);
        std::vector<std::string> texts;
        texts.reserve(static_cast<std::size_t>(3 * b));
        for (const auto* ex : batch) texts.push_back(ex->anchor);
        for (const auto* ex : batch) texts.push_back(ex->positive);
        for (const auto* ex : batch) texts.push_back(ex->negative);
        nn::Var emb = model.encode_var(tape, tokenize_all(model, texts));
        nn::Var a = nn::block(emb, 0, 0, b, pd);
        nn::Var p = nn::block(emb, b, 0, b, pd);
        nn::Var n = nn::block(emb, 2 * b, 0, b, pd);
        return triplet_bce_loss(tape, a, p, n);
    }
    if (task == "C") {
        std::vector<const LabeledFact*> batch;
        std::vector<std::string> texts;
        for (int i = 0; i < b; ++i) {
            batch.push_back(&data.facts[rng.below(data.facts.size())]);
            texts.push_back(batch.back()->text);
        }
        nn::Var emb = model.encode_var(tape, tokenize_all(model, texts));
        return classification_loss(tape, model, emb, batch);
    }
    if (task == "SD") {
        std::vector<std::string> texts;
        for (int i = 0; i < b; ++i) texts.push_back(data.sentences[rng.below(data.sentences.size())].text);
        nn::Var emb = model.encode_var(tape, tokenize_all(model, texts));
        nn::Var total;
        for (int i = 0; i < b; ++i) {
            nn::Var row = nn::block(emb, i, 0, 1, pd);
            nn::Var one = sd_loss(tape, model, row, model.tokenize(texts[static_cast<std::size_t>(i)], true));
            total = total.valid() ? nn::add(total, one) : one;
        }
        return nn::scale(total, 1.0 / static_cast<double>(b));
    }
    if (task == "NLI") {
        std::vector<const NliExample*> batch;
        std::vector<std::string> texts;
        std::vector<int> labels;
        for (int i = 0; i < b; ++i) batch.push_back(&data.nli[rng.below(data.nli.size())]);
        for (const auto* ex : batch) texts.push_back(ex->premise);
        for (const auto* ex : batch) texts.push_back(ex->hypothesis);
        for (const auto* ex : batch) labels.push_back(ex->label);
        nn::Var emb = model.encode_var(tape, tokenize_all(model, texts));
        nn::Var prem = nn::block(emb, 0, 0, b, pd);
        nn::Var hyp = nn::block(emb, b, 0, b, pd);
        return single_label_loss(model.nli_logits_var(tape, prem, hyp), labels);
    }
    if (task == "EC") {
        std::vector<std::string> texts;
        for (int i = 0; i < b; ++i) {
            const auto& e = data.ec_entail[rng.below(data.ec_entail.size())];
            texts.push_back(e.first);
            texts.push_back(e.second);
        }
        for (int i = 0; i < b; ++i) {
            const auto& c = data.ec_contra[rng.below(data.ec_contra.size())];
            texts.push_back(c.first);
            texts.push_back(c.second);
        }
        nn::Var emb = model.encode_var(tape, tokenize_all(model, texts));
        std::vector<int> ep_idx, eh_idx, cp_idx, ch_idx;
        for (int i = 0; i < b; ++i) {
            ep_idx.push_back(2 * i);
            eh_idx.push_back(2 * i + 1);
            cp_idx.push_back(2 * b + 2 * i);
            ch_idx.push_back(2 * b + 2 * i + 1);
        }
        return ec_quadruplet_loss(tape, nn::gather_rows(emb, ep_idx), nn::gather_rows(emb, eh_idx),
                                  nn::gather_rows(emb, cp_idx), nn::gather_rows(emb, ch_idx));
    }
    if (task == "ER") {
        nn::Var total;
        for (int i = 0; i < b; ++i) {
            const auto& ex = data.er[rng.below(data.er.size())];
            nn::Var one = er_loss(tape, model, ex, rng, cfg.er_negative_spans, cfg.er_negative_pairs);
            total = total.valid() ? nn::add(total, one) : one;
        }
        return nn::scale(total, 1.0 / static_cast<double>(b));
    }
    throw ContractError("unknown task id '" + task + "'");
}

}  // namespace

double triplet_ranking_accuracy(const encoder::EmbeddingBackend& model,
                                const std::vector<TripletExample>& triplets) {
    if (triplets.empty()) return 0.0;
    long hits = 0;
    const std::size_t chunk = 64;
    for (std::size_t at = 0; at < triplets.size(); at += chunk) {
        const std::size_t n = std::min(chunk, triplets.size() - at);
        std::vector<std::string> texts;
        for (std::size_t i = 0; i < n; ++i) {
            texts.push_back(triplets[at + i].anchor);
            texts.push_back(triplets[at + i].positive);
            texts.push_back(triplets[at + i].negative);
        }
        const Eigen::MatrixXd emb = model.encode(texts);
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::Index r = static_cast<Eigen::Index>(3 * i);
            const double sp = emb.row(r).dot(emb.row(r + 1));
            const double sn = emb.row(r).dot(emb.row(r + 2));
            if (sp > sn) ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(triplets.size());
}

TrainResult train(const TrainConfig& cfg, const Datasets& data, encoder::FactEncoder& model) {
    cfg.validate();
    require_datasets(cfg, data);

    const int k = static_cast<int>(cfg.active.size());
    const int window = cfg.window == 0 ? k : cfg.window;
    Rng master(cfg.seed);
    TaskInterleaver interleaver(cfg.active, cfg.task_weights, window, master.fork(1).next_u64());
    Rng data_rng = master.fork(2);

    nn::AdamW opt;
    model.params().zero_grads();

    TrainResult res;
    for (const auto& task : cfg.active) res.task_batches[task] = 0;

    long gstep = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (int b = 0; b < cfg.batches_per_epoch; ++b, ++gstep) {
            const double lr = lr_schedule(gstep, cfg);
            const auto slots = interleaver.next_window();
            std::set<std::string> touched;
            for (const auto& task : slots) {
                nn::Tape tape;
                nn::Var loss = build_task_loss(tape, task, cfg, data, model, data_rng);
                tape.backward(loss);
                res.history.push_back({gstep, task, loss.val()(0, 0), lr});
                ++res.task_batches[task];
                touched.insert(task);
            }
            if (cfg.check_accumulation) {
                for (const auto& task : cfg.active) {
                    if (!touched.count(task)) {
                        throw ContractError("optimizer step missing gradients for task " + task);
                    }
                }
            }
            opt.step(model.params(), lr);
        }
        if (!data.val_triplets.empty()) {
            res.metrics.push_back(
                {epoch, "val_triplet_accuracy", triplet_ranking_accuracy(model, data.val_triplets)});
        }
    }
    return res;
}

void save_loss_history(const std::filesystem::path& csv_path,
                       const std::vector<LossRecord>& history) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(history.size());
    for (const auto& r : history) {
        rows.push_back({std::to_string(r.step), r.task, io::format_double(r.loss),
                        io::format_double(r.lr)});
    }
    io::write_csv(csv_path, {"step", "task", "loss", "lr"}, rows);
}

}  // namespace factline::training
