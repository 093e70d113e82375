#include "factline/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "factline/common.hpp"
#include "factline/io.hpp"
#include "factline/text.hpp"

namespace factline::evaluation {

namespace {

void check_schema(const GoldLabelVector& x, const GoldLabelVector& y) {
    if (x.observations.size() != y.observations.size() || x.anatomy.size() != y.anatomy.size()) {
        throw ContractError("gold label vectors use different schemas");
    }
}

// candidate order: similarity descending, index ascending on ties
std::vector<std::size_t> ranked_candidates(const std::vector<double>& scores, std::size_t query) {
    std::vector<std::size_t> order;
    order.reserve(scores.size() - 1);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (i != query) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

std::vector<double> query_scores(const SimFn& sim, std::size_t query, std::size_t count) {
    std::vector<double> scores(count, 0.0);
    for (std::size_t i = 0; i < count; ++i) {
        if (i != query) scores[i] = sim(query, i);
    }
    return scores;
}

double jaccard_bags(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& t : a) inter += b.count(t);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

double macro_accuracy(const std::vector<SimPair>& pairs, double threshold, double* a_e_out,
                      double* a_c_out) {
    long ent = 0, ent_hit = 0, con = 0, con_hit = 0;
    for (const auto& p : pairs) {
        if (p.entailment) {
            ++ent;
            if (p.similarity >= threshold) ++ent_hit;
        } else {
            ++con;
            if (p.similarity < threshold) ++con_hit;
        }
    }
    const double a_e = ent == 0 ? 0.0 : 100.0 * static_cast<double>(ent_hit) / ent;
    const double a_c = con == 0 ? 0.0 : 100.0 * static_cast<double>(con_hit) / con;
    if (a_e_out) *a_e_out = a_e;
    if (a_c_out) *a_c_out = a_c;
    return (a_e + a_c) / 2.0;
}

std::string svg_escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

bool label_entails(const GoldLabelVector& x, const GoldLabelVector& y) {
    check_schema(x, y);
    for (std::size_t i = 0; i < y.observations.size(); ++i) {
        if (y.observations[i] != -1 && x.observations[i] != y.observations[i]) return false;
    }
    for (std::size_t i = 0; i < y.anatomy.size(); ++i) {
        if (y.anatomy[i] != 0 && x.anatomy[i] == 0) return false;
    }
    return true;
}

bool label_contradicts(const GoldLabelVector& x, const GoldLabelVector& y) {
    check_schema(x, y);
    for (std::size_t i = 0; i < x.observations.size(); ++i) {
        const auto a = x.observations[i];
        const auto b = y.observations[i];
        if ((a == 0 && b == 1) || (a == 1 && b == 0)) return true;
    }
    return false;
}

double rank_auc(const std::vector<double>& positives, const std::vector<double>& negatives) {
    if (positives.empty() || negatives.empty()) {
        throw UsageError("rank_auc needs scores of both classes");
    }
    struct Item {
        double score;
        bool positive;
    };
    std::vector<Item> items;
    items.reserve(positives.size() + negatives.size());
    for (const double s : positives) items.push_back({s, true});
    for (const double s : negatives) items.push_back({s, false});
    std::sort(items.begin(), items.end(),
              [](const Item& a, const Item& b) { return a.score < b.score; });

    // midranks over tied score runs, 1-based
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < items.size()) {
        std::size_t j = i;
        while (j < items.size() && items[j].score == items[i].score) ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (items[k].positive) pos_rank_sum += midrank;
        }
        i = j;
    }
    const double np = static_cast<double>(positives.size());
    const double nn = static_cast<double>(negatives.size());
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

RankingResult sentence_ranking_eval(const SimFn& sim, std::size_t count,
                                    const std::vector<GoldLabelVector>& labels,
                                    const std::vector<int>& ks) {
    if (count < 2) throw UsageError("sentence ranking needs at least two sentences");
    if (labels.size() != count) throw ContractError("one gold vector per sentence required");
    for (const int k : ks) {
        if (k < 1) throw UsageError("ranking cutoffs must be positive");
    }

    RankingResult res;
    double auc_sum = 0.0;
    std::map<int, double> a_sum, c_sum;
    for (std::size_t q = 0; q < count; ++q) {
        const auto scores = query_scores(sim, q, count);
        const auto order = ranked_candidates(scores, q);
        std::vector<char> relevant(order.size()), contra(order.size());
        std::vector<double> pos_scores, neg_scores;
        for (std::size_t r = 0; r < order.size(); ++r) {
            const std::size_t i = order[r];
            relevant[r] = label_entails(labels[q], labels[i]) ||
                          label_entails(labels[i], labels[q]);
            contra[r] = label_contradicts(labels[q], labels[i]);
            (relevant[r] ? pos_scores : neg_scores).push_back(scores[i]);
        }
        if (!pos_scores.empty() && !neg_scores.empty()) {
            auc_sum += rank_auc(pos_scores, neg_scores);
            ++res.auc_queries;
        }
        for (const int k : ks) {
            const std::size_t kk = std::min<std::size_t>(k, order.size());
            double prefix_acc = 0.0;
            long rel_seen = 0, con_seen = 0;
            for (std::size_t r = 0; r < kk; ++r) {
                if (relevant[r]) ++rel_seen;
                if (contra[r]) ++con_seen;
                prefix_acc += static_cast<double>(rel_seen) / static_cast<double>(r + 1);
            }
            a_sum[k] += kk == 0 ? 0.0 : prefix_acc / static_cast<double>(kk);
            c_sum[k] += static_cast<double>(con_seen);
        }
    }
    res.auc = res.auc_queries == 0 ? 0.0 : auc_sum / res.auc_queries;
    for (const int k : ks) {
        res.a_at_k[k] = a_sum[k] / static_cast<double>(count);
        res.c_at_k[k] = c_sum[k] / static_cast<double>(count);
    }
    return res;
}

std::map<int, double> report_jaccard_eval(const SimFn& sim, std::size_t count,
                                          const std::vector<std::set<std::string>>& tag_bags,
                                          const std::vector<int>& ks) {
    if (count < 2) throw UsageError("report ranking needs at least two reports");
    if (tag_bags.size() != count) throw ContractError("one tag bag per report required");
    std::map<int, double> j_sum;
    for (std::size_t q = 0; q < count; ++q) {
        const auto order = ranked_candidates(query_scores(sim, q, count), q);
        for (const int k : ks) {
            const std::size_t kk = std::min<std::size_t>(k, order.size());
            double acc = 0.0;
            for (std::size_t r = 0; r < kk; ++r) {
                acc += jaccard_bags(tag_bags[q], tag_bags[order[r]]);
            }
            j_sum[k] += kk == 0 ? 0.0 : acc / static_cast<double>(kk);
        }
    }
    std::map<int, double> out;
    for (const int k : ks) out[k] = j_sum[k] / static_cast<double>(count);
    return out;
}

double tune_threshold(const std::vector<SimPair>& pairs) {
    bool has_ent = false, has_con = false;
    for (const auto& p : pairs) (p.entailment ? has_ent : has_con) = true;
    if (!has_ent || !has_con) {
        throw UsageError("threshold tuning needs both entailment and contradiction pairs");
    }
    std::vector<double> sims;
    sims.reserve(pairs.size());
    for (const auto& p : pairs) sims.push_back(p.similarity);
    std::sort(sims.begin(), sims.end());
    sims.erase(std::unique(sims.begin(), sims.end()), sims.end());

    std::vector<double> candidates;
    candidates.push_back(sims.front() - 1.0);
    for (std::size_t i = 0; i + 1 < sims.size(); ++i) {
        candidates.push_back((sims[i] + sims[i + 1]) / 2.0);
    }
    candidates.push_back(sims.back() + 1.0);

    double best_t = candidates.front();
    double best_acc = -1.0;
    for (const double t : candidates) {
        const double acc = macro_accuracy(pairs, t, nullptr, nullptr);
        if (acc > best_acc) {
            best_acc = acc;
            best_t = t;
        }
    }
    return best_t;
}

NliSimResult nli_similarity_eval(const std::vector<SimPair>& pairs, double bt) {
    if (!std::isfinite(bt)) throw UsageError("similarity threshold must be finite");
    NliSimResult r;
    r.bt = bt;
    r.a_ec = macro_accuracy(pairs, bt, &r.a_e, &r.a_c);
    return r;
}

double nli_classification_eval(const encoder::FactEncoder& model,
                               const std::vector<training::NliExample>& pairs) {
    if (pairs.empty()) throw UsageError("inference evaluation needs at least one pair");
    long correct = 0;
    constexpr std::size_t kChunk = 64;
    for (std::size_t lo = 0; lo < pairs.size(); lo += kChunk) {
        const std::size_t hi = std::min(pairs.size(), lo + kChunk);
        std::vector<std::string> texts;
        texts.reserve(2 * (hi - lo));
        for (std::size_t i = lo; i < hi; ++i) {
            texts.push_back(pairs[i].premise);
            texts.push_back(pairs[i].hypothesis);
        }
        const Eigen::MatrixXd embs = model.encode(texts);
        for (std::size_t i = lo; i < hi; ++i) {
            const Eigen::VectorXd prem = embs.row(2 * (i - lo)).transpose();
            const Eigen::VectorXd hyp = embs.row(2 * (i - lo) + 1).transpose();
            const Eigen::VectorXd logits = model.nli_logits(prem, hyp);
            Eigen::Index best = 0;
            logits.maxCoeff(&best);
            if (static_cast<int>(best) == pairs[i].label) ++correct;
        }
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(pairs.size());
}

double metric_entcont_auc(const PairScorer& scorer, const std::vector<LabeledPair>& pairs) {
    std::vector<double> pos, neg;
    for (const auto& p : pairs) {
        (p.entailment ? pos : neg).push_back(scorer(p.premise, p.hypothesis));
    }
    return rank_auc(pos, neg);
}

std::string labels_to_template_report(const std::vector<TemplateItem>& items,
                                      const annotation::LabelSpaces& spaces) {
    std::vector<std::string> sentences;
    for (const auto& item : items) {
        if (item.observation < 0 || item.observation >= spaces.gold_observations.size()) {
            throw InputError("unknown observation id " + std::to_string(item.observation));
        }
        if (item.anatomy >= spaces.anatomy.size()) {
            throw InputError("unknown anatomy id " + std::to_string(item.anatomy));
        }
        std::string s = item.present ? "" : "no ";
        s += spaces.gold_observations.label(item.observation);
        if (item.anatomy >= 0) {
            s += " in ";
            s += spaces.anatomy.label(item.anatomy);
        }
        sentences.push_back(std::move(s));
    }
    if (sentences.empty()) return "";
    return text::join(sentences, ". ") + ".";
}

RecoveryTable recovery_eval(const RecoverFn& recover, const std::vector<corpus::RawReport>& reports,
                            const metrics::ScorerRegistry& scorers,
                            const std::vector<std::string>& scorer_names) {
    for (const auto& name : scorer_names) {
        if (!scorers.has(name)) throw UsageError("unknown scorer \"" + name + "\"");
    }
    RecoveryTable table;
    std::map<std::string, double> sums;
    long successes = 0;
    for (const auto& report : reports) {
        RecoveryRow row;
        row.report_id = report.report_id;
        try {
            row.recovered = recover(report);
            for (const auto& name : scorer_names) {
                row.scores[name] = scorers.score(name, {report.text}, row.recovered);
            }
        } catch (const std::exception& e) {
            row.error = e.what();
            row.scores.clear();
        }
        if (row.error.empty()) {
            ++successes;
            for (const auto& [name, value] : row.scores) sums[name] += value;
        } else {
            ++table.failures;
        }
        table.rows.push_back(std::move(row));
    }
    if (successes > 0) {
        for (const auto& [name, sum] : sums) {
            table.means[name] = sum / static_cast<double>(successes);
        }
    }
    return table;
}

void save_ranking_csv(const std::filesystem::path& path,
                      const std::map<std::string, RankingResult>& rows) {
    std::vector<int> ks;
    if (!rows.empty()) {
        for (const auto& [k, v] : rows.begin()->second.a_at_k) ks.push_back(k);
    }
    std::vector<std::string> header = {"method", "AUC"};
    for (const int k : ks) header.push_back("a@" + std::to_string(k));
    for (const int k : ks) header.push_back("c@" + std::to_string(k));
    std::vector<std::vector<std::string>> body;
    for (const auto& [name, res] : rows) {
        std::vector<std::string> row = {name, io::format_double(res.auc)};
        for (const int k : ks) row.push_back(io::format_double(res.a_at_k.at(k)));
        for (const int k : ks) row.push_back(io::format_double(res.c_at_k.at(k)));
        body.push_back(std::move(row));
    }
    io::write_csv(path, header, body);
}

void save_jaccard_csv(const std::filesystem::path& path,
                      const std::map<std::string, std::map<int, double>>& rows) {
    std::vector<int> ks;
    if (!rows.empty()) {
        for (const auto& [k, v] : rows.begin()->second) ks.push_back(k);
    }
    std::vector<std::string> header = {"method"};
    for (const int k : ks) header.push_back("j@" + std::to_string(k));
    std::vector<std::vector<std::string>> body;
    for (const auto& [name, jk] : rows) {
        std::vector<std::string> row = {name};
        for (const int k : ks) row.push_back(io::format_double(jk.at(k)));
        body.push_back(std::move(row));
    }
    io::write_csv(path, header, body);
}

void save_nli_sim_csv(const std::filesystem::path& path,
                      const std::map<std::string, NliSimResult>& rows) {
    std::vector<std::vector<std::string>> body;
    for (const auto& [name, r] : rows) {
        body.push_back({name, io::format_double(r.bt), io::format_double(r.a_e),
                        io::format_double(r.a_c), io::format_double(r.a_ec)});
    }
    io::write_csv(path, {"method", "BT", "a_E", "a_C", "a_E+C"}, body);
}

void save_recovery_csv(const std::filesystem::path& path, const RecoveryTable& table) {
    std::set<std::string> names;
    for (const auto& row : table.rows) {
        for (const auto& [name, v] : row.scores) names.insert(name);
    }
    std::vector<std::string> header = {"report_id"};
    header.insert(header.end(), names.begin(), names.end());
    header.push_back("failure");
    std::vector<std::vector<std::string>> body;
    for (const auto& row : table.rows) {
        std::vector<std::string> out = {row.report_id};
        for (const auto& name : names) {
            const auto it = row.scores.find(name);
            out.push_back(it == row.scores.end() ? "" : io::format_double(it->second));
        }
        out.push_back(row.error);
        body.push_back(std::move(out));
    }
    std::vector<std::string> mean_row = {"mean"};
    for (const auto& name : names) {
        const auto it = table.means.find(name);
        mean_row.push_back(it == table.means.end() ? "" : io::format_double(it->second));
    }
    mean_row.push_back(table.failures == 0 ? "" : std::to_string(table.failures) + " failed");
    body.push_back(std::move(mean_row));
    io::write_csv(path, header, body);
}

void write_curves_svg(const std::filesystem::path& path, const std::vector<Curve>& curves,
                      const std::string& x_label, const std::string& y_label) {
    constexpr double kWidth = 640.0, kHeight = 420.0, kMargin = 60.0;
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    bool first = true;
    for (const auto& c : curves) {
        for (const auto& [x, y] : c.points) {
            if (first) {
                x_min = x_max = x;
                y_min = y_max = y;
                first = false;
            }
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    }
    if (x_max == x_min) x_max = x_min + 1.0;
    if (y_max == y_min) y_max = y_min + 1.0;
    const auto to_x = [&](double x) {
        return kMargin + (x - x_min) / (x_max - x_min) * (kWidth - 2.0 * kMargin);
    };
    const auto to_y = [&](double y) {
        return kHeight - kMargin - (y - y_min) / (y_max - y_min) * (kHeight - 2.0 * kMargin);
    };
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    svg << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "  <line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\""
        << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg << "  <line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin
        << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg << "  <text x=\"" << kWidth / 2.0 << "\" y=\"" << kHeight - kMargin / 3.0
        << "\" text-anchor=\"middle\" font-size=\"13\">" << svg_escape(x_label) << "</text>\n";
    svg << "  <text x=\"" << kMargin / 3.0 << "\" y=\"" << kHeight / 2.0
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 " << kMargin / 3.0
        << " " << kHeight / 2.0 << ")\">" << svg_escape(y_label) << "</text>\n";
    // axis extent labels
    svg << "  <text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 16.0
        << "\" font-size=\"11\">" << io::format_double(x_min) << "</text>\n";
    svg << "  <text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 16.0
        << "\" text-anchor=\"end\" font-size=\"11\">" << io::format_double(x_max) << "</text>\n";
    svg << "  <text x=\"" << kMargin - 6.0 << "\" y=\"" << kHeight - kMargin
        << "\" text-anchor=\"end\" font-size=\"11\">" << io::format_double(y_min) << "</text>\n";
    svg << "  <text x=\"" << kMargin - 6.0 << "\" y=\"" << kMargin + 4.0
        << "\" text-anchor=\"end\" font-size=\"11\">" << io::format_double(y_max) << "</text>\n";

    for (std::size_t c = 0; c < curves.size(); ++c) {
        const char* color = kColors[c % (sizeof(kColors) / sizeof(kColors[0]))];
        svg << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : curves[c].points) {
            svg << to_x(x) << "," << to_y(y) << " ";
        }
        svg << "\"/>\n";
        const double ly = kMargin + 16.0 * static_cast<double>(c);
        svg << "  <rect x=\"" << kWidth - kMargin - 110.0 << "\" y=\"" << ly - 8.0
            << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
        svg << "  <text x=\"" << kWidth - kMargin - 95.0 << "\" y=\"" << ly
            << "\" font-size=\"12\">" << svg_escape(curves[c].name) << "</text>\n";
    }
    svg << "</svg>\n";
    io::atomic_write(path, svg.str());
}

}  // namespace factline::evaluation
