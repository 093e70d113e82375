#include "factline/annotation.hpp"

#include <algorithm>

#include "factline/common.hpp"
#include "factline/corpus.hpp"
#include "factline/io.hpp"
#include "factline/text.hpp"

namespace factline::annotation {

std::string category_name(Category c) {
    switch (c) {
        case Category::AnatomicalFinding: return "anatomical finding";
        case Category::Disease: return "disease";
        case Category::TechnicalAssessment: return "technical assessment";
        case Category::TubesAndLines: return "tubes and lines";
        case Category::Device: return "device";
    }
    throw ContractError("bad Category");
}

Category category_from_name(std::string_view name) {
    const std::string n = text::lower(text::trim(name));
    for (int i = 0; i < kNumCategories; ++i) {
        if (n == category_name(static_cast<Category>(i))) return static_cast<Category>(i);
    }
    return Category::AnatomicalFinding;
}

std::string health_status_name(HealthStatus h) {
    switch (h) {
        case HealthStatus::Normal: return "normal";
        case HealthStatus::Abnormal: return "abnormal";
        case HealthStatus::Ambiguous: return "ambiguous";
        case HealthStatus::Unknown: return "unknown";
    }
    throw ContractError("bad HealthStatus");
}

HealthStatus health_status_from_name(std::string_view name) {
    const std::string n = text::lower(text::trim(name));
    for (int i = 0; i < kNumHealthStatuses; ++i) {
        if (n == health_status_name(static_cast<HealthStatus>(i))) return static_cast<HealthStatus>(i);
    }
    return HealthStatus::Unknown;
}

LabelVocabulary LabelVocabulary::load(const std::filesystem::path& path, int expected_size) {
    std::vector<std::string> labels;
    for (const auto& line : io::read_lines(path)) {
        const std::string t = text::trim(line);
        if (t.empty() || t[0] == '#') continue;
        labels.push_back(text::lower(t));
    }
    if (expected_size >= 0 && static_cast<int>(labels.size()) != expected_size) {
        throw ConfigError(path.string() + ": expected " + std::to_string(expected_size) +
                          " labels, found " + std::to_string(labels.size()));
    }
    return from_labels(std::move(labels));
}

LabelVocabulary LabelVocabulary::from_labels(std::vector<std::string> labels) {
    LabelVocabulary v;
    v.labels_ = std::move(labels);
    return v;
}

const std::string& LabelVocabulary::label(int id) const {
    if (id < 0 || id >= size()) throw ContractError("label id out of range");
    return labels_[static_cast<std::size_t>(id)];
}

std::optional<int> LabelVocabulary::find(std::string_view label) const {
    const std::string needle = text::lower(text::trim(label));
    for (int i = 0; i < size(); ++i) {
        if (labels_[static_cast<std::size_t>(i)] == needle) return i;
    }
    return std::nullopt;
}

LabelSpaces LabelSpaces::load(const std::filesystem::path& data_dir) {
    LabelSpaces s;
    s.observations = LabelVocabulary::load(data_dir / "vocab" / "observations.txt", 74);
    s.anatomy = LabelVocabulary::load(data_dir / "vocab" / "anatomy.txt", 38);
    s.gold_observations = LabelVocabulary::load(data_dir / "vocab" / "observations_gold.txt", 70);
    s.comparison = LabelVocabulary::load(data_dir / "vocab" / "comparison.txt", 15);
    if (!s.comparison.find("no comparison").has_value()) {
        throw ConfigError("comparison vocabulary must contain the default class 'no comparison'");
    }
    return s;
}

GoldLabelVector empty_gold_vector(const LabelSpaces& spaces) {
    GoldLabelVector v;
    v.observations.assign(static_cast<std::size_t>(spaces.gold_observations.size()), -1);
    v.anatomy.assign(static_cast<std::size_t>(spaces.anatomy.size()), 0);
    return v;
}

PhraseMatcher::PhraseMatcher(const std::vector<std::string>& phrases) {
    for (const auto& p : phrases) {
        phrase_tokens_.push_back(text::word_tokens(p));
        max_len_ = std::max(max_len_, phrase_tokens_.back().size());
    }
}

std::vector<PhraseMatcher::Match> PhraseMatcher::find(const std::string& txt) const {
    const std::vector<std::string> tokens = text::word_tokens(txt);
    std::vector<Match> candidates;
    for (std::size_t start = 0; start < tokens.size(); ++start) {
        for (std::size_t pi = 0; pi < phrase_tokens_.size(); ++pi) {
            const auto& phrase = phrase_tokens_[pi];
            if (phrase.empty() || start + phrase.size() > tokens.size()) continue;
            if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + start)) {
                candidates.push_back({static_cast<int>(pi), static_cast<int>(start),
                                      static_cast<int>(phrase.size())});
            }
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Match& a, const Match& b) {
        if (a.token_len != b.token_len) return a.token_len > b.token_len;
        if (a.token_pos != b.token_pos) return a.token_pos < b.token_pos;
        return a.id < b.id;
    });
    std::vector<Match> accepted;
    for (const auto& m : candidates) {
        const bool contained = std::any_of(accepted.begin(), accepted.end(), [&](const Match& a) {
            return m.token_pos >= a.token_pos &&
                   m.token_pos + m.token_len <= a.token_pos + a.token_len &&
                   !(m.token_pos == a.token_pos && m.token_len == a.token_len && m.id == a.id);
        });
        if (!contained) accepted.push_back(m);
    }
    std::sort(accepted.begin(), accepted.end(), [](const Match& a, const Match& b) {
        if (a.token_pos != b.token_pos) return a.token_pos < b.token_pos;
        return a.token_len > b.token_len;
    });
    return accepted;
}

std::vector<int> PhraseMatcher::match_ids(const std::string& txt) const {
    std::vector<int> ids;
    for (const auto& m : find(txt)) {
        if (std::find(ids.begin(), ids.end(), m.id) == ids.end()) ids.push_back(m.id);
    }
    return ids;
}

const std::vector<std::string>& negation_cues() {
    static const std::vector<std::string> cues = {"no", "without", "free of", "negative for"};
    return cues;
}

bool has_negation_cue(const std::string& txt) { return !negation_cue_positions(txt).empty(); }

std::vector<int> negation_cue_positions(const std::string& txt) {
    const auto tokens = text::word_tokens(txt);
    std::vector<int> out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == "no" || tokens[i] == "without") {
            out.push_back(static_cast<int>(i));
        } else if (i + 1 < tokens.size() &&
                   ((tokens[i] == "free" && tokens[i + 1] == "of") ||
                    (tokens[i] == "negative" && tokens[i + 1] == "for"))) {
            out.push_back(static_cast<int>(i));
        }
    }
    return out;
}

RuleAnnotator::RuleAnnotator(const LabelSpaces& spaces)
    : spaces_(spaces),
      obs_matcher_(spaces.observations.labels()),
      anat_matcher_(spaces.anatomy.labels()),
      gold_obs_matcher_(spaces.gold_observations.labels()) {}

Annotation RuleAnnotator::annotate(const std::string& fact_text) {
    if (text::trim(fact_text).empty()) throw ContractError("annotate: empty fact text");
    Annotation out;
    out.observations.bits.assign(static_cast<std::size_t>(spaces_.observations.size()), 0);
    out.anatomy.bits.assign(static_cast<std::size_t>(spaces_.anatomy.size()), 0);

    const auto obs_matches = obs_matcher_.find(fact_text);
    for (const auto& m : obs_matches) out.observations.bits[static_cast<std::size_t>(m.id)] = 1;
    const auto anat_matches = anat_matcher_.find(fact_text);
    for (const auto& m : anat_matches) out.anatomy.bits[static_cast<std::size_t>(m.id)] = 1;

    const bool negated = has_negation_cue(fact_text);
    out.metadata.health_status = negated                ? HealthStatus::Normal
                                 : !obs_matches.empty() ? HealthStatus::Abnormal
                                                        : HealthStatus::Unknown;

    const auto tokens = text::word_tokens(fact_text);
    auto has_token = [&](std::string_view w) {
        return std::find(tokens.begin(), tokens.end(), w) != tokens.end();
    };
    std::string comparison = "no comparison";
    if (has_token("stable") || has_token("unchanged")) comparison = "stable";
    else if (has_token("new")) comparison = "new";
    else if (has_token("increased") || has_token("worsening")) comparison = "worse";
    else if (has_token("decreased") || has_token("improving") || has_token("improved"))
        comparison = "better";
    out.metadata.comparison_status = spaces_.comparison.find(comparison).value_or(0);

    std::string detailed = text::trim(fact_text);
    if (!detailed.empty() && detailed.back() == '.') detailed.pop_back();
    for (const auto& cue : negation_cues()) {
        if (text::starts_with_word(detailed, cue)) {
            detailed = text::trim(detailed.substr(cue.size()));
            break;
        }
    }
    out.metadata.detailed_observation = text::lower(detailed);
    out.metadata.short_observation =
        obs_matches.empty() ? "" : spaces_.observations.label(obs_matches.front().id);
    out.metadata.anatomical_location =
        anat_matches.empty() ? "" : spaces_.anatomy.label(anat_matches.front().id);
    out.metadata.category = Category::AnatomicalFinding;
    return out;
}

GoldLabelVector RuleAnnotator::gold_labels(const std::vector<std::string>& sentences) const {
    GoldLabelVector v = empty_gold_vector(spaces_);
    for (const auto& sent : sentences) {
        const auto cues = negation_cue_positions(sent);
        for (const auto& m : gold_obs_matcher_.find(sent)) {
            // a cue negates the mentions after it, not the ones before
            const bool negated =
                std::any_of(cues.begin(), cues.end(), [&](int c) { return c < m.token_pos; });
            auto& slot = v.observations[static_cast<std::size_t>(m.id)];
            const std::int8_t value = negated ? 0 : 1;
            // "present" wins over "absent" when a report mentions both.
            if (slot == -1 || value == 1) slot = value;
        }
        for (const auto& m : anat_matcher_.find(sent)) {
            v.anatomy[static_cast<std::size_t>(m.id)] = 1;
        }
    }
    return v;
}

GoldLabelVector RuleAnnotator::gold_labels_for_report(const std::string& report_text) const {
    corpus::RawReport report{"r", report_text};
    std::vector<std::string> sentences;
    for (const auto& s : corpus::report_sentences(report)) sentences.push_back(s.text);
    return gold_labels(sentences);
}

namespace {

std::string get_string_field(const nlohmann::json& j, const char* spaced, const char* underscored) {
    if (j.contains(spaced) && j.at(spaced).is_string()) return j.at(spaced).get<std::string>();
    if (j.contains(underscored) && j.at(underscored).is_string())
        return j.at(underscored).get<std::string>();
    return "";
}

}  // namespace

FactMetadata parse_metadata_record(const std::string& raw_reply, const LabelSpaces& spaces) {
    nlohmann::json j = nlohmann::json::parse(raw_reply, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ParseError("metadata record is not a json object: " + raw_reply);
    }
    FactMetadata m;
    m.anatomical_location = get_string_field(j, "anatomical location", "anatomical_location");
    m.detailed_observation = get_string_field(j, "detailed observation", "detailed_observation");
    m.short_observation = get_string_field(j, "short observation", "short_observation");
    m.category = category_from_name(get_string_field(j, "category", "category"));
    m.health_status = health_status_from_name(get_string_field(j, "health status", "health_status"));
    const std::string comparison = get_string_field(j, "comparison status", "comparison_status");
    m.comparison_status =
        spaces.comparison.find(comparison).value_or(spaces.comparison.find("no comparison").value());
    return m;
}

nlohmann::json metadata_to_json(const FactMetadata& meta, const LabelSpaces& spaces) {
    return {{"anatomical location", meta.anatomical_location},
            {"detailed observation", meta.detailed_observation},
            {"short observation", meta.short_observation},
            {"category", category_name(meta.category)},
            {"health status", health_status_name(meta.health_status)},
            {"comparison status", spaces.comparison.label(meta.comparison_status)}};
}

}  // namespace factline::annotation
