#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace factline::annotation {

enum class Category {
    AnatomicalFinding = 0,
    Disease,
    TechnicalAssessment,
    TubesAndLines,
    Device,
};
inline constexpr int kNumCategories = 5;

enum class HealthStatus { Normal = 0, Abnormal, Ambiguous, Unknown };
inline constexpr int kNumHealthStatuses = 4;

std::string category_name(Category c);
Category category_from_name(std::string_view name);  // unknown -> AnatomicalFinding
std::string health_status_name(HealthStatus h);
HealthStatus health_status_from_name(std::string_view name);  // unknown -> Unknown

struct FactMetadata {
    std::string anatomical_location;  // empty when not localized
    std::string detailed_observation;
    std::string short_observation;
    Category category = Category::AnatomicalFinding;
    HealthStatus health_status = HealthStatus::Unknown;
    int comparison_status = 0;  // index into the comparison vocabulary
};

class LabelVocabulary {
  public:
    LabelVocabulary() = default;
    static LabelVocabulary load(const std::filesystem::path& path, int expected_size = -1);
    static LabelVocabulary from_labels(std::vector<std::string> labels);

    int size() const { return static_cast<int>(labels_.size()); }
    const std::string& label(int id) const;
    const std::vector<std::string>& labels() const { return labels_; }
    std::optional<int> find(std::string_view label) const;  // case-insensitive

  private:
    std::vector<std::string> labels_;
};

// The four shipped label spaces. Sizes are validated at load; a mismatch is
// a startup error.
struct LabelSpaces {
    LabelVocabulary observations;       // 74, classification head
    LabelVocabulary anatomy;            // 38
    LabelVocabulary gold_observations;  // 70, ranking gold vectors
    LabelVocabulary comparison;         // 15

    static LabelSpaces load(const std::filesystem::path& data_dir);
};

struct ObservationLabels {
    std::vector<std::uint8_t> bits;  // length 74
};

struct AnatomyLabels {
    std::vector<std::uint8_t> bits;  // length 38
};

// 108-dimension gold vector: 70 observations over {yes=1, no=0, omitted=-1}
// followed by 38 anatomy bits over {1, 0}.
struct GoldLabelVector {
    std::vector<std::int8_t> observations;  // length 70
    std::vector<std::uint8_t> anatomy;      // length 38

    bool operator==(const GoldLabelVector&) const = default;
};

GoldLabelVector empty_gold_vector(const LabelSpaces& spaces);

struct Annotation {
    FactMetadata metadata;
    ObservationLabels observations;
    AnatomyLabels anatomy;
};

class Annotator {
  public:
    virtual ~Annotator() = default;
    virtual Annotation annotate(const std::string& fact_text) = 0;
};

// Matches vocabulary phrases at word boundaries; a match fully contained in a
// longer accepted match is suppressed ("pulmonary edema" wins over "edema").
class PhraseMatcher {
  public:
    PhraseMatcher() = default;
    explicit PhraseMatcher(const std::vector<std::string>& phrases);

    struct Match {
        int id;         // index into the phrase list
        int token_pos;  // first token of the match
        int token_len;
    };
    std::vector<Match> find(const std::string& txt) const;
    std::vector<int> match_ids(const std::string& txt) const;

  private:
    std::vector<std::vector<std::string>> phrase_tokens_;
    std::size_t max_len_ = 0;
};

const std::vector<std::string>& negation_cues();
bool has_negation_cue(const std::string& txt);
// token positions where a negation cue starts; cues scope forward
std::vector<int> negation_cue_positions(const std::string& txt);

// Deterministic LLM-free annotator: negation implies normal health status,
// temporal keywords pick the comparison class, label bits come from
// vocabulary phrase lookup.
class RuleAnnotator : public Annotator {
  public:
    explicit RuleAnnotator(const LabelSpaces& spaces);

    Annotation annotate(const std::string& fact_text) override;

    GoldLabelVector gold_labels(const std::vector<std::string>& sentences) const;
    GoldLabelVector gold_labels_for_report(const std::string& report_text) const;

  private:
    const LabelSpaces& spaces_;
    PhraseMatcher obs_matcher_;
    PhraseMatcher anat_matcher_;
    PhraseMatcher gold_obs_matcher_;
};

FactMetadata parse_metadata_record(const std::string& raw_reply, const LabelSpaces& spaces);
nlohmann::json metadata_to_json(const FactMetadata& meta, const LabelSpaces& spaces);

}  // namespace factline::annotation
