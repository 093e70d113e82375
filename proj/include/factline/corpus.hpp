#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace factline::corpus {

struct RawReport {
    std::string report_id;
    std::string text;
};

enum class SectionKind { Findings, Impression, Other };

std::string section_kind_name(SectionKind k);
SectionKind section_kind_from_name(const std::string& name);

struct SectionBlock {
    std::optional<std::string> heading;  // nullopt for unheaded leading text
    std::string text;
};

struct ReportSections {
    std::optional<std::string> findings;
    std::optional<std::string> impression;
    std::vector<SectionBlock> other_blocks;  // unheaded text and non-factual sections
};

struct Sentence {
    std::string report_id;
    SectionKind section = SectionKind::Other;
    int index = 0;  // position within the report's sentence stream
    std::string text;
};

std::string sentence_id(const Sentence& s);

// Maps uppercase headings to a section role. Unknown headings are treated as
// non-factual "other" sections.
class HeadingLexicon {
  public:
    enum class Role { Findings, Impression, NonFactual };

    static HeadingLexicon load(const std::filesystem::path& path);
    static const HeadingLexicon& builtin();

    std::optional<Role> lookup(std::string_view heading) const;
    bool is_heading_line(std::string_view line, std::string* heading_out,
                         std::string* rest_out) const;

  private:
    std::vector<std::pair<std::string, Role>> entries_;
};

// Abbreviations (lowercase, trailing dots stripped) that suppress a sentence
// boundary after their dot.
class AbbreviationGuard {
  public:
    static AbbreviationGuard load(const std::filesystem::path& path);
    static const AbbreviationGuard& builtin();
    bool contains(std::string_view token) const;
    AbbreviationGuard() = default;
    explicit AbbreviationGuard(std::set<std::string, std::less<>> entries)
        : entries_(std::move(entries)) {}

  private:
    std::set<std::string, std::less<>> entries_;
};

ReportSections section_report(const RawReport& report,
                              const HeadingLexicon& lexicon = HeadingLexicon::builtin());

std::vector<std::string> split_sentences(
    std::string_view block, const AbbreviationGuard& guard = AbbreviationGuard::builtin());

// Full ingest path: sectioning followed by splitting. Emits sentences from
// findings, impression and unheaded blocks; recognized non-factual sections
// are dropped.
std::vector<Sentence> report_sentences(
    const RawReport& report, const HeadingLexicon& lexicon = HeadingLexicon::builtin(),
    const AbbreviationGuard& guard = AbbreviationGuard::builtin());

std::vector<RawReport> load_reports(const std::filesystem::path& jsonl_path);
void save_sentences(const std::filesystem::path& jsonl_path, const std::vector<Sentence>& sentences);
std::vector<Sentence> load_sentences(const std::filesystem::path& jsonl_path);

}  // namespace factline::corpus
