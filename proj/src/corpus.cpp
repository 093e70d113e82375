#include "factline/corpus.hpp"

#include <algorithm>
#include <cctype>

#include "factline/common.hpp"
#include "factline/io.hpp"
#include "factline/text.hpp"

namespace factline::corpus {

namespace {

bool is_upper(unsigned char c) { return std::isupper(c) != 0; }
bool is_digit(unsigned char c) { return std::isdigit(c) != 0; }

HeadingLexicon::Role role_from_name(const std::string& name) {
    if (name == "findings") return HeadingLexicon::Role::Findings;
    if (name == "impression") return HeadingLexicon::Role::Impression;
    if (name == "non_factual") return HeadingLexicon::Role::NonFactual;
    throw ParseError("heading lexicon: unknown role '" + name + "'");
}

struct ParsedBlock {
    std::optional<std::string> heading;
    std::string text;
};

// Splits the raw text into heading-delimited blocks. Lexicon headings are
// matched case-insensitively anywhere ("FINDINGS: ... IMPRESSION: ..." on one
// line is two blocks); unrecognized all-caps headings only open a block at
// the start of a line.
std::vector<ParsedBlock> parse_blocks(const std::string& raw, const HeadingLexicon& lexicon) {
    std::vector<ParsedBlock> blocks;
    ParsedBlock current;

    auto close_current = [&] {
        const std::string trimmed = text::trim(current.text);
        if (current.heading.has_value() || !trimmed.empty()) {
            blocks.push_back({current.heading, trimmed});
        }
        current = ParsedBlock{};
    };

    std::size_t i = 0;
    bool at_line_start = true;
    while (i < raw.size()) {
        std::string heading, rest;
        std::size_t consumed = 0;
        bool matched = false;
        // Candidate headings start at a word boundary.
        const bool boundary = i == 0 || !std::isalnum(static_cast<unsigned char>(raw[i - 1]));
        if (boundary) {
            // Try lexicon entries first, then an unknown line-start heading.
            std::size_t j = i;
            while (j < raw.size() && (std::isalpha(static_cast<unsigned char>(raw[j])) ||
                                      (j > i && raw[j] == ' '))) {
                ++j;
            }
            while (j > i && raw[j - 1] == ' ') --j;
            if (j > i && j < raw.size() && raw[j] == ':') {
                const std::string word = raw.substr(i, j - i);
                if (lexicon.lookup(word).has_value()) {
                    matched = true;
                } else if (at_line_start &&
                           std::all_of(word.begin(), word.end(), [](unsigned char c) {
                               return is_upper(c) || c == ' ';
                           })) {
                    matched = true;
                }
                if (matched) {
                    heading = word;
                    consumed = j - i + 1;  // include the colon
                }
            }
        }
        if (matched) {
            close_current();
            current.heading = heading;
            i += consumed;
            at_line_start = false;
            continue;
        }
        current.text.push_back(raw[i]);
        at_line_start = raw[i] == '\n';
        ++i;
    }
    close_current();
    return blocks;
}

}  // namespace

std::string section_kind_name(SectionKind k) {
    switch (k) {
        case SectionKind::Findings: return "findings";
        case SectionKind::Impression: return "impression";
        case SectionKind::Other: return "other";
    }
    throw ContractError("bad SectionKind");
}

SectionKind section_kind_from_name(const std::string& name) {
    if (name == "findings") return SectionKind::Findings;
    if (name == "impression") return SectionKind::Impression;
    if (name == "other") return SectionKind::Other;
    throw ParseError("unknown section kind '" + name + "'");
}

std::string sentence_id(const Sentence& s) {
    return s.report_id + "#" + section_kind_name(s.section) + "#" + std::to_string(s.index);
}

HeadingLexicon HeadingLexicon::load(const std::filesystem::path& path) {
    HeadingLexicon lex;
    for (const auto& line : io::read_lines(path)) {
        const std::string t = text::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto tab = t.find('\t');
        if (tab == std::string::npos) throw ParseError("heading lexicon: expected TAB in '" + t + "'");
        lex.entries_.emplace_back(text::lower(text::trim(t.substr(0, tab))),
                                  role_from_name(text::trim(t.substr(tab + 1))));
    }
    return lex;
}

const HeadingLexicon& HeadingLexicon::builtin() {
    static const HeadingLexicon lex = [] {
        HeadingLexicon l;
        const std::pair<const char*, Role> entries[] = {
            {"findings", Role::Findings},       {"finding", Role::Findings},
            {"impression", Role::Impression},   {"impressions", Role::Impression},
            {"conclusion", Role::Impression},   {"conclusions", Role::Impression},
            {"summary", Role::Impression},      {"comparison", Role::NonFactual},
            {"indication", Role::NonFactual},   {"history", Role::NonFactual},
            {"technique", Role::NonFactual},    {"examination", Role::NonFactual},
        };
        for (const auto& [h, r] : entries) l.entries_.emplace_back(h, r);
        return l;
    }();
    return lex;
}

std::optional<HeadingLexicon::Role> HeadingLexicon::lookup(std::string_view heading) const {
    const std::string key = text::lower(text::trim(heading));
    for (const auto& [h, r] : entries_) {
        if (h == key) return r;
    }
    return std::nullopt;
}

bool HeadingLexicon::is_heading_line(std::string_view line, std::string* heading_out,
                                     std::string* rest_out) const {
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) return false;
    const std::string head = text::trim(line.substr(0, colon));
    if (head.empty()) return false;
    const bool known = lookup(head).has_value();
    const bool caps = std::all_of(head.begin(), head.end(), [](unsigned char c) {
        return is_upper(c) || c == ' ';
    });
    if (!known && !caps) return false;
    if (heading_out) *heading_out = head;
    if (rest_out) *rest_out = text::trim(line.substr(colon + 1));
    return true;
}

AbbreviationGuard AbbreviationGuard::load(const std::filesystem::path& path) {
    std::set<std::string, std::less<>> entries;
    for (const auto& line : io::read_lines(path)) {
        std::string t = text::lower(text::trim(line));
        if (t.empty() || t[0] == '#') continue;
        while (!t.empty() && t.back() == '.') t.pop_back();
        entries.insert(t);
    }
    return AbbreviationGuard(std::move(entries));
}

const AbbreviationGuard& AbbreviationGuard::builtin() {
    static const AbbreviationGuard guard(
        std::set<std::string, std::less<>>{"dr", "mr", "mrs", "vs", "e.g", "i.e"});
    return guard;
}

bool AbbreviationGuard::contains(std::string_view token) const {
    return entries_.find(token) != entries_.end();
}

ReportSections section_report(const RawReport& report, const HeadingLexicon& lexicon) {
    ReportSections out;
    for (const auto& block : parse_blocks(report.text, lexicon)) {
        const auto role = block.heading ? lexicon.lookup(*block.heading) : std::nullopt;
        if (role == HeadingLexicon::Role::Findings) {
            out.findings = out.findings ? *out.findings + "\n" + block.text : block.text;
        } else if (role == HeadingLexicon::Role::Impression) {
            out.impression = out.impression ? *out.impression + "\n" + block.text : block.text;
        } else {
            out.other_blocks.push_back({block.heading, block.text});
        }
    }
    return out;
}

std::vector<std::string> split_sentences(std::string_view block, const AbbreviationGuard& guard) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        const std::string s = text::collapse_whitespace(text::trim(current));
        if (!s.empty()) out.push_back(s);
        current.clear();
    };
    for (std::size_t i = 0; i < block.size(); ++i) {
        const char c = block[i];
        current.push_back(c);
        if (c != '.' && c != '!' && c != '?') continue;
        // Boundary only before whitespace followed by an uppercase letter or
        // digit; the enumeration failure mode ("2.Atelectasis...") is kept.
        if (i + 1 >= block.size()) continue;  // trailing terminator flushes below
        if (!std::isspace(static_cast<unsigned char>(block[i + 1]))) continue;
        std::size_t j = i + 1;
        while (j < block.size() && std::isspace(static_cast<unsigned char>(block[j]))) ++j;
        if (j == block.size()) continue;
        const unsigned char next = static_cast<unsigned char>(block[j]);
        if (!is_upper(next) && !is_digit(next)) continue;
        if (c == '.') {
            // Preceding token: maximal alnum/'.' run, trailing dots stripped.
            std::size_t b = i;
            while (b > 0 && (std::isalnum(static_cast<unsigned char>(block[b - 1])) ||
                             block[b - 1] == '.')) {
                --b;
            }
            std::string token = text::lower(std::string(block.substr(b, i - b + 1)));
            while (!token.empty() && token.back() == '.') token.pop_back();
            if (guard.contains(token)) continue;
            if (token == "no" && is_digit(next)) continue;
        }
        flush();
    }
    flush();
    return out;
}

std::vector<Sentence> report_sentences(const RawReport& report, const HeadingLexicon& lexicon,
                                       const AbbreviationGuard& guard) {
    std::vector<Sentence> out;
    int index = 0;
    for (const auto& block : parse_blocks(report.text, lexicon)) {
        const auto role = block.heading ? lexicon.lookup(*block.heading) : std::nullopt;
        if (role == HeadingLexicon::Role::NonFactual) continue;
        SectionKind kind = SectionKind::Other;
        if (role == HeadingLexicon::Role::Findings) kind = SectionKind::Findings;
        else if (role == HeadingLexicon::Role::Impression) kind = SectionKind::Impression;
        for (auto& sent : split_sentences(block.text, guard)) {
            out.push_back({report.report_id, kind, index++, std::move(sent)});
        }
    }
    return out;
}

std::vector<RawReport> load_reports(const std::filesystem::path& jsonl_path) {
    std::vector<RawReport> reports;
    for (const auto& j : io::read_jsonl(jsonl_path)) {
        if (!j.contains("report_id") || !j.contains("text")) {
            throw ParseError(jsonl_path.string() + ": report record needs report_id and text");
        }
        reports.push_back({j.at("report_id").get<std::string>(), j.at("text").get<std::string>()});
    }
    return reports;
}

void save_sentences(const std::filesystem::path& jsonl_path,
                    const std::vector<Sentence>& sentences) {
    std::vector<io::json> records;
    records.reserve(sentences.size());
    for (const auto& s : sentences) {
        records.push_back({{"report_id", s.report_id},
                           {"section", section_kind_name(s.section)},
                           {"index", s.index},
                           {"text", s.text}});
    }
    io::write_jsonl(jsonl_path, records);
}

std::vector<Sentence> load_sentences(const std::filesystem::path& jsonl_path) {
    std::vector<Sentence> out;
    for (const auto& j : io::read_jsonl(jsonl_path)) {
        out.push_back({j.at("report_id").get<std::string>(),
                       section_kind_from_name(j.at("section").get<std::string>()),
                       j.at("index").get<int>(), j.at("text").get<std::string>()});
    }
    return out;
}

}  // namespace factline::corpus
