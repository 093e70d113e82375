#include <doctest.h>

#include "factline/common.hpp"
#include "factline/corpus.hpp"
#include "factline/io.hpp"
#include "factline/text.hpp"

using namespace factline;
using corpus::RawReport;
using corpus::SectionKind;

TEST_CASE("section_report separates findings and impression") {
    RawReport r{"r1", "FINDINGS: Lungs clear. IMPRESSION: No acute process."};
    const auto s = corpus::section_report(r);
    REQUIRE(s.findings.has_value());
    REQUIRE(s.impression.has_value());
    CHECK(*s.findings == "Lungs clear.");
    CHECK(*s.impression == "No acute process.");
    CHECK(s.other_blocks.empty());
}

TEST_CASE("section_report wraps unheaded text") {
    RawReport r{"r2", "Patient is short of breath."};
    const auto s = corpus::section_report(r);
    CHECK_FALSE(s.findings.has_value());
    CHECK_FALSE(s.impression.has_value());
    REQUIRE(s.other_blocks.size() == 1);
    CHECK_FALSE(s.other_blocks[0].heading.has_value());
    CHECK(s.other_blocks[0].text == "Patient is short of breath.");
}

TEST_CASE("alternate headings map through the lexicon") {
    const auto s = corpus::section_report({"r3", "CONCLUSION: Stable."});
    REQUIRE(s.impression.has_value());
    CHECK(*s.impression == "Stable.");

    const auto s2 = corpus::section_report({"r4", "COMPARISON: None.\nFINDING: Effusion."});
    REQUIRE(s2.findings.has_value());
    CHECK(*s2.findings == "Effusion.");
    REQUIRE(s2.other_blocks.size() == 1);
    CHECK(s2.other_blocks[0].heading == "COMPARISON");
}

TEST_CASE("empty report yields empty sections") {
    const auto s = corpus::section_report({"r5", ""});
    CHECK_FALSE(s.findings.has_value());
    CHECK_FALSE(s.impression.has_value());
    CHECK(s.other_blocks.empty());
}

TEST_CASE("sectioning is idempotent on a reconstructed rendering") {
    RawReport r{"r6", "Leading note.\nFINDINGS: Clear lungs.\nIMPRESSION: Normal.\nHISTORY: cough."};
    const auto s = corpus::section_report(r);
    std::string rendered;
    for (const auto& b : s.other_blocks) {
        if (!b.heading) rendered += b.text + "\n";
    }
    if (s.findings) rendered += "FINDINGS: " + *s.findings + "\n";
    if (s.impression) rendered += "IMPRESSION: " + *s.impression + "\n";
    for (const auto& b : s.other_blocks) {
        if (b.heading) rendered += *b.heading + ": " + b.text + "\n";
    }
    const auto s2 = corpus::section_report({"r6", rendered});
    CHECK(s2.findings == s.findings);
    CHECK(s2.impression == s.impression);
    REQUIRE(s2.other_blocks.size() == s.other_blocks.size());
    for (std::size_t i = 0; i < s.other_blocks.size(); ++i) {
        CHECK(s2.other_blocks[i].heading == s.other_blocks[i].heading);
        CHECK(s2.other_blocks[i].text == s.other_blocks[i].text);
    }
}

TEST_CASE("split_sentences basic boundaries") {
    CHECK(corpus::split_sentences("Lungs clear. No effusion.") ==
          std::vector<std::string>{"Lungs clear.", "No effusion."});
    CHECK(corpus::split_sentences("") == std::vector<std::string>{});
    CHECK(corpus::split_sentences("   \n ") == std::vector<std::string>{});
}

TEST_CASE("split_sentences keeps the enumeration failure mode") {
    const auto out = corpus::split_sentences(
        "2.Atelectasis of the left lower lobe 3.Stable left lower lobe laceration.");
    REQUIRE(out.size() == 1);
}

TEST_CASE("split_sentences honors abbreviation guards") {
    CHECK(corpus::split_sentences("Seen by Dr. Smith. Lungs clear.") ==
          std::vector<std::string>{"Seen by Dr. Smith.", "Lungs clear."});
    CHECK(corpus::split_sentences("Compare e.g. Prior films show less.").size() == 1);
    CHECK(corpus::split_sentences("Fracture of rib no. 3 is healed. No pneumothorax.") ==
          std::vector<std::string>{"Fracture of rib no. 3 is healed.", "No pneumothorax."});
}

TEST_CASE("split_sentences requires capital or digit after the terminator") {
    CHECK(corpus::split_sentences("measures 3.5 cm. stable appearance").size() == 1);
    CHECK(corpus::split_sentences("Effusion present. 3 views obtained.").size() == 2);
    CHECK(corpus::split_sentences("Is it new? Yes it is!") ==
          std::vector<std::string>{"Is it new?", "Yes it is!"});
}

TEST_CASE("split_sentences concatenation property") {
    Rng rng(11);
    const std::vector<std::string> pieces = {
        "No pleural effusion.", "Heart size normal!",   "Dr. Jones reviewed.",
        "Is there edema?",      "Opacity at the base.", "Compare vs. prior study.",
        "Rib no. 4 intact.",    "Stable chest.",
    };
    for (int trial = 0; trial < 50; ++trial) {
        std::string block;
        const int n = 1 + rng.index(5);
        for (int i = 0; i < n; ++i) {
            block += rng.pick(pieces);
            block += rng.chance(0.3) ? "\n" : " ";
        }
        const auto sentences = corpus::split_sentences(block);
        for (const auto& s : sentences) CHECK_FALSE(text::trim(s).empty());
        CHECK(text::collapse_whitespace(text::join(sentences, " ")) ==
              text::collapse_whitespace(text::trim(block)));
    }
}

TEST_CASE("report_sentences drops non-factual sections and numbers the stream") {
    RawReport r{"r7",
                "Unattributed leading note.\nINDICATION: Cough.\nFINDINGS: Lungs clear. No "
                "effusion.\nIMPRESSION: Normal study."};
    const auto sentences = corpus::report_sentences(r);
    REQUIRE(sentences.size() == 4);
    CHECK(sentences[0].section == SectionKind::Other);
    CHECK(sentences[0].text == "Unattributed leading note.");
    CHECK(sentences[1].section == SectionKind::Findings);
    CHECK(sentences[1].text == "Lungs clear.");
    CHECK(sentences[2].section == SectionKind::Findings);
    CHECK(sentences[3].section == SectionKind::Impression);
    for (int i = 0; i < 4; ++i) CHECK(sentences[static_cast<std::size_t>(i)].index == i);
    CHECK(corpus::sentence_id(sentences[1]) == "r7#findings#1");
}

TEST_CASE("heading lexicon file matches the builtin table") {
    const auto lex = corpus::HeadingLexicon::load(std::string(FACTLINE_DATA_DIR) +
                                                  "/heading_lexicon.tsv");
    const auto& builtin = corpus::HeadingLexicon::builtin();
    for (const char* h : {"FINDINGS", "finding", "Impression", "IMPRESSIONS", "conclusion",
                          "CONCLUSIONS", "SUMMARY", "comparison", "INDICATION", "HISTORY",
                          "TECHNIQUE", "examination"}) {
        CHECK(lex.lookup(h) == builtin.lookup(h));
        CHECK(lex.lookup(h).has_value());
    }
    CHECK_FALSE(lex.lookup("NOTE").has_value());
}

TEST_CASE("sentence jsonl round-trip") {
    const std::filesystem::path tmp = std::filesystem::temp_directory_path() / "fl_sent.jsonl";
    const std::vector<corpus::Sentence> sentences = {
        {"a", SectionKind::Findings, 0, "Lungs clear."},
        {"a", SectionKind::Impression, 1, "Normal."},
    };
    corpus::save_sentences(tmp, sentences);
    const auto loaded = corpus::load_sentences(tmp);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[1].section == SectionKind::Impression);
    CHECK(loaded[1].text == "Normal.");
    std::filesystem::remove(tmp);
}
