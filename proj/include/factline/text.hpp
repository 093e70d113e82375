#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace factline::text {

std::string lower(std::string_view s);
std::string trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);

// Lowercase word tokenizer shared by the encoder, the student targets and the
// n-gram scorers: maximal [a-z0-9] runs plus single punctuation characters.
std::vector<std::string> word_tokens(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::vector<std::string> split(std::string_view s, char sep);

bool starts_with_word(std::string_view s, std::string_view word);

// Token vocabulary with reserved specials. Ids are stable for a given corpus:
// specials first, then tokens sorted by (count desc, token asc).
class Vocabulary {
  public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kBos = 2;
    static constexpr int kEos = 3;

    Vocabulary() = default;
    static Vocabulary build(const std::vector<std::string>& texts, int min_count = 1,
                            const std::vector<std::string>& extra_tokens = {});
    static Vocabulary from_tokens(const std::vector<std::string>& id_to_token);

    int id(std::string_view token) const;  // kUnk when absent
    const std::string& token(int id) const;
    int size() const { return static_cast<int>(id_to_token_.size()); }
    const std::vector<std::string>& tokens() const { return id_to_token_; }

    std::vector<int> encode(std::string_view text, bool add_bos = true, bool add_eos = false) const;
    std::string decode(const std::vector<int>& ids) const;  // skips specials

  private:
    std::vector<std::string> id_to_token_;
    std::map<std::string, int, std::less<>> token_to_id_;
};

}  // namespace factline::text
