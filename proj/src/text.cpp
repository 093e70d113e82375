#include "factline/text.hpp"

#include <algorithm>
#include <cctype>

#include "factline/common.hpp"

namespace factline::text {

namespace {
bool is_word_char(unsigned char c) { return std::isalnum(c) != 0; }
}  // namespace

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = false;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        out.push_back(static_cast<char>(c));
    }
    return out;
}

std::vector<std::string> word_tokens(std::string_view s) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        if (is_word_char(c)) {
            std::size_t j = i;
            while (j < s.size() && is_word_char(static_cast<unsigned char>(s[j]))) ++j;
            tokens.push_back(lower(s.substr(i, j - i)));
            i = j;
        } else {
            tokens.push_back(std::string(1, static_cast<char>(c)));
            ++i;
        }
    }
    return tokens;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

bool starts_with_word(std::string_view s, std::string_view word) {
    if (s.size() < word.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) !=
            std::tolower(static_cast<unsigned char>(word[i])))
            return false;
    }
    return s.size() == word.size() || !is_word_char(static_cast<unsigned char>(s[word.size()]));
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, int min_count,
                             const std::vector<std::string>& extra_tokens) {
    std::map<std::string, long> counts;
    for (const auto& t : texts) {
        for (auto& tok : word_tokens(t)) ++counts[tok];
    }
    std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> id_to_token = {"<pad>", "<unk>", "<bos>", "<eos>"};
    for (const auto& t : extra_tokens) id_to_token.push_back(t);
    for (const auto& [tok, n] : ranked) {
        if (n >= min_count &&
            std::find(id_to_token.begin(), id_to_token.end(), tok) == id_to_token.end()) {
            id_to_token.push_back(tok);
        }
    }
    return from_tokens(id_to_token);
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& id_to_token) {
    Vocabulary v;
    v.id_to_token_ = id_to_token;
    for (std::size_t i = 0; i < id_to_token.size(); ++i) {
        v.token_to_id_.emplace(id_to_token[i], static_cast<int>(i));
    }
    if (v.size() < 4) throw ContractError("Vocabulary: missing reserved specials");
    return v;
}

int Vocabulary::id(std::string_view token) const {
    const auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || id >= size()) throw ContractError("Vocabulary: token id out of range");
    return id_to_token_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(std::string_view textv, bool add_bos, bool add_eos) const {
    std::vector<int> ids;
    if (add_bos) ids.push_back(kBos);
    for (const auto& tok : word_tokens(textv)) ids.push_back(id(tok));
    if (add_eos) ids.push_back(kEos);
    return ids;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
    std::vector<std::string> toks;
    for (int id : ids) {
        if (id == kPad || id == kBos || id == kEos) continue;
        toks.push_back(token(id));
    }
    return join(toks, " ");
}

}  // namespace factline::text
