#include "vsem/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "vsem/common.hpp"

namespace fs = std::filesystem;

namespace vsem::textprep {

namespace {

bool is_word_byte(unsigned char c) {
    return std::isalnum(c) || c >= 0x80;  // multibyte UTF-8 sequences count as word chars
}

bool is_space_byte(unsigned char c) { return std::isspace(c) != 0; }

bool is_digit_byte(unsigned char c) { return std::isdigit(c) != 0; }

char lower_ascii(unsigned char c) { return static_cast<char>(std::tolower(c)); }

constexpr const char* kNumSentinel = "<num>";

bool is_number_token(const std::string& t) {
    bool has_digit = false;
    for (unsigned char c : t) {
        if (is_digit_byte(c))
            has_digit = true;
        else if (c != '.' && c != ',')
            return false;
    }
    return has_digit;
}

std::string rule_kind_name(RuleKind k) {
    switch (k) {
        case RuleKind::Ligature: return "ligature";
        case RuleKind::Compound: return "compound";
        case RuleKind::Synonym: return "synonym";
    }
    return "?";
}

std::string join(const std::vector<std::string>& toks, char sep) {
    std::string out;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (i) out += sep;
        out += toks[i];
    }
    return out;
}

}  // namespace

bool valid_utf8(const std::string& s, std::size_t* bad_offset) {
    std::size_t i = 0;
    const std::size_t n = s.size();
    while (i < n) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        std::size_t len;
        std::uint32_t cp;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            if (bad_offset) *bad_offset = i;
            return false;
        }
        if (i + len > n) {
            if (bad_offset) *bad_offset = i;
            return false;
        }
        for (std::size_t j = 1; j < len; ++j) {
            const unsigned char cc = static_cast<unsigned char>(s[i + j]);
            if ((cc & 0xC0) != 0x80) {
                if (bad_offset) *bad_offset = i;
                return false;
            }
            cp = (cp << 6) | (cc & 0x3F);
        }
        const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
                              (len == 4 && cp < 0x10000);
        if (overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            if (bad_offset) *bad_offset = i;
            return false;
        }
        i += len;
    }
    return true;
}

TokenStream tokenize(const RawDocument& doc, bool numbers_to_sentinel) {
    std::size_t bad = 0;
    if (!valid_utf8(doc.text, &bad))
        throw ValidationError("document '" + doc.doc_id + "': invalid UTF-8 at byte " +
                              std::to_string(bad));

    TokenStream out;
    out.doc_id = doc.doc_id;
    std::string token;
    std::vector<std::string> sentence;

    auto flush_token = [&] {
        if (token.empty()) return;
        if (numbers_to_sentinel && is_number_token(token)) token = kNumSentinel;
        sentence.push_back(std::move(token));
        token.clear();
    };
    auto flush_sentence = [&] {
        flush_token();
        if (!sentence.empty()) {
            out.sentences.push_back(std::move(sentence));
            sentence.clear();
        }
    };

    const std::string& s = doc.text;
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        const bool have_next = i + 1 < n;
        const unsigned char next = have_next ? static_cast<unsigned char>(s[i + 1]) : 0;

        if (is_word_byte(c)) {
            token += c < 0x80 ? lower_ascii(c) : static_cast<char>(c);
        } else if (numbers_to_sentinel && c == '<' && s.compare(i, 5, kNumSentinel) == 0) {
            flush_token();
            sentence.push_back(kNumSentinel);
            i += 4;
        } else if (c == '-' || c == '_' || c == '\'') {
            if (!token.empty() && have_next && is_word_byte(next))
                token += static_cast<char>(c);
            else
                flush_token();
        } else if (c == '.' || c == ',') {
            if (!token.empty() && is_digit_byte(static_cast<unsigned char>(token.back())) &&
                have_next && is_digit_byte(next)) {
                token += static_cast<char>(c);
            } else if (c == '.' && (!have_next || is_space_byte(next))) {
                flush_sentence();
            } else {
                flush_token();
            }
        } else if (c == '!' || c == '?') {
            if (!have_next || is_space_byte(next))
                flush_sentence();
            else
                flush_token();
        } else {
            flush_token();  // whitespace or other punctuation
        }
    }
    flush_sentence();
    return out;
}

TokenStream apply_replacements(const TokenStream& stream,
                               const std::vector<ReplacementRule>& rules) {
    std::map<std::vector<std::string>, std::pair<std::string, std::size_t>> seen;
    std::map<std::vector<std::string>, std::string> multi;
    std::unordered_map<std::string, std::string> single;
    std::size_t max_len = 0;
    for (std::size_t r = 0; r < rules.size(); ++r) {
        const auto& rule = rules[r];
        if (rule.pattern.empty()) throw ValidationError("replacement rule with empty pattern");
        if (rule.replacement.empty()) throw ValidationError("replacement rule with empty replacement");
        auto it = seen.find(rule.pattern);
        if (it != seen.end()) {
            if (it->second.first != rule.replacement)
                throw ValidationError("conflicting rules for pattern \"" + join(rule.pattern, ' ') +
                                      "\": \"" + it->second.first + "\" (rule " +
                                      std::to_string(it->second.second + 1) + ") vs \"" +
                                      rule.replacement + "\" (rule " + std::to_string(r + 1) + ")");
            continue;
        }
        seen.emplace(rule.pattern, std::make_pair(rule.replacement, r));
        if (rule.pattern.size() >= 2) {
            multi.emplace(rule.pattern, rule.replacement);
            max_len = std::max(max_len, rule.pattern.size());
        } else {
            single.emplace(rule.pattern[0], rule.replacement);
        }
    }

    TokenStream out;
    out.doc_id = stream.doc_id;
    out.sentences.reserve(stream.sentences.size());
    std::vector<std::string> probe;
    for (const auto& sent : stream.sentences) {
        std::vector<std::string> replaced;
        replaced.reserve(sent.size());
        std::size_t pos = 0;
        while (pos < sent.size()) {
            bool matched = false;
            if (!multi.empty()) {
                const std::size_t longest = std::min(max_len, sent.size() - pos);
                for (std::size_t len = longest; len >= 2 && !matched; --len) {
                    probe.assign(sent.begin() + static_cast<std::ptrdiff_t>(pos),
                                 sent.begin() + static_cast<std::ptrdiff_t>(pos + len));
                    auto it = multi.find(probe);
                    if (it != multi.end()) {
                        replaced.push_back(it->second);
                        pos += len;
                        matched = true;
                    }
                }
            }
            if (!matched) {
                replaced.push_back(sent[pos]);
                ++pos;
            }
        }
        for (auto& tok : replaced) {
            auto it = single.find(tok);
            if (it != single.end()) tok = it->second;
        }
        out.sentences.push_back(std::move(replaced));
    }
    return out;
}

CorpusStats corpus_stats(const std::vector<TokenStream>& streams) {
    CorpusStats st;
    for (const auto& s : streams)
        for (const auto& sent : s.sentences)
            for (const auto& tok : sent) {
                ++st.freq[tok];
                ++st.total_tokens;
            }
    st.distinct_forms = st.freq.size();
    return st;
}

std::vector<ReplacementRule> load_rules(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open rules file: " + path);
    std::vector<ReplacementRule> rules;
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw ValidationError(path + ":" + std::to_string(lineno) + ": " + msg);
    };
    auto check_token = [&](const std::string& t) {
        if (t.empty()) fail("empty token");
        for (unsigned char c : t) {
            if (is_space_byte(c)) fail("token contains whitespace: \"" + t + "\"");
            if (c >= 'A' && c <= 'Z') fail("token must be lowercase: \"" + t + "\"");
        }
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cols;
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = line.find('\t', start);
            cols.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (cols.size() < 2) fail("expected kind<TAB>pattern[<TAB>replacement]");
        ReplacementRule rule;
        if (cols[0] == "ligature")
            rule.kind = RuleKind::Ligature;
        else if (cols[0] == "compound")
            rule.kind = RuleKind::Compound;
        else if (cols[0] == "synonym")
            rule.kind = RuleKind::Synonym;
        else
            fail("unknown rule kind \"" + cols[0] + "\"");
        rule.pattern = split_whitespace(cols[1]);
        if (rule.pattern.empty()) fail("empty pattern");
        for (const auto& t : rule.pattern) check_token(t);
        if (rule.kind != RuleKind::Compound && rule.pattern.size() != 1)
            fail(rule_kind_name(rule.kind) + " rules take a single-token pattern");
        if (cols.size() >= 3 && !cols[2].empty()) {
            rule.replacement = cols[2];
            check_token(rule.replacement);
        } else if (rule.kind == RuleKind::Compound) {
            rule.replacement = join(rule.pattern, '_');
        } else {
            fail("missing replacement");
        }
        rules.push_back(std::move(rule));
    }
    return rules;
}

std::vector<RawDocument> load_corpus_dir(const std::string& path) {
    if (!fs::is_directory(path)) throw IoError("not a directory: " + path);
    std::vector<RawDocument> docs;
    for (const auto& entry : fs::directory_iterator(path)) {
        if (!entry.is_regular_file()) continue;
        RawDocument d;
        d.doc_id = entry.path().filename().string();
        std::ifstream in(entry.path(), std::ios::binary);
        if (!in) throw IoError("cannot open: " + entry.path().string());
        std::ostringstream ss;
        ss << in.rdbuf();
        d.text = ss.str();
        docs.push_back(std::move(d));
    }
    std::sort(docs.begin(), docs.end(),
              [](const RawDocument& a, const RawDocument& b) { return a.doc_id < b.doc_id; });
    return docs;
}

void write_token_file(const std::string& path, const std::vector<TokenStream>& streams) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    for (const auto& s : streams)
        for (const auto& sent : s.sentences) out << join(sent, ' ') << '\n';
    if (!out) throw IoError("write failed: " + path);
}

std::vector<std::vector<std::string>> read_token_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open token file: " + path);
    std::vector<std::vector<std::string>> sentences;
    std::string line;
    while (std::getline(in, line)) {
        auto toks = split_whitespace(line);
        if (!toks.empty()) sentences.push_back(std::move(toks));
    }
    return sentences;
}

}  // namespace vsem::textprep
