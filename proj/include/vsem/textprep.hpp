#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace vsem::textprep {

struct RawDocument {
    std::string doc_id;
    std::string text;  // UTF-8
};

enum class RuleKind { Ligature, Compound, Synonym };

// Ligature and synonym rules have a single-token pattern; compound rules may
// span several tokens and default to the underscore-joined pattern as
// replacement.
struct ReplacementRule {
    RuleKind kind;
    std::vector<std::string> pattern;
    std::string replacement;
};

struct TokenStream {
    std::string doc_id;
    std::vector<std::vector<std::string>> sentences;
};

struct CorpusStats {
    std::uint64_t total_tokens = 0;
    std::uint64_t distinct_forms = 0;
    std::unordered_map<std::string, std::uint64_t> freq;
};

// Lowercases, splits sentences on . ! ? followed by whitespace or end of
// input, splits words on whitespace and punctuation. Hyphen, underscore and
// apostrophe are kept when surrounded by word characters; '.' and ',' are
// kept between digits so "1,234" stays one token. With numbers_to_sentinel,
// all-digit tokens collapse to "<num>" (and a literal "<num>" in the input is
// kept atomic, which makes tokenization idempotent over its own output).
TokenStream tokenize(const RawDocument& doc, bool numbers_to_sentinel);

// Multi-token patterns first (greedy left-to-right, longest match wins),
// then single-token rules, one pass each.
TokenStream apply_replacements(const TokenStream& stream,
                               const std::vector<ReplacementRule>& rules);

CorpusStats corpus_stats(const std::vector<TokenStream>& streams);

// One rule per line: kind<TAB>pattern tokens<TAB>replacement. '#' comments
// and blank lines ignored. The replacement column may be omitted for
// compound rules (defaults to the pattern joined with '_').
std::vector<ReplacementRule> load_rules(const std::string& path);

// Directory of plain-text files, one document per file, doc_id = file name.
// Documents are returned sorted by doc_id.
std::vector<RawDocument> load_corpus_dir(const std::string& path);

// One sentence per line, tokens space-separated.
void write_token_file(const std::string& path, const std::vector<TokenStream>& streams);
std::vector<std::vector<std::string>> read_token_file(const std::string& path);

bool valid_utf8(const std::string& s, std::size_t* bad_offset = nullptr);

}  // namespace vsem::textprep
