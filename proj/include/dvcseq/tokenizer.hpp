#pragma once

// Text <-> token id conversion.
//
// `Tokenizer` is the seam where a production subword tokenizer plugs in.
// `ReferenceTokenizer` is a deterministic word-level implementation over a
// vocabulary file: one surface per line, line number = id. Reserved lines
// hold the literals <pad>, <bos>, <eos>, <unk> and <sentinel_i>; the line
// holding "." is the dot id.

#include <cctype>
#include <optional>
#include <fstream>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dvcseq/domain.hpp"
#include "dvcseq/error.hpp"

namespace dvcseq {

class Tokenizer {
public:
    virtual ~Tokenizer() = default;

    // Text ids only: never time ids, never sentinels.
    virtual TokenSequence tokenize(std::string_view text) const = 0;
    virtual std::string detokenize(std::span<const TokenId> ids) const = 0;
    virtual const VocabSpec& vocab() const = 0;
};

namespace detail {

inline bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }
inline bool is_space(unsigned char c) { return c < 0x80 && std::isspace(c) != 0; }

}  // namespace detail

// Lowercases ASCII, splits on whitespace, and makes every ASCII punctuation
// character its own piece. Bytes >= 0x80 are word characters.
inline std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> pieces;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) pieces.push_back(std::move(cur));
        cur.clear();
    };
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (detail::is_space(c)) {
            flush();
        } else if (detail::is_punct(c)) {
            flush();
            pieces.emplace_back(1, ch);
        } else {
            cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
        }
    }
    flush();
    return pieces;
}

// Joins pieces with single spaces; "." attaches to the preceding piece.
inline std::string join_pieces(std::span<const std::string> pieces) {
    std::string out;
    for (const auto& p : pieces) {
        if (!out.empty() && p != ".") out.push_back(' ');
        out += p;
    }
    return out;
}

// The form detokenize(tokenize(s)) produces when every word is in vocabulary.
inline std::string normalize_text(std::string_view text) {
    const auto pieces = split_words(text);
    return join_pieces(pieces);
}

class VocabFile {
public:
    VocabFile() = default;

    explicit VocabFile(std::vector<std::string> surfaces) : surfaces_(std::move(surfaces)) {
        for (std::size_t i = 0; i < surfaces_.size(); ++i) {
            if (surfaces_[i].empty()) {
                fail(ErrorKind::config, "vocab line " + std::to_string(i) + " is empty");
            }
            if (!index_.emplace(surfaces_[i], static_cast<TokenId>(i)).second) {
                fail(ErrorKind::config, "duplicate vocab surface '" + surfaces_[i] + "'");
            }
        }
    }

    static VocabFile parse(std::istream& in) {
        std::vector<std::string> lines;
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            lines.push_back(line);
        }
        while (!lines.empty() && lines.back().empty()) lines.pop_back();
        return VocabFile(std::move(lines));
    }

    static VocabFile load(const std::string& path) {
        std::ifstream in(path);
        if (!in) fail(ErrorKind::invalid_input, "cannot open vocab file " + path);
        return parse(in);
    }

    std::size_t size() const { return surfaces_.size(); }
    const std::string& surface(TokenId id) const { return surfaces_.at(static_cast<std::size_t>(id)); }
    const std::vector<std::string>& surfaces() const { return surfaces_; }

    std::optional<TokenId> find(std::string_view surface) const {
        auto it = index_.find(std::string(surface));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    // Derives the id layout from the reserved literals. Sentinel i must sit at
    // V-1-i.
    VocabSpec spec(std::int32_t num_time_tokens) const {
        auto need = [&](std::string_view s) {
            auto id = find(s);
            if (!id) fail(ErrorKind::config, "vocab file lacks " + std::string(s));
            return *id;
        };
        VocabSpec v;
        v.text_vocab_size = static_cast<std::int32_t>(surfaces_.size());
        v.num_time_tokens = num_time_tokens;
        v.pad_id = need("<pad>");
        v.bos_id = need("<bos>");
        v.eos_id = need("<eos>");
        v.unk_id = need("<unk>");
        v.dot_id = need(".");
        std::int32_t sentinels = 0;
        while (find("<sentinel_" + std::to_string(sentinels) + ">")) ++sentinels;
        v.num_sentinels = sentinels;
        for (std::int32_t i = 0; i < sentinels; ++i) {
            const auto id = *find("<sentinel_" + std::to_string(i) + ">");
            if (id != v.text_vocab_size - 1 - i) {
                fail(ErrorKind::config, "<sentinel_" + std::to_string(i) + "> must be on line V-1-" +
                                            std::to_string(i));
            }
        }
        v.validate();
        return v;
    }

private:
    std::vector<std::string> surfaces_;
    std::unordered_map<std::string, TokenId> index_;
};

// Builds a vocab file with the reserved lines first, then `words`, then the
// sentinels in descending order so that sentinel i lands on V-1-i.
inline VocabFile make_vocab_file(const std::vector<std::string>& words, std::int32_t num_sentinels) {
    std::vector<std::string> lines = {"<pad>", "<bos>", "<eos>", "<unk>", "."};
    for (const auto& w : words) lines.push_back(w);
    for (std::int32_t i = num_sentinels - 1; i >= 0; --i) {
        lines.push_back("<sentinel_" + std::to_string(i) + ">");
    }
    return VocabFile(std::move(lines));
}

class ReferenceTokenizer final : public Tokenizer {
public:
    ReferenceTokenizer(VocabFile file, std::int32_t num_time_tokens)
        : file_(std::move(file)), spec_(file_.spec(num_time_tokens)) {}

    TokenSequence tokenize(std::string_view text) const override {
        TokenSequence ids;
        for (const auto& piece : split_words(text)) {
            auto id = file_.find(piece);
            if (id && spec_.classify(*id) != TokenKind::text && *id != spec_.dot_id) id.reset();
            ids.push_back(id ? *id : spec_.unk_id);
        }
        return ids;
    }

    // Rejects anything outside the text region as well as pad/bos/eos and
    // sentinels. <unk> renders as its literal.
    std::string detokenize(std::span<const TokenId> ids) const override {
        std::vector<std::string> pieces;
        pieces.reserve(ids.size());
        for (TokenId id : ids) {
            switch (spec_.classify(id)) {
                case TokenKind::text:
                case TokenKind::dot:
                case TokenKind::unk:
                    pieces.push_back(file_.surface(id));
                    break;
                default:
                    fail(ErrorKind::invalid_token, "token id " + std::to_string(id) + " is not a text id");
            }
        }
        return join_pieces(pieces);
    }

    const VocabSpec& vocab() const override { return spec_; }
    const VocabFile& file() const { return file_; }

private:
    VocabFile file_;
    VocabSpec spec_;
};

}  // namespace dvcseq
