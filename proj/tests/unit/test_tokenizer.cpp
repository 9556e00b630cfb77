#include <sstream>

#include <gtest/gtest.h>

#include "dvcseq/tokenizer.hpp"
#include "support.hpp"

using namespace dvcseq;
using dvcseq::testing::id_of;
using dvcseq::testing::kitchen_tokenizer;

TEST(SplitWords, LowercasesAndSeparatesPunctuation) {
    EXPECT_EQ(split_words("Add oil."), (std::vector<std::string>{"add", "oil", "."}));
    EXPECT_EQ(split_words("  Hi,there!  "), (std::vector<std::string>{"hi", ",", "there", "!"}));
    EXPECT_TRUE(split_words("").empty());
    EXPECT_EQ(normalize_text("Add   OIL ."), "add oil.");
}

TEST(ReferenceTokenizer, KnownWords) {
    const auto tok = kitchen_tokenizer();
    const auto& v = tok.vocab();
    EXPECT_EQ(tok.tokenize("Add oil."), (TokenSequence{id_of(tok, "add"), id_of(tok, "oil"), v.dot_id}));
    EXPECT_TRUE(tok.tokenize("").empty());
}

TEST(ReferenceTokenizer, UnknownWordsMapToUnk) {
    const auto tok = kitchen_tokenizer();
    const auto& v = tok.vocab();
    EXPECT_EQ(tok.tokenize("Zyxx oil."), (TokenSequence{v.unk_id, id_of(tok, "oil"), v.dot_id}));
    // Reserved literals typed in text are not treated as control tokens.
    EXPECT_EQ(tok.tokenize("<eos>"), (TokenSequence{v.unk_id, v.unk_id, v.unk_id}));
}

TEST(ReferenceTokenizer, Detokenize) {
    const auto tok = kitchen_tokenizer();
    const auto& v = tok.vocab();
    const TokenSequence ids = {id_of(tok, "add"), id_of(tok, "oil"), v.dot_id};
    EXPECT_EQ(tok.detokenize(ids), "add oil.");
    EXPECT_EQ(tok.detokenize(TokenSequence{}), "");
    EXPECT_EQ(tok.detokenize(TokenSequence{v.unk_id}), "<unk>");
}

TEST(ReferenceTokenizer, DetokenizeRejectsNonText) {
    const auto tok = kitchen_tokenizer();
    const auto& v = tok.vocab();
    for (TokenId bad : {v.text_vocab_size + 5, v.pad_id, v.bos_id, v.eos_id, v.sentinel_id(0), v.total_size(), -3}) {
        try {
            tok.detokenize(TokenSequence{id_of(tok, "add"), bad});
            FAIL() << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::invalid_token);
        }
    }
}

TEST(ReferenceTokenizer, RoundTripOfInVocabularyText) {
    const auto tok = kitchen_tokenizer();
    for (const char* s : {"So today we ski.", "chop the onion. add salt.", "boil water"}) {
        EXPECT_EQ(tok.detokenize(tok.tokenize(s)), normalize_text(s));
    }
}

TEST(VocabFile, LayoutFromReservedLines) {
    const auto tok = kitchen_tokenizer(50, 4);
    const auto& v = tok.vocab();
    EXPECT_EQ(v.text_vocab_size, 5 + 15 + 4);
    EXPECT_EQ(v.num_sentinels, 4);
    EXPECT_EQ(v.num_time_tokens, 50);
    EXPECT_EQ(tok.file().surface(v.sentinel_id(0)), "<sentinel_0>");
    EXPECT_EQ(tok.file().surface(v.sentinel_id(3)), "<sentinel_3>");
}

TEST(VocabFile, ParseAndErrors) {
    std::istringstream ok("<pad>\n<bos>\r\n<eos>\n<unk>\n.\nhi\n<sentinel_0>\n\n");
    const auto f = VocabFile::parse(ok);
    EXPECT_EQ(f.size(), 7u);
    EXPECT_EQ(f.spec(10).num_sentinels, 1);

    std::istringstream dup("<pad>\n<bos>\n<bos>\n");
    EXPECT_THROW(VocabFile::parse(dup), Error);
    std::istringstream missing("<pad>\n<bos>\n<unk>\n.\n");
    EXPECT_THROW(VocabFile::parse(missing).spec(10), Error);
    std::istringstream misplaced("<pad>\n<bos>\n<eos>\n<unk>\n.\n<sentinel_0>\nhi\n");
    EXPECT_THROW(VocabFile::parse(misplaced).spec(10), Error);
    EXPECT_THROW(VocabFile::load("/nonexistent/vocab.txt"), Error);
}

TEST(VocabFile, ShippedFixtureLoads) {
    const ReferenceTokenizer tok(VocabFile::load(dvcseq::testing::data_path("vocab.txt")), 100);
    EXPECT_EQ(tok.vocab().num_sentinels, 20);
    EXPECT_EQ(tok.tokenize("add oil"), (TokenSequence{5, 6}));
}
