#pragma once

#include <string>
#include <vector>

#include "dvcseq/tokenizer.hpp"

namespace dvcseq::testing {

inline std::string data_path(const std::string& name) { return std::string(DVCSEQ_DATA_DIR) + "/" + name; }

inline const std::vector<std::string>& kitchen_words() {
    static const std::vector<std::string> words = {"add", "oil", "stir", "hello", "the", "onion", "chop", "pan",
                                                   "salt", "water", "boil", "so", "today", "we", "ski"};
    return words;
}

inline ReferenceTokenizer kitchen_tokenizer(std::int32_t num_time_tokens = 100, std::int32_t num_sentinels = 10) {
    return ReferenceTokenizer(make_vocab_file(kitchen_words(), num_sentinels), num_time_tokens);
}

inline TokenId id_of(const ReferenceTokenizer& tok, const std::string& word) { return *tok.file().find(word); }

}  // namespace dvcseq::testing
