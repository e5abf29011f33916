#include "tdc/subword.hpp"

#include <stdexcept>

#include "tdc/text.hpp"

namespace tdc {

namespace {

uint64_t fnv1a(std::string_view s) {
    uint64_t h = 14695981039346656037ULL;
    for (const char c : s) {
        h ^= static_cast<uint8_t>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

SubwordTokenizer::SubwordTokenizer(int vocab_size) : vocab_size_(vocab_size) {
    if (!loaded()) throw std::invalid_argument("tokenizer vocab_size too small");
}

int SubwordTokenizer::subword_id(std::string_view term) const {
    const uint64_t bucket = fnv1a(term) % static_cast<uint64_t>(vocab_size_ - kFirstHashedId);
    return kFirstHashedId + static_cast<int>(bucket);
}

TokenSequence SubwordTokenizer::encode(std::string_view text, int max_len) const {
    if (!loaded()) throw std::runtime_error("encode_subwords: tokenizer is not loaded");
    if (max_len <= 1 || max_len > kMaxSequenceLength)
        throw std::invalid_argument("encode_subwords: max_len must be in (1, 512]");

    const auto terms = text::tokenize_basic(text);
    TokenSequence seq;
    seq.ids.reserve(max_len);
    seq.ids.push_back(kClsId);
    const int budget = max_len - 2;  // room for CLS and SEP
    for (int i = 0; i < static_cast<int>(terms.size()) && i < budget; ++i)
        seq.ids.push_back(subword_id(terms[i]));
    seq.ids.push_back(kSepId);

    seq.real_len = static_cast<int>(seq.ids.size());
    seq.mask.assign(seq.real_len, 1);
    seq.ids.resize(max_len, kPadId);
    seq.mask.resize(max_len, 0);
    seq.length = max_len;
    return seq;
}

TokenSequence encode_subwords(std::string_view text, const SubwordTokenizer& tokenizer,
                              int max_len) {
    return tokenizer.encode(text, max_len);
}

}  // namespace tdc
