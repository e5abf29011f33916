#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tdc {

// Encoder input: subword ids with an attention mask, padded to a fixed
// length. All 1s in the mask precede all 0s.
struct TokenSequence {
    std::vector<int> ids;
    std::vector<int> mask;
    int length = 0;    // padded length, == ids.size() == mask.size()
    int real_len = 0;  // number of mask-1 positions

    friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

// Deterministic hashing subword tokenizer for the seeded test-scale
// encoders. Basic tokens hash into a fixed-size id space via FNV-1a, so no
// external vocabulary file is needed and any script round-trips.
//
// Reserved ids: 0 = PAD, 1 = UNK, 2 = CLS (classification position),
// 3 = SEP (separator).
class SubwordTokenizer {
public:
    static constexpr int kPadId = 0;
    static constexpr int kUnkId = 1;
    static constexpr int kClsId = 2;
    static constexpr int kSepId = 3;
    static constexpr int kFirstHashedId = 4;
    static constexpr int kMaxSequenceLength = 512;

    SubwordTokenizer() = default;  // unloaded; encode() rejects it
    explicit SubwordTokenizer(int vocab_size);

    bool loaded() const { return vocab_size_ >= kFirstHashedId + 1; }
    int vocab_size() const { return vocab_size_; }

    int subword_id(std::string_view term) const;

    // CLS + subwords + SEP, truncated to max_len with CLS and SEP preserved,
    // padded with PAD/mask-0 up to max_len.
    TokenSequence encode(std::string_view text, int max_len) const;

private:
    int vocab_size_ = 0;
};

// Operation-style wrapper mirroring the tokenizer handle contract.
TokenSequence encode_subwords(std::string_view text, const SubwordTokenizer& tokenizer,
                              int max_len);

}  // namespace tdc
