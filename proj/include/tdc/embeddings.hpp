#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace tdc {

// Pretrained word vectors in word2vec text format: a `V d` header line,
// then `word v1 ... vd` rows. Lookups of unknown words return one shared
// OOV vector sampled uniformly from [-0.25, 0.25]^d with the run seed.
class EmbeddingTable {
public:
    EmbeddingTable() = default;

    static EmbeddingTable load(const std::string& path, uint64_t seed);

    int dim() const { return dim_; }
    int size() const { return static_cast<int>(words_.size()); }
    bool contains(const std::string& word) const { return index_.count(word) > 0; }
    // The stored vector, or the OOV vector when the word is unknown.
    const std::vector<double>& lookup(const std::string& word) const;
    const std::vector<double>& oov_vector() const { return oov_; }
    const std::vector<std::string>& words() const { return words_; }

private:
    int dim_ = 0;
    std::vector<std::string> words_;
    std::vector<std::vector<double>> vectors_;
    std::vector<double> oov_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace tdc
