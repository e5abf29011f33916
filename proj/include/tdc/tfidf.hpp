#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tdc {

// Sparse feature vector: (column, weight) pairs sorted by column.
using SparseVector = std::vector<std::pair<int, double>>;

double sparse_dot(const SparseVector& a, const SparseVector& b);

// TF-IDF weighting with the smoothed idf ln((1+N)/(1+df)) + 1, raw term
// counts, and L2 normalization of each transformed vector. Terms are column-
// indexed in lexicographic order for reproducibility.
class TfidfModel {
public:
    TfidfModel() = default;

    static TfidfModel fit(const std::vector<std::vector<std::string>>& documents);

    // Unseen terms are ignored; a document with no known terms maps to the
    // zero vector.
    SparseVector transform(const std::vector<std::string>& document) const;

    int vocab_size() const { return static_cast<int>(terms_.size()); }
    int n_docs() const { return n_docs_; }
    const std::vector<std::string>& terms() const { return terms_; }
    // -1 when the term is unknown.
    int column_of(const std::string& term) const;
    double idf(int column) const { return idf_[column]; }

    std::string to_json() const;
    static TfidfModel from_json(const std::string& json_text);

private:
    std::vector<std::string> terms_;
    std::vector<double> idf_;
    std::unordered_map<std::string, int> index_;
    int n_docs_ = 0;
};

}  // namespace tdc
