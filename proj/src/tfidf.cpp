#include "tdc/tfidf.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace tdc {

double sparse_dot(const SparseVector& a, const SparseVector& b) {
    double s = 0.0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].first < b[j].first) {
            ++i;
        } else if (a[i].first > b[j].first) {
            ++j;
        } else {
            s += a[i].second * b[j].second;
            ++i;
            ++j;
        }
    }
    return s;
}

TfidfModel TfidfModel::fit(const std::vector<std::vector<std::string>>& documents) {
    if (documents.empty()) throw std::invalid_argument("fit_tfidf: need at least one document");
    std::map<std::string, int> df;  // ordered: columns end up lexicographic
    for (const auto& doc : documents) {
        std::map<std::string, int> seen;
        for (const auto& term : doc) seen[term] = 1;
        for (const auto& [term, _] : seen) ++df[term];
    }
    if (df.empty()) throw std::runtime_error("fit_tfidf: all documents are empty");

    TfidfModel model;
    model.n_docs_ = static_cast<int>(documents.size());
    model.terms_.reserve(df.size());
    model.idf_.reserve(df.size());
    const double n = static_cast<double>(model.n_docs_);
    for (const auto& [term, count] : df) {
        model.index_[term] = static_cast<int>(model.terms_.size());
        model.terms_.push_back(term);
        model.idf_.push_back(std::log((1.0 + n) / (1.0 + count)) + 1.0);
    }
    return model;
}

int TfidfModel::column_of(const std::string& term) const {
    auto it = index_.find(term);
    return it == index_.end() ? -1 : it->second;
}

SparseVector TfidfModel::transform(const std::vector<std::string>& document) const {
    if (n_docs_ == 0) throw std::runtime_error("transform_tfidf: model is not fitted");
    std::map<int, double> counts;
    for (const auto& term : document) {
        const int col = column_of(term);
        if (col >= 0) counts[col] += 1.0;
    }
    SparseVector vec;
    vec.reserve(counts.size());
    double norm_sq = 0.0;
    for (const auto& [col, count] : counts) {
        const double w = count * idf_[col];
        vec.emplace_back(col, w);
        norm_sq += w * w;
    }
    if (norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (auto& [_, w] : vec) w *= inv;
    }
    return vec;
}

std::string TfidfModel::to_json() const {
    nlohmann::ordered_json j;
    j["n_docs"] = n_docs_;
    j["terms"] = terms_;
    j["idf"] = idf_;
    return j.dump() + "\n";
}

TfidfModel TfidfModel::from_json(const std::string& json_text) {
    const auto j = nlohmann::json::parse(json_text);
    TfidfModel model;
    model.n_docs_ = j.at("n_docs").get<int>();
    model.terms_ = j.at("terms").get<std::vector<std::string>>();
    model.idf_ = j.at("idf").get<std::vector<double>>();
    if (model.terms_.size() != model.idf_.size())
        throw std::runtime_error("tfidf model file is inconsistent");
    for (int i = 0; i < static_cast<int>(model.terms_.size()); ++i)
        model.index_[model.terms_[i]] = i;
    return model;
}

}  // namespace tdc
