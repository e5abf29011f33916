#include "tdc/embeddings.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tdc/rng.hpp"

namespace tdc {

EmbeddingTable EmbeddingTable::load(const std::string& path, uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open embeddings file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("embeddings file is empty: " + path);
    std::istringstream header(line);
    long long v = 0, d = 0;
    if (!(header >> v >> d) || v < 0 || d <= 0)
        throw std::runtime_error(path + ":1: expected header `V d`");

    EmbeddingTable table;
    table.dim_ = static_cast<int>(d);
    table.words_.reserve(v);
    table.vectors_.reserve(v);

    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string word;
        row >> word;
        std::vector<double> vec;
        vec.reserve(d);
        double value;
        while (row >> value) vec.push_back(value);
        if (static_cast<long long>(vec.size()) != d) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(d) + " values, got " +
                                     std::to_string(vec.size()));
        }
        table.index_[word] = static_cast<int>(table.words_.size());
        table.words_.push_back(std::move(word));
        table.vectors_.push_back(std::move(vec));
    }
    if (static_cast<long long>(table.words_.size()) != v) {
        throw std::runtime_error(path + ": header declares " + std::to_string(v) +
                                 " rows, found " + std::to_string(table.words_.size()));
    }

    RandomStream rs(mix_seed(seed, 0x00EE));
    table.oov_.resize(d);
    for (auto& x : table.oov_) x = rs.uniform(-0.25, 0.25);
    return table;
}

const std::vector<double>& EmbeddingTable::lookup(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? oov_ : vectors_[it->second];
}

}  // namespace tdc
