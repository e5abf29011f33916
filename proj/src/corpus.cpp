#include "tdc/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tdc/rng.hpp"
#include "tdc/text.hpp"

#include <json.hpp>

namespace tdc {

LabelVocabulary::LabelVocabulary(std::vector<std::string> sorted_labels)
    : labels_(std::move(sorted_labels)) {
    for (int i = 0; i < static_cast<int>(labels_.size()); ++i) index_[labels_[i]] = i;
}

int LabelVocabulary::index_of(const std::string& label) const {
    auto it = index_.find(label);
    return it == index_.end() ? -1 : it->second;
}

namespace {

int count_tabs(const std::string& line) {
    return static_cast<int>(std::count(line.begin(), line.end(), '\t'));
}

}  // namespace

std::vector<LabeledExample> load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path);
    std::vector<LabeledExample> examples;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        const int tabs = count_tabs(line);
        if (tabs != 1) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 2 tab-separated columns, got " +
                                     std::to_string(tabs + 1));
        }
        const size_t tab = line.find('\t');
        LabeledExample ex{text::trim(line.substr(0, tab)), text::trim(line.substr(tab + 1))};
        if (ex.text.empty()) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": empty text field");
        }
        if (ex.label.empty()) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": empty label field");
        }
        examples.push_back(std::move(ex));
    }
    if (examples.empty()) throw std::runtime_error("corpus file has no examples: " + path);
    return examples;
}

std::vector<std::string> load_unlabeled(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(text::trim(line));
    }
    return lines;
}

void save_corpus(const std::vector<LabeledExample>& examples, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write corpus file: " + path);
    for (const auto& ex : examples) out << ex.text << '\t' << ex.label << '\n';
}

LabelVocabulary build_label_vocab(const std::vector<LabeledExample>& examples) {
    std::set<std::string> distinct;
    for (const auto& ex : examples) distinct.insert(ex.label);
    if (distinct.empty()) throw std::runtime_error("no labels found while building vocabulary");
    return LabelVocabulary(std::vector<std::string>(distinct.begin(), distinct.end()));
}

DatasetSplit stratified_split(const std::vector<LabeledExample>& examples, double dev_fraction,
                              uint64_t seed) {
    if (dev_fraction <= 0.0 || dev_fraction >= 1.0)
        throw std::invalid_argument("dev_fraction must be in (0, 1)");
    std::map<std::string, std::vector<int>> by_label;
    for (int i = 0; i < static_cast<int>(examples.size()); ++i)
        by_label[examples[i].label].push_back(i);

    std::vector<std::string> too_small;
    for (const auto& [label, idx] : by_label)
        if (idx.size() < 2) too_small.push_back(label);
    if (!too_small.empty()) {
        std::string msg = "stratified_split needs >= 2 examples per label; offending labels:";
        for (const auto& l : too_small) msg += " " + l;
        throw std::runtime_error(msg);
    }

    RandomStream rs(mix_seed(seed, 0x517A));
    std::vector<char> in_dev(examples.size(), 0);
    // by_label is ordered by label, so the stream is consumed in a stable order.
    for (auto& [label, idx] : by_label) {
        const int count = static_cast<int>(idx.size());
        int n_dev = static_cast<int>(std::llround(count * dev_fraction));
        n_dev = std::clamp(n_dev, 1, count - 1);
        rs.shuffle(idx);
        for (int i = 0; i < n_dev; ++i) in_dev[idx[i]] = 1;
    }

    DatasetSplit split;
    for (int i = 0; i < static_cast<int>(examples.size()); ++i) {
        (in_dev[i] ? split.dev : split.train).push_back(examples[i]);
    }
    return split;
}

int length_percentile(std::vector<int> lengths, double q) {
    if (lengths.empty()) throw std::invalid_argument("length_percentile: empty input");
    const int n = static_cast<int>(lengths.size());
    int rank = static_cast<int>(std::ceil(q / 100.0 * n));
    rank = std::clamp(rank, 1, n);
    std::nth_element(lengths.begin(), lengths.begin() + (rank - 1), lengths.end());
    return lengths[rank - 1];
}

CorpusStats corpus_stats(const std::vector<LabeledExample>& examples) {
    if (examples.empty()) throw std::invalid_argument("corpus_stats: empty input");
    CorpusStats stats;
    std::vector<int> lengths;
    lengths.reserve(examples.size());
    double sum = 0.0;
    for (const auto& ex : examples) {
        ++stats.label_counts[ex.label];
        const int len = static_cast<int>(text::tokenize_basic(ex.text).size());
        lengths.push_back(len);
        sum += len;
    }
    stats.total = static_cast<int>(examples.size());
    stats.mean_tokens = sum / stats.total;
    stats.min_tokens = *std::min_element(lengths.begin(), lengths.end());
    stats.max_tokens = *std::max_element(lengths.begin(), lengths.end());
    stats.p50_tokens = length_percentile(lengths, 50.0);
    stats.p90_tokens = length_percentile(lengths, 90.0);
    stats.p95_tokens = length_percentile(lengths, 95.0);
    stats.p99_tokens = length_percentile(lengths, 99.0);
    return stats;
}

std::string render_stats_text(const CorpusStats& stats) {
    std::ostringstream out;
    out << "examples = " << stats.total << "\n";
    for (const auto& [label, count] : stats.label_counts)
        out << "count." << label << " = " << count << "\n";
    out << "tokens.mean = " << stats.mean_tokens << "\n";
    out << "tokens.min = " << stats.min_tokens << "\n";
    out << "tokens.p50 = " << stats.p50_tokens << "\n";
    out << "tokens.p90 = " << stats.p90_tokens << "\n";
    out << "tokens.p95 = " << stats.p95_tokens << "\n";
    out << "tokens.p99 = " << stats.p99_tokens << "\n";
    out << "tokens.max = " << stats.max_tokens << "\n";
    return out.str();
}

std::string render_stats_json(const CorpusStats& stats) {
    nlohmann::ordered_json j;
    j["examples"] = stats.total;
    j["label_counts"] = stats.label_counts;
    j["tokens"] = {{"mean", stats.mean_tokens}, {"min", stats.min_tokens},
                   {"p50", stats.p50_tokens},  {"p90", stats.p90_tokens},
                   {"p95", stats.p95_tokens},  {"p99", stats.p99_tokens},
                   {"max", stats.max_tokens}};
    return j.dump(2) + "\n";
}

}  // namespace tdc
