#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace tdc {

// One sentence with its gold domain label. Text is non-empty after
// trimming; labels carry no tabs or newlines.
struct LabeledExample {
    std::string text;
    std::string label;

    friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

// Ordered, bidirectional label <-> index mapping. Labels are kept in
// lexicographic order so class indices are reproducible across runs and
// machines; the inventory always comes from data, never from a hardcoded
// list.
class LabelVocabulary {
public:
    LabelVocabulary() = default;
    explicit LabelVocabulary(std::vector<std::string> sorted_labels);

    int size() const { return static_cast<int>(labels_.size()); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::string& label(int index) const { return labels_.at(index); }
    // -1 when unknown.
    int index_of(const std::string& label) const;
    bool contains(const std::string& label) const { return index_of(label) >= 0; }

    friend bool operator==(const LabelVocabulary&, const LabelVocabulary&) = default;

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, int> index_;
};

struct DatasetSplit {
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> dev;
    std::vector<LabeledExample> test;
};

// Loads a two-column `text<TAB>label` UTF-8 TSV (no header). Whitespace
// around both fields is trimmed, blank lines are skipped. A wrong column
// count or an empty file raises with the offending line number.
std::vector<LabeledExample> load_corpus(const std::string& path);

// Single-column variant for unlabeled test data: one sentence per line.
std::vector<std::string> load_unlabeled(const std::string& path);

void save_corpus(const std::vector<LabeledExample>& examples, const std::string& path);

LabelVocabulary build_label_vocab(const std::vector<LabeledExample>& examples);

// Deterministic per-label split; every label needs at least 2 examples.
// Within each label the dev share is round(count * dev_fraction) clamped to
// [1, count-1], which keeps the proportion within 1/count of dev_fraction.
DatasetSplit stratified_split(const std::vector<LabeledExample>& examples, double dev_fraction,
                              uint64_t seed);

struct CorpusStats {
    std::map<std::string, int> label_counts;  // ordered for stable rendering
    int total = 0;
    double mean_tokens = 0.0;
    int min_tokens = 0;
    int p50_tokens = 0;
    int p90_tokens = 0;
    int p95_tokens = 0;
    int p99_tokens = 0;
    int max_tokens = 0;
};

CorpusStats corpus_stats(const std::vector<LabeledExample>& examples);

// Nearest-rank percentile (q in (0,100]) of token counts.
int length_percentile(std::vector<int> lengths, double q);

std::string render_stats_text(const CorpusStats& stats);
std::string render_stats_json(const CorpusStats& stats);

}  // namespace tdc
