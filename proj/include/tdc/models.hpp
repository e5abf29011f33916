#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "tdc/corpus.hpp"
#include "tdc/embeddings.hpp"
#include "tdc/encoder.hpp"
#include "tdc/matrix.hpp"
#include "tdc/nn.hpp"
#include "tdc/subword.hpp"
#include "tdc/svm.hpp"
#include "tdc/tfidf.hpp"

namespace tdc {

enum class Architecture { svm_tfidf, cnn_text, transformer_cls, transformer_cnn };

std::string to_string(Architecture arch);
Architecture architecture_from_string(const std::string& name);

struct ClassifierConfig {
    Architecture architecture = Architecture::transformer_cls;
    std::vector<int> filter_widths = {3, 4, 5};
    int maps_per_width = 100;
    double dropout = 0.1;
    double svm_c = 1.0;
    int max_len = 128;
    int ngram_order = 1;  // baseline term features: 1 = unigrams only
    bool freeze_encoder = false;
    int hidden_dim = 0;  // resolved from the encoder/embeddings when built

    void validate() const;
};

// Baseline term features: unigrams, plus space-joined n-grams when
// ngram_order > 1.
std::vector<std::string> ngram_terms(const std::vector<std::string>& unigrams, int order);

// ---------------------------------------------------------------------------
// Classifier heads shared between architectures.
// ---------------------------------------------------------------------------

// Linear + softmax over the classification state.
struct ClsHead {
    nn::Linear linear;

    struct Cache {
        Matrix cls;  // [n x hidden] after dropout
        nn::DropoutCache dropout;
        Matrix probs;
    };

    void init(int hidden, int classes, RandomStream& rs) { linear.init(hidden, classes, rs); }
    Matrix forward(const BatchEncoding& enc, double dropout, bool training, RandomStream* rs,
                   Cache& cache) const;
    // Consumes d(logits); returns d(states) for the encoder.
    Matrix backward(const BatchEncoding& enc, const Cache& cache, const Matrix& dlogits);
    void collect(std::vector<nn::ParamRef>& out) { linear.collect("head", out); }
};

// Convolution bank + max-over-time pooling + linear + softmax over the full
// token-state matrix. Masked positions are zeroed before the convolution
// and windows never pool across the real-token boundary.
struct CnnHead {
    nn::ConvBank conv;
    nn::Linear linear;

    struct Cache {
        std::vector<Matrix> inputs;  // per example, masked states
        nn::ConvBank::Cache conv;
        Matrix pooled;  // after dropout
        nn::DropoutCache dropout;
        Matrix probs;
    };

    void init(const ClassifierConfig& config, int input_dim, int classes, RandomStream& rs);
    Matrix forward_states(const std::vector<Matrix>& inputs, const std::vector<int>& real_lens,
                          double dropout, bool training, RandomStream* rs, Cache& cache) const;
    Matrix forward(const BatchEncoding& enc, double dropout, bool training, RandomStream* rs,
                   Cache& cache) const;
    // Returns per-example input gradients (zero at masked positions).
    std::vector<Matrix> backward_states(const Cache& cache, const std::vector<int>& real_lens,
                                        const Matrix& dlogits);
    Matrix backward(const BatchEncoding& enc, const Cache& cache, const Matrix& dlogits);
    void collect(std::vector<nn::ParamRef>& out);
};

// ---------------------------------------------------------------------------

// A trained classifier of any architecture behind one predict interface.
class ClassifierModel {
public:
    virtual ~ClassifierModel() = default;

    virtual Architecture architecture() const = 0;
    const LabelVocabulary& label_vocab() const { return vocab_; }
    const ClassifierConfig& config() const { return config_; }

    // Probability rows over the label vocabulary, inference mode.
    virtual Matrix predict_proba(const std::vector<std::string>& texts) const = 0;

    struct Prediction {
        std::string label;
        std::vector<double> probabilities;
    };
    std::vector<Prediction> predict(const std::vector<std::string>& texts) const;

    virtual void save(const std::string& dir) const = 0;
    static std::unique_ptr<ClassifierModel> load(const std::string& dir);

protected:
    ClassifierModel(LabelVocabulary vocab, ClassifierConfig config)
        : vocab_(std::move(vocab)), config_(std::move(config)) {}
    void require_trained(bool trained) const;

    LabelVocabulary vocab_;
    ClassifierConfig config_;
};

// Gradient-trained architectures also expose batch forward/backward over a
// pre-tokenized dataset for the training loop.
class GradientTrainable {
public:
    virtual ~GradientTrainable() = default;
    virtual std::vector<nn::ParamRef> trainable_params() = 0;
    virtual void set_dataset(const std::vector<std::string>& texts) = 0;
    virtual Matrix forward_batch(const std::vector<int>& indices, bool training,
                                 RandomStream* rs) = 0;
    virtual void backward_batch(const Matrix& dlogits) = 0;
};

// ---------------------------------------------------------------------------

class SvmTfidfModel final : public ClassifierModel {
public:
    SvmTfidfModel(LabelVocabulary vocab, ClassifierConfig config)
        : ClassifierModel(std::move(vocab), std::move(config)) {}

    Architecture architecture() const override { return Architecture::svm_tfidf; }

    // Fits TF-IDF on the training texts and trains the one-vs-rest SVM.
    void fit(const std::vector<std::string>& texts, const std::vector<int>& labels);

    Matrix predict_proba(const std::vector<std::string>& texts) const override;
    Matrix decision_values(const std::vector<std::string>& texts) const;
    const TfidfModel& tfidf() const { return tfidf_; }
    const SvmParams& params() const { return params_; }

    void save(const std::string& dir) const override;
    static std::unique_ptr<SvmTfidfModel> load(const std::string& dir, LabelVocabulary vocab,
                                               ClassifierConfig config);

    SparseVector vectorize(const std::string& text) const;

private:
    TfidfModel tfidf_;
    SvmParams params_;
    bool trained_ = false;
};

class CnnTextModel final : public ClassifierModel, public GradientTrainable {
public:
    // Vocabulary rows 0/1 are PAD (fixed zero) and UNK; the remaining rows
    // are the training vocabulary initialized from the pretrained table
    // (non-static: updated during training).
    CnnTextModel(LabelVocabulary vocab, ClassifierConfig config,
                 const std::vector<std::string>& train_texts, const EmbeddingTable& table,
                 uint64_t seed);

    Architecture architecture() const override { return Architecture::cnn_text; }
    Matrix predict_proba(const std::vector<std::string>& texts) const override;

    std::vector<nn::ParamRef> trainable_params() override;
    void set_dataset(const std::vector<std::string>& texts) override;
    Matrix forward_batch(const std::vector<int>& indices, bool training, RandomStream* rs) override;
    void backward_batch(const Matrix& dlogits) override;

    void mark_trained() { trained_ = true; }
    int embedding_dim() const { return embedding_.cols(); }
    int word_count() const { return static_cast<int>(words_.size()); }

    void save(const std::string& dir) const override;
    static std::unique_ptr<CnnTextModel> load(const std::string& dir, LabelVocabulary vocab,
                                              ClassifierConfig config);

    std::vector<int> term_ids(const std::string& text) const;

private:
    CnnTextModel(LabelVocabulary vocab, ClassifierConfig config);  // for load()

    Matrix proba_from_ids(const std::vector<std::vector<int>>& ids, bool training,
                          RandomStream* rs, CnnHead::Cache& cache,
                          std::vector<std::vector<int>>* used_ids) const;

    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;

    std::vector<std::string> words_;  // index 0 PAD, 1 UNK
    std::unordered_map<std::string, int> word_index_;
    Matrix embedding_, g_embedding_;
    CnnHead head_;
    bool trained_ = false;

    // Training state.
    std::vector<std::vector<int>> dataset_ids_;
    CnnHead::Cache train_cache_;
    std::vector<std::vector<int>> batch_ids_;
};

class TransformerClsModel final : public ClassifierModel, public GradientTrainable {
public:
    TransformerClsModel(LabelVocabulary vocab, ClassifierConfig config,
                        std::unique_ptr<EncoderAdapter> encoder, uint64_t seed);

    Architecture architecture() const override { return Architecture::transformer_cls; }
    Matrix predict_proba(const std::vector<std::string>& texts) const override;
    Matrix proba_from_sequences(const std::vector<TokenSequence>& batch) const;

    std::vector<nn::ParamRef> trainable_params() override;
    void set_dataset(const std::vector<std::string>& texts) override;
    Matrix forward_batch(const std::vector<int>& indices, bool training, RandomStream* rs) override;
    void backward_batch(const Matrix& dlogits) override;

    void mark_trained() { trained_ = true; }
    EncoderAdapter& encoder() { return *encoder_; }
    ClsHead& head() { return head_; }

    void save(const std::string& dir) const override;
    static std::unique_ptr<TransformerClsModel> load(const std::string& dir, LabelVocabulary vocab,
                                                     ClassifierConfig config);

private:
    std::unique_ptr<EncoderAdapter> encoder_;
    ClsHead head_;
    bool trained_ = false;

    std::vector<TokenSequence> dataset_;
    ClsHead::Cache train_cache_;
    BatchEncoding train_encoding_;
};

class TransformerCnnModel final : public ClassifierModel, public GradientTrainable {
public:
    TransformerCnnModel(LabelVocabulary vocab, ClassifierConfig config,
                        std::unique_ptr<EncoderAdapter> encoder, uint64_t seed);

    Architecture architecture() const override { return Architecture::transformer_cnn; }
    Matrix predict_proba(const std::vector<std::string>& texts) const override;
    Matrix proba_from_sequences(const std::vector<TokenSequence>& batch) const;

    std::vector<nn::ParamRef> trainable_params() override;
    void set_dataset(const std::vector<std::string>& texts) override;
    Matrix forward_batch(const std::vector<int>& indices, bool training, RandomStream* rs) override;
    void backward_batch(const Matrix& dlogits) override;

    void mark_trained() { trained_ = true; }
    EncoderAdapter& encoder() { return *encoder_; }
    CnnHead& head() { return head_; }

    void save(const std::string& dir) const override;
    static std::unique_ptr<TransformerCnnModel> load(const std::string& dir, LabelVocabulary vocab,
                                                     ClassifierConfig config);

private:
    std::unique_ptr<EncoderAdapter> encoder_;
    CnnHead head_;
    bool trained_ = false;

    std::vector<TokenSequence> dataset_;
    CnnHead::Cache train_cache_;
    BatchEncoding train_encoding_;
};

// ---------------------------------------------------------------------------
// Operation-style entry points (inference mode), mirroring the per-
// architecture forward contracts. The model classes run the same code.
// ---------------------------------------------------------------------------

Matrix transformer_cls_forward(EncoderAdapter& adapter, const std::vector<TokenSequence>& batch,
                               const ClsHead& head);
Matrix transformer_cnn_forward(EncoderAdapter& adapter, const std::vector<TokenSequence>& batch,
                               const CnnHead& head);

}  // namespace tdc
