#include "tdc/models.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "tdc/kernels.hpp"
#include "tdc/serialize.hpp"
#include "tdc/text.hpp"
#include "tdc/version.hpp"

namespace tdc {

namespace k = tdc::kernels;
namespace fs = std::filesystem;

std::string to_string(Architecture arch) {
    switch (arch) {
        case Architecture::svm_tfidf: return "svm_tfidf";
        case Architecture::cnn_text: return "cnn_text";
        case Architecture::transformer_cls: return "transformer_cls";
        case Architecture::transformer_cnn: return "transformer_cnn";
    }
    throw std::logic_error("unreachable architecture");
}

Architecture architecture_from_string(const std::string& name) {
    if (name == "svm_tfidf") return Architecture::svm_tfidf;
    if (name == "cnn_text" || name == "cnn") return Architecture::cnn_text;
    if (name == "transformer_cls") return Architecture::transformer_cls;
    if (name == "transformer_cnn") return Architecture::transformer_cnn;
    throw std::invalid_argument("unknown architecture: " + name);
}

void ClassifierConfig::validate() const {
    if (filter_widths.empty()) throw std::invalid_argument("config: filter_widths is empty");
    for (int w : filter_widths)
        if (w < 1) throw std::invalid_argument("config: filter widths must be >= 1");
    if (maps_per_width < 1) throw std::invalid_argument("config: maps_per_width must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0)
        throw std::invalid_argument("config: dropout must be in [0, 1)");
    if (svm_c <= 0.0) throw std::invalid_argument("config: svm_c must be positive");
    if (max_len < 2 || max_len > SubwordTokenizer::kMaxSequenceLength)
        throw std::invalid_argument("config: max_len must be in [2, 512]");
    if (ngram_order < 1) throw std::invalid_argument("config: ngram_order must be >= 1");
}

std::vector<std::string> ngram_terms(const std::vector<std::string>& unigrams, int order) {
    if (order <= 1) return unigrams;
    std::vector<std::string> terms = unigrams;
    for (int n = 2; n <= order; ++n) {
        for (size_t i = 0; i + n <= unigrams.size(); ++i) {
            std::string joined = unigrams[i];
            for (int j = 1; j < n; ++j) joined += " " + unigrams[i + j];
            terms.push_back(std::move(joined));
        }
    }
    return terms;
}

namespace {

Matrix maybe_dropout(const Matrix& x, double p, bool training, RandomStream* rs,
                     nn::DropoutCache& cache) {
    if (!training || p <= 0.0) {
        cache.mask = Matrix();
        return x;
    }
    if (rs == nullptr) throw std::logic_error("training-mode dropout needs a random stream");
    return nn::dropout_forward(x, p, true, *rs, cache);
}

}  // namespace

// ---------------------------------------------------------------------------
// ClsHead
// ---------------------------------------------------------------------------

Matrix ClsHead::forward(const BatchEncoding& enc, double dropout, bool training, RandomStream* rs,
                        Cache& cache) const {
    if (enc.states.cols() != linear.in_dim())
        throw std::invalid_argument("cls head: encoder width " + std::to_string(enc.states.cols()) +
                                    " does not match head input width " +
                                    std::to_string(linear.in_dim()));
    const int n = enc.batch_size();
    Matrix cls(n, enc.states.cols());
    for (int e = 0; e < n; ++e) {
        const double* src = enc.states.row(e * enc.len);  // classification position
        std::copy(src, src + enc.states.cols(), cls.row(e));
    }
    cache.cls = maybe_dropout(cls, dropout, training, rs, cache.dropout);
    Matrix probs = linear.forward(cache.cls);
    k::softmax_rows(probs);
    cache.probs = probs;
    return probs;
}

Matrix ClsHead::backward(const BatchEncoding& enc, const Cache& cache, const Matrix& dlogits) {
    Matrix d_dropped = linear.backward(cache.cls, dlogits);
    Matrix d_cls = nn::dropout_backward(d_dropped, cache.dropout);
    Matrix d_states(enc.states.rows(), enc.states.cols());
    for (int e = 0; e < enc.batch_size(); ++e) {
        const double* src = d_cls.row(e);
        std::copy(src, src + d_cls.cols(), d_states.row(e * enc.len));
    }
    return d_states;
}

// ---------------------------------------------------------------------------
// CnnHead
// ---------------------------------------------------------------------------

void CnnHead::init(const ClassifierConfig& config, int input_dim, int classes, RandomStream& rs) {
    conv.init(config.filter_widths, config.maps_per_width, input_dim, rs);
    linear.init(conv.pooled_dim(), classes, rs);
}

Matrix CnnHead::forward_states(const std::vector<Matrix>& inputs,
                               const std::vector<int>& real_lens, double dropout, bool training,
                               RandomStream* rs, Cache& cache) const {
    Matrix pooled = conv.forward(inputs, real_lens, cache.conv);
    cache.pooled = maybe_dropout(pooled, dropout, training, rs, cache.dropout);
    Matrix probs = linear.forward(cache.pooled);
    k::softmax_rows(probs);
    cache.probs = probs;
    return probs;
}

Matrix CnnHead::forward(const BatchEncoding& enc, double dropout, bool training, RandomStream* rs,
                        Cache& cache) const {
    if (enc.states.cols() != conv.input_dim)
        throw std::invalid_argument("cnn head: encoder width does not match conv input width");
    const int n = enc.batch_size();
    std::vector<Matrix> inputs(n);
    k::parallel_for(n, [&](int e) {
        Matrix x(enc.len, enc.states.cols());
        const int valid = enc.real_lens[e];
        for (int i = 0; i < valid; ++i) {
            const double* src = enc.states.row(e * enc.len + i);
            std::copy(src, src + x.cols(), x.row(i));
        }
        // Masked positions stay zero so no window depends on padding content.
        inputs[e] = std::move(x);
    });
    cache.inputs = inputs;
    return forward_states(inputs, enc.real_lens, dropout, training, rs, cache);
}

std::vector<Matrix> CnnHead::backward_states(const Cache& cache, const std::vector<int>& real_lens,
                                             const Matrix& dlogits) {
    Matrix d_dropped = linear.backward(cache.pooled, dlogits);
    Matrix d_pooled = nn::dropout_backward(d_dropped, cache.dropout);
    std::vector<Matrix> dxs = conv.backward(cache.conv, d_pooled);
    // The forward pass zeroed masked inputs, so their gradient is zero.
    for (size_t e = 0; e < dxs.size(); ++e) {
        for (int i = real_lens[e]; i < dxs[e].rows(); ++i) {
            double* row = dxs[e].row(i);
            std::fill(row, row + dxs[e].cols(), 0.0);
        }
    }
    return dxs;
}

Matrix CnnHead::backward(const BatchEncoding& enc, const Cache& cache, const Matrix& dlogits) {
    std::vector<Matrix> dxs = backward_states(cache, enc.real_lens, dlogits);
    Matrix d_states(enc.states.rows(), enc.states.cols());
    for (int e = 0; e < enc.batch_size(); ++e)
        for (int i = 0; i < enc.len; ++i) {
            const double* src = dxs[e].row(i);
            std::copy(src, src + d_states.cols(), d_states.row(e * enc.len + i));
        }
    return d_states;
}

void CnnHead::collect(std::vector<nn::ParamRef>& out) {
    conv.collect("head", out);
    linear.collect("head.fc", out);
}

// ---------------------------------------------------------------------------
// ClassifierModel
// ---------------------------------------------------------------------------

void ClassifierModel::require_trained(bool trained) const {
    if (!trained)
        throw std::runtime_error("model (" + to_string(architecture()) + ") is not trained");
}

std::vector<ClassifierModel::Prediction> ClassifierModel::predict(
    const std::vector<std::string>& texts) const {
    if (texts.empty()) throw std::invalid_argument("predict: empty text list");
    const Matrix probs = predict_proba(texts);
    std::vector<Prediction> out;
    out.reserve(texts.size());
    for (int i = 0; i < probs.rows(); ++i) {
        const int best = nn::argmax_row(probs.row(i), probs.cols());
        out.push_back({vocab_.label(best),
                       std::vector<double>(probs.row(i), probs.row(i) + probs.cols())});
    }
    return out;
}

// ---------------------------------------------------------------------------
// SvmTfidfModel
// ---------------------------------------------------------------------------

SparseVector SvmTfidfModel::vectorize(const std::string& text) const {
    return tfidf_.transform(ngram_terms(text::tokenize_basic(text), config_.ngram_order));
}

void SvmTfidfModel::fit(const std::vector<std::string>& texts, const std::vector<int>& labels) {
    std::vector<std::vector<std::string>> docs;
    docs.reserve(texts.size());
    for (const auto& t : texts)
        docs.push_back(ngram_terms(text::tokenize_basic(t), config_.ngram_order));
    tfidf_ = TfidfModel::fit(docs);
    std::vector<SparseVector> vectors;
    vectors.reserve(docs.size());
    for (const auto& doc : docs) vectors.push_back(tfidf_.transform(doc));
    SvmOptions options;
    options.c = config_.svm_c;
    params_ = svm_train(vectors, labels, vocab_.size(), options);
    trained_ = true;
}

Matrix SvmTfidfModel::decision_values(const std::vector<std::string>& texts) const {
    require_trained(trained_);
    std::vector<SparseVector> vectors;
    vectors.reserve(texts.size());
    for (const auto& t : texts) vectors.push_back(vectorize(t));
    return svm_decision_values(params_, vectors);
}

Matrix SvmTfidfModel::predict_proba(const std::vector<std::string>& texts) const {
    Matrix probs = decision_values(texts);
    k::softmax_rows(probs);
    return probs;
}

void SvmTfidfModel::save(const std::string& dir) const {
    require_trained(trained_);
    write_text_file((fs::path(dir) / "tfidf.json").string(), tfidf_.to_json());
    save_named_tensors((fs::path(dir) / "params.bin").string(),
                       {{"svm.weights", &params_.weights}});
}

std::unique_ptr<SvmTfidfModel> SvmTfidfModel::load(const std::string& dir, LabelVocabulary vocab,
                                                   ClassifierConfig config) {
    auto model = std::make_unique<SvmTfidfModel>(std::move(vocab), std::move(config));
    model->tfidf_ = TfidfModel::from_json(read_text_file((fs::path(dir) / "tfidf.json").string()));
    auto tensors = load_named_tensors((fs::path(dir) / "params.bin").string());
    model->params_.weights = std::move(tensors.at("svm.weights"));
    model->params_.classes = model->params_.weights.rows();
    model->params_.dim = model->params_.weights.cols() - 1;
    if (model->params_.classes != model->vocab_.size())
        throw std::runtime_error("svm weights do not match the label vocabulary");
    model->trained_ = true;
    return model;
}

// ---------------------------------------------------------------------------
// CnnTextModel
// ---------------------------------------------------------------------------

CnnTextModel::CnnTextModel(LabelVocabulary vocab, ClassifierConfig config)
    : ClassifierModel(std::move(vocab), std::move(config)) {}

CnnTextModel::CnnTextModel(LabelVocabulary vocab, ClassifierConfig config,
                           const std::vector<std::string>& train_texts,
                           const EmbeddingTable& table, uint64_t seed)
    : ClassifierModel(std::move(vocab), std::move(config)) {
    if (table.dim() <= 0) throw std::invalid_argument("cnn_text: embedding table is empty");
    std::set<std::string> distinct;
    for (const auto& t : train_texts)
        for (auto& term : text::tokenize_basic(t)) distinct.insert(std::move(term));
    words_.reserve(distinct.size() + 2);
    words_.push_back("<pad>");
    words_.push_back("<unk>");
    for (const auto& w : distinct) words_.push_back(w);
    for (int i = 0; i < static_cast<int>(words_.size()); ++i) word_index_[words_[i]] = i;

    const int d = table.dim();
    embedding_ = Matrix(static_cast<int>(words_.size()), d);
    for (int j = 0; j < d; ++j) embedding_(kUnk, j) = table.oov_vector()[j];
    for (int i = 2; i < static_cast<int>(words_.size()); ++i) {
        const auto& vec = table.lookup(words_[i]);
        for (int j = 0; j < d; ++j) embedding_(i, j) = vec[j];
    }
    g_embedding_ = Matrix(embedding_.rows(), embedding_.cols());

    RandomStream rs(mix_seed(seed, 0xC881));
    head_.init(config_, d, vocab_.size(), rs);
    config_.hidden_dim = d;
}

std::vector<int> CnnTextModel::term_ids(const std::string& text) const {
    std::vector<int> ids;
    for (const auto& term : text::tokenize_basic(text)) {
        auto it = word_index_.find(term);
        ids.push_back(it == word_index_.end() ? kUnk : it->second);
    }
    return ids;
}

Matrix CnnTextModel::proba_from_ids(const std::vector<std::vector<int>>& ids, bool training,
                                    RandomStream* rs, CnnHead::Cache& cache,
                                    std::vector<std::vector<int>>* used_ids) const {
    const int n = static_cast<int>(ids.size());
    const int mw = head_.conv.max_width();
    const int d = embedding_.cols();
    std::vector<Matrix> inputs(n);
    std::vector<int> real_lens(n);
    std::vector<std::vector<int>> padded(n);
    for (int e = 0; e < n; ++e) {
        if (ids[e].empty())
            throw std::runtime_error(
                "cnn_text: empty term list; need at least 1 term per document");
        real_lens[e] = static_cast<int>(ids[e].size());
        padded[e] = ids[e];
        while (static_cast<int>(padded[e].size()) < mw) padded[e].push_back(kPad);
        Matrix x(static_cast<int>(padded[e].size()), d);
        for (int t = 0; t < x.rows(); ++t) {
            const double* src = embedding_.row(padded[e][t]);
            std::copy(src, src + d, x.row(t));
        }
        inputs[e] = std::move(x);
    }
    if (used_ids != nullptr) *used_ids = std::move(padded);
    return head_.forward_states(inputs, real_lens, config_.dropout, training, rs, cache);
}

Matrix CnnTextModel::predict_proba(const std::vector<std::string>& texts) const {
    require_trained(trained_);
    std::vector<std::vector<int>> ids;
    ids.reserve(texts.size());
    for (const auto& t : texts) ids.push_back(term_ids(t));
    CnnHead::Cache cache;
    return proba_from_ids(ids, false, nullptr, cache, nullptr);
}

std::vector<nn::ParamRef> CnnTextModel::trainable_params() {
    std::vector<nn::ParamRef> params;
    params.push_back({"embedding", &embedding_, &g_embedding_});
    head_.collect(params);
    return params;
}

void CnnTextModel::set_dataset(const std::vector<std::string>& texts) {
    dataset_ids_.clear();
    dataset_ids_.reserve(texts.size());
    for (const auto& t : texts) dataset_ids_.push_back(term_ids(t));
}

Matrix CnnTextModel::forward_batch(const std::vector<int>& indices, bool training,
                                   RandomStream* rs) {
    std::vector<std::vector<int>> ids;
    ids.reserve(indices.size());
    for (int i : indices) ids.push_back(dataset_ids_.at(i));
    return proba_from_ids(ids, training, rs, train_cache_, &batch_ids_);
}

void CnnTextModel::backward_batch(const Matrix& dlogits) {
    std::vector<int> real_lens(batch_ids_.size());
    for (size_t e = 0; e < batch_ids_.size(); ++e) {
        int len = static_cast<int>(batch_ids_[e].size());
        while (len > 0 && batch_ids_[e][len - 1] == kPad) --len;
        real_lens[e] = len;
    }
    std::vector<Matrix> dxs = head_.backward_states(train_cache_, real_lens, dlogits);
    // Serial scatter keeps embedding-gradient accumulation deterministic.
    for (size_t e = 0; e < batch_ids_.size(); ++e) {
        for (int t = 0; t < dxs[e].rows(); ++t) {
            const int id = batch_ids_[e][t];
            if (id == kPad) continue;  // PAD stays a fixed zero vector
            double* dst = g_embedding_.row(id);
            const double* src = dxs[e].row(t);
            for (int j = 0; j < dxs[e].cols(); ++j) dst[j] += src[j];
        }
    }
}

void CnnTextModel::save(const std::string& dir) const {
    require_trained(trained_);
    std::string words;
    for (const auto& w : words_) {
        words += w;
        words += '\n';
    }
    write_text_file((fs::path(dir) / "words.txt").string(), words);
    std::vector<std::pair<std::string, const Matrix*>> tensors = {{"embedding", &embedding_}};
    auto self = const_cast<CnnTextModel*>(this);
    std::vector<nn::ParamRef> params;
    self->head_.collect(params);
    for (const auto& p : params) tensors.emplace_back(p.name, p.value);
    save_named_tensors((fs::path(dir) / "params.bin").string(), tensors);
}

std::unique_ptr<CnnTextModel> CnnTextModel::load(const std::string& dir, LabelVocabulary vocab,
                                                 ClassifierConfig config) {
    std::unique_ptr<CnnTextModel> model(
        new CnnTextModel(std::move(vocab), std::move(config)));
    const std::string words_text = read_text_file((fs::path(dir) / "words.txt").string());
    size_t start = 0;
    while (start < words_text.size()) {
        const size_t end = words_text.find('\n', start);
        if (end == std::string::npos) break;
        model->words_.push_back(words_text.substr(start, end - start));
        start = end + 1;
    }
    for (int i = 0; i < static_cast<int>(model->words_.size()); ++i)
        model->word_index_[model->words_[i]] = i;

    auto tensors = load_named_tensors((fs::path(dir) / "params.bin").string());
    model->embedding_ = std::move(tensors.at("embedding"));
    model->g_embedding_ = Matrix(model->embedding_.rows(), model->embedding_.cols());
    RandomStream rs(0);
    model->head_.init(model->config_, model->embedding_.cols(), model->vocab_.size(), rs);
    std::vector<nn::ParamRef> params;
    model->head_.collect(params);
    for (auto& p : params) {
        auto it = tensors.find(p.name);
        if (it == tensors.end()) throw std::runtime_error("model file missing tensor " + p.name);
        *p.value = std::move(it->second);
    }
    model->trained_ = true;
    return model;
}

// ---------------------------------------------------------------------------
// TransformerClsModel
// ---------------------------------------------------------------------------

TransformerClsModel::TransformerClsModel(LabelVocabulary vocab, ClassifierConfig config,
                                         std::unique_ptr<EncoderAdapter> encoder, uint64_t seed)
    : ClassifierModel(std::move(vocab), std::move(config)), encoder_(std::move(encoder)) {
    RandomStream rs(mix_seed(seed, 0xC15));
    head_.init(encoder_->hidden_dim(), vocab_.size(), rs);
    config_.hidden_dim = encoder_->hidden_dim();
}

Matrix TransformerClsModel::proba_from_sequences(const std::vector<TokenSequence>& batch) const {
    const BatchEncoding enc = encoder_->forward_inference(batch);
    ClsHead::Cache cache;
    return head_.forward(enc, 0.0, false, nullptr, cache);
}

Matrix TransformerClsModel::predict_proba(const std::vector<std::string>& texts) const {
    require_trained(trained_);
    std::vector<TokenSequence> batch;
    batch.reserve(texts.size());
    for (const auto& t : texts)
        batch.push_back(encode_subwords(t, encoder_->tokenizer(), config_.max_len));
    return proba_from_sequences(batch);
}

std::vector<nn::ParamRef> TransformerClsModel::trainable_params() {
    std::vector<nn::ParamRef> params;
    head_.collect(params);
    if (!config_.freeze_encoder) {
        for (auto& p : encoder_->trainable_params()) params.push_back(p);
    }
    return params;
}

void TransformerClsModel::set_dataset(const std::vector<std::string>& texts) {
    dataset_.clear();
    dataset_.reserve(texts.size());
    for (const auto& t : texts)
        dataset_.push_back(encode_subwords(t, encoder_->tokenizer(), config_.max_len));
}

Matrix TransformerClsModel::forward_batch(const std::vector<int>& indices, bool training,
                                          RandomStream* rs) {
    std::vector<TokenSequence> batch;
    batch.reserve(indices.size());
    for (int i : indices) batch.push_back(dataset_.at(i));
    train_encoding_ = encoder_->forward(batch);
    return head_.forward(train_encoding_, config_.dropout, training, rs, train_cache_);
}

void TransformerClsModel::backward_batch(const Matrix& dlogits) {
    Matrix d_states = head_.backward(train_encoding_, train_cache_, dlogits);
    if (!config_.freeze_encoder) encoder_->backward(d_states);
}

void TransformerClsModel::save(const std::string& dir) const {
    require_trained(trained_);
    encoder_->save((fs::path(dir) / "encoder").string());
    save_named_tensors((fs::path(dir) / "params.bin").string(),
                       {{"head.w", &head_.linear.w}, {"head.b", &head_.linear.b}});
}

std::unique_ptr<TransformerClsModel> TransformerClsModel::load(const std::string& dir,
                                                               LabelVocabulary vocab,
                                                               ClassifierConfig config) {
    auto encoder = TinyEncoder::load((fs::path(dir) / "encoder").string());
    auto model = std::make_unique<TransformerClsModel>(std::move(vocab), std::move(config),
                                                       std::move(encoder), 0);
    auto tensors = load_named_tensors((fs::path(dir) / "params.bin").string());
    model->head_.linear.w = std::move(tensors.at("head.w"));
    model->head_.linear.b = std::move(tensors.at("head.b"));
    model->trained_ = true;
    return model;
}

// ---------------------------------------------------------------------------
// TransformerCnnModel
// ---------------------------------------------------------------------------

TransformerCnnModel::TransformerCnnModel(LabelVocabulary vocab, ClassifierConfig config,
                                         std::unique_ptr<EncoderAdapter> encoder, uint64_t seed)
    : ClassifierModel(std::move(vocab), std::move(config)), encoder_(std::move(encoder)) {
    RandomStream rs(mix_seed(seed, 0xC22));
    head_.init(config_, encoder_->hidden_dim(), vocab_.size(), rs);
    config_.hidden_dim = encoder_->hidden_dim();
    if (config_.max_len < head_.conv.max_width())
        throw std::invalid_argument(
            "transformer_cnn: max_len " + std::to_string(config_.max_len) +
            " is smaller than the largest filter width " +
            std::to_string(head_.conv.max_width()) + "; pad sequences to at least that length");
}

Matrix TransformerCnnModel::proba_from_sequences(const std::vector<TokenSequence>& batch) const {
    const BatchEncoding enc = encoder_->forward_inference(batch);
    CnnHead::Cache cache;
    return head_.forward(enc, 0.0, false, nullptr, cache);
}

Matrix TransformerCnnModel::predict_proba(const std::vector<std::string>& texts) const {
    require_trained(trained_);
    std::vector<TokenSequence> batch;
    batch.reserve(texts.size());
    for (const auto& t : texts)
        batch.push_back(encode_subwords(t, encoder_->tokenizer(), config_.max_len));
    return proba_from_sequences(batch);
}

std::vector<nn::ParamRef> TransformerCnnModel::trainable_params() {
    std::vector<nn::ParamRef> params;
    head_.collect(params);
    if (!config_.freeze_encoder) {
        for (auto& p : encoder_->trainable_params()) params.push_back(p);
    }
    return params;
}

void TransformerCnnModel::set_dataset(const std::vector<std::string>& texts) {
    dataset_.clear();
    dataset_.reserve(texts.size());
    for (const auto& t : texts)
        dataset_.push_back(encode_subwords(t, encoder_->tokenizer(), config_.max_len));
}

Matrix TransformerCnnModel::forward_batch(const std::vector<int>& indices, bool training,
                                          RandomStream* rs) {
    std::vector<TokenSequence> batch;
    batch.reserve(indices.size());
    for (int i : indices) batch.push_back(dataset_.at(i));
    train_encoding_ = encoder_->forward(batch);
    return head_.forward(train_encoding_, config_.dropout, training, rs, train_cache_);
}

void TransformerCnnModel::backward_batch(const Matrix& dlogits) {
    Matrix d_states = head_.backward(train_encoding_, train_cache_, dlogits);
    if (!config_.freeze_encoder) encoder_->backward(d_states);
}

void TransformerCnnModel::save(const std::string& dir) const {
    require_trained(trained_);
    encoder_->save((fs::path(dir) / "encoder").string());
    auto self = const_cast<TransformerCnnModel*>(this);
    std::vector<nn::ParamRef> params;
    self->head_.collect(params);
    std::vector<std::pair<std::string, const Matrix*>> tensors;
    for (const auto& p : params) tensors.emplace_back(p.name, p.value);
    save_named_tensors((fs::path(dir) / "params.bin").string(), tensors);
}

std::unique_ptr<TransformerCnnModel> TransformerCnnModel::load(const std::string& dir,
                                                               LabelVocabulary vocab,
                                                               ClassifierConfig config) {
    auto encoder = TinyEncoder::load((fs::path(dir) / "encoder").string());
    auto model = std::make_unique<TransformerCnnModel>(std::move(vocab), std::move(config),
                                                       std::move(encoder), 0);
    auto tensors = load_named_tensors((fs::path(dir) / "params.bin").string());
    std::vector<nn::ParamRef> params;
    model->head_.collect(params);
    for (auto& p : params) {
        auto it = tensors.find(p.name);
        if (it == tensors.end()) throw std::runtime_error("model file missing tensor " + p.name);
        *p.value = std::move(it->second);
    }
    model->trained_ = true;
    return model;
}

// ---------------------------------------------------------------------------
// Operation-style wrappers and persistence dispatch.
// ---------------------------------------------------------------------------

Matrix transformer_cls_forward(EncoderAdapter& adapter, const std::vector<TokenSequence>& batch,
                               const ClsHead& head) {
    const BatchEncoding enc = adapter.forward_inference(batch);
    ClsHead::Cache cache;
    return head.forward(enc, 0.0, false, nullptr, cache);
}

Matrix transformer_cnn_forward(EncoderAdapter& adapter, const std::vector<TokenSequence>& batch,
                               const CnnHead& head) {
    const BatchEncoding enc = adapter.forward_inference(batch);
    CnnHead::Cache cache;
    return head.forward(enc, 0.0, false, nullptr, cache);
}

namespace {

nlohmann::ordered_json config_to_json(const ClassifierConfig& config) {
    nlohmann::ordered_json j;
    j["architecture"] = to_string(config.architecture);
    j["toolkit_version"] = kToolkitVersion;
    j["filter_widths"] = config.filter_widths;
    j["maps_per_width"] = config.maps_per_width;
    j["dropout"] = config.dropout;
    j["svm_c"] = config.svm_c;
    j["max_len"] = config.max_len;
    j["ngram_order"] = config.ngram_order;
    j["freeze_encoder"] = config.freeze_encoder;
    j["hidden_dim"] = config.hidden_dim;
    return j;
}

ClassifierConfig config_from_json(const nlohmann::json& j) {
    ClassifierConfig config;
    config.architecture = architecture_from_string(j.at("architecture").get<std::string>());
    config.filter_widths = j.at("filter_widths").get<std::vector<int>>();
    config.maps_per_width = j.at("maps_per_width").get<int>();
    config.dropout = j.at("dropout").get<double>();
    config.svm_c = j.at("svm_c").get<double>();
    config.max_len = j.at("max_len").get<int>();
    config.ngram_order = j.at("ngram_order").get<int>();
    config.freeze_encoder = j.at("freeze_encoder").get<bool>();
    config.hidden_dim = j.at("hidden_dim").get<int>();
    return config;
}

}  // namespace

void save_model_common(const ClassifierModel& model, const std::string& dir) {
    fs::create_directories(dir);
    write_text_file((fs::path(dir) / "config.json").string(),
                    config_to_json(model.config()).dump(2) + "\n");
    std::string labels;
    for (const auto& l : model.label_vocab().labels()) {
        labels += l;
        labels += '\n';
    }
    write_text_file((fs::path(dir) / "labels.txt").string(), labels);
}

std::unique_ptr<ClassifierModel> ClassifierModel::load(const std::string& dir) {
    const auto j = nlohmann::json::parse(read_text_file((fs::path(dir) / "config.json").string()));
    ClassifierConfig config = config_from_json(j);

    std::vector<std::string> labels;
    const std::string labels_text = read_text_file((fs::path(dir) / "labels.txt").string());
    size_t start = 0;
    while (start < labels_text.size()) {
        const size_t end = labels_text.find('\n', start);
        if (end == std::string::npos) break;
        labels.push_back(labels_text.substr(start, end - start));
        start = end + 1;
    }
    LabelVocabulary vocab(std::move(labels));

    switch (config.architecture) {
        case Architecture::svm_tfidf:
            return SvmTfidfModel::load(dir, std::move(vocab), std::move(config));
        case Architecture::cnn_text:
            return CnnTextModel::load(dir, std::move(vocab), std::move(config));
        case Architecture::transformer_cls:
            return TransformerClsModel::load(dir, std::move(vocab), std::move(config));
        case Architecture::transformer_cnn:
            return TransformerCnnModel::load(dir, std::move(vocab), std::move(config));
    }
    throw std::logic_error("unreachable architecture");
}

}  // namespace tdc
