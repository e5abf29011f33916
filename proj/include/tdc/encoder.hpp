#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tdc/matrix.hpp"
#include "tdc/nn.hpp"
#include "tdc/subword.hpp"

namespace tdc {

// Final-layer states for one example. The classification state is row 0 of
// the token states by construction.
struct EncoderOutput {
    Matrix token_states;  // [len x hidden]
    std::span<const double> cls_state() const {
        return {token_states.row(0), static_cast<size_t>(token_states.cols())};
    }
    int hidden() const { return token_states.cols(); }
};

// Batch view used by the classifier heads: all examples share the padded
// length and live stacked in one flat matrix.
struct BatchEncoding {
    Matrix states;  // [n*len x hidden]
    int len = 0;
    std::vector<int> real_lens;

    int batch_size() const { return static_cast<int>(real_lens.size()); }
    EncoderOutput example(int e) const;
};

// Static description of a registered encoder. Paper-scale entries exist so
// configuration (hidden width 768, 12 layers) can be validated and
// reported; instantiating them requires an external checkpoint, which this
// toolkit does not download.
struct EncoderSpec {
    std::string name;
    int hidden = 0;
    int layers = 0;
    int heads = 0;
    int ffn = 0;
    int vocab_size = 0;
    bool test_scale = false;  // can be constructed from a seed, no checkpoint
};

const std::vector<EncoderSpec>& encoder_registry();
std::optional<EncoderSpec> lookup_encoder_spec(const std::string& name);

// Trainable encoder behind the adapter interface. hidden_dim is constant;
// forward is deterministic for fixed parameters.
class EncoderAdapter {
public:
    virtual ~EncoderAdapter() = default;

    virtual const std::string& name() const = 0;
    virtual int hidden_dim() const = 0;
    virtual const SubwordTokenizer& tokenizer() const = 0;

    // Encodes a batch; every sequence must share the same padded length.
    // Keeps activations for backward(), so it is single-writer.
    virtual BatchEncoding forward(const std::vector<TokenSequence>& batch) = 0;
    // Stateless encoding for inference; safe from concurrent callers.
    virtual BatchEncoding forward_inference(const std::vector<TokenSequence>& batch) const = 0;
    // Backpropagates into the encoder parameters; requires a prior forward.
    virtual void backward(const Matrix& d_states) = 0;
    virtual std::vector<nn::ParamRef> trainable_params() = 0;

    virtual void save(const std::string& dir) const = 0;
};

// BERT-style stack: hashed-token + position embeddings with layer norm,
// then [self-attention + residual + norm, feed-forward + residual + norm]
// per layer. Sized for the seeded test-scale configurations.
class TinyEncoder final : public EncoderAdapter {
public:
    TinyEncoder(const EncoderSpec& spec, uint64_t seed);

    const std::string& name() const override { return spec_.name; }
    int hidden_dim() const override { return spec_.hidden; }
    const SubwordTokenizer& tokenizer() const override { return tokenizer_; }

    BatchEncoding forward(const std::vector<TokenSequence>& batch) override;
    BatchEncoding forward_inference(const std::vector<TokenSequence>& batch) const override;
    void backward(const Matrix& d_states) override;
    std::vector<nn::ParamRef> trainable_params() override;

    void save(const std::string& dir) const override;
    static std::unique_ptr<TinyEncoder> load(const std::string& dir);

    const EncoderSpec& spec() const { return spec_; }

private:
    struct Layer {
        nn::SelfAttention attention;
        nn::LayerNorm norm1;
        nn::FeedForward ffn;
        nn::LayerNorm norm2;
    };

    struct LayerCache {
        nn::SelfAttention::Cache attention;
        Matrix attn_sum;  // x + attention(x)
        nn::LayerNorm::Cache norm1;
        nn::FeedForward::Cache ffn;
        Matrix ffn_sum;  // normed + ffn(normed)
        nn::LayerNorm::Cache norm2;
    };

    struct CacheSet {
        std::vector<TokenSequence> batch;
        nn::LayerNorm::Cache embedding;
        std::vector<LayerCache> layers;
        int len = 0;
        std::vector<int> real_lens;
    };

    BatchEncoding run_forward(const std::vector<TokenSequence>& batch, CacheSet& caches) const;

    EncoderSpec spec_;
    SubwordTokenizer tokenizer_;
    Matrix token_embeddings_;     // [vocab x hidden]
    Matrix position_embeddings_;  // [max_positions x hidden]
    Matrix g_token_embeddings_, g_position_embeddings_;
    nn::LayerNorm embedding_norm_;
    std::vector<Layer> layers_;

    CacheSet train_cache_;  // most recent training forward
};

// Creates an encoder from a registered name or a saved-encoder directory.
// Paper-scale names raise: their checkpoints are external artifacts.
std::unique_ptr<EncoderAdapter> make_encoder(const std::string& name_or_path, uint64_t seed);

}  // namespace tdc
