#include "tdc/encoder.hpp"

#include <filesystem>
#include <stdexcept>

#include <json.hpp>

#include "tdc/kernels.hpp"
#include "tdc/serialize.hpp"

namespace tdc {

namespace k = tdc::kernels;
namespace fs = std::filesystem;

EncoderOutput BatchEncoding::example(int e) const {
    EncoderOutput out;
    out.token_states = Matrix(len, states.cols());
    for (int i = 0; i < len; ++i) {
        const double* src = states.row(e * len + i);
        std::copy(src, src + states.cols(), out.token_states.row(i));
    }
    return out;
}

const std::vector<EncoderSpec>& encoder_registry() {
    static const std::vector<EncoderSpec> registry = {
        {"test-tiny-h16", 16, 2, 2, 64, 1024, true},
        {"test-tiny-h32", 32, 2, 4, 128, 1024, true},
        {"bert-base-multilingual-cased", 768, 12, 12, 3072, 119547, false},
        {"xlm-roberta-base", 768, 12, 12, 3072, 250002, false},
    };
    return registry;
}

std::optional<EncoderSpec> lookup_encoder_spec(const std::string& name) {
    for (const auto& spec : encoder_registry())
        if (spec.name == name) return spec;
    return std::nullopt;
}

// ---------------------------------------------------------------------------

TinyEncoder::TinyEncoder(const EncoderSpec& spec, uint64_t seed)
    : spec_(spec), tokenizer_(spec.vocab_size) {
    if (!spec.test_scale)
        throw std::runtime_error("encoder '" + spec.name +
                                 "' needs an external pretrained checkpoint; only test-scale "
                                 "encoders can be built from a seed");
    RandomStream rs(mix_seed(seed, 0xE0C0DE));
    token_embeddings_ = Matrix(spec.vocab_size, spec.hidden);
    for (size_t i = 0; i < token_embeddings_.size(); ++i)
        token_embeddings_.data()[i] = rs.normal(0.0, 0.02);
    position_embeddings_ = Matrix(SubwordTokenizer::kMaxSequenceLength, spec.hidden);
    for (size_t i = 0; i < position_embeddings_.size(); ++i)
        position_embeddings_.data()[i] = rs.normal(0.0, 0.02);
    g_token_embeddings_ = Matrix(spec.vocab_size, spec.hidden);
    g_position_embeddings_ = Matrix(SubwordTokenizer::kMaxSequenceLength, spec.hidden);
    embedding_norm_.init(spec.hidden);
    layers_.resize(spec.layers);
    for (auto& layer : layers_) {
        layer.attention.init(spec.hidden, spec.heads, rs);
        layer.norm1.init(spec.hidden);
        layer.ffn.init(spec.hidden, spec.ffn, rs);
        layer.norm2.init(spec.hidden);
    }
}

BatchEncoding TinyEncoder::run_forward(const std::vector<TokenSequence>& batch,
                                       CacheSet& caches) const {
    if (batch.empty()) throw std::invalid_argument("encoder forward: empty batch");
    const int len = batch[0].length;
    for (const auto& seq : batch) {
        if (seq.length != len)
            throw std::invalid_argument("encoder forward: ragged batch lengths");
        if (seq.length > SubwordTokenizer::kMaxSequenceLength)
            throw std::invalid_argument("encoder forward: sequence exceeds position table");
        for (const int id : seq.ids)
            if (id < 0 || id >= spec_.vocab_size)
                throw std::out_of_range("token id outside encoder vocabulary");
    }
    const int n = static_cast<int>(batch.size());
    caches.batch = batch;
    caches.len = len;
    caches.real_lens.resize(n);
    for (int e = 0; e < n; ++e) caches.real_lens[e] = batch[e].real_len;

    Matrix x(n * len, spec_.hidden);
    k::parallel_for(n, [&](int e) {
        for (int i = 0; i < len; ++i) {
            double* dst = x.row(e * len + i);
            const double* tok = token_embeddings_.row(batch[e].ids[i]);
            const double* pos = position_embeddings_.row(i);
            for (int d = 0; d < spec_.hidden; ++d) dst[d] = tok[d] + pos[d];
        }
    });

    x = embedding_norm_.forward(x, caches.embedding);
    caches.layers.resize(layers_.size());
    for (size_t li = 0; li < layers_.size(); ++li) {
        const auto& layer = layers_[li];
        auto& cache = caches.layers[li];
        Matrix attn = layer.attention.forward(x, caches.real_lens, len, cache.attention);
        k::add_inplace(attn, x);
        cache.attn_sum = std::move(attn);
        Matrix normed = layer.norm1.forward(cache.attn_sum, cache.norm1);
        Matrix ffn_out = layer.ffn.forward(normed, cache.ffn);
        k::add_inplace(ffn_out, normed);
        cache.ffn_sum = std::move(ffn_out);
        x = layer.norm2.forward(cache.ffn_sum, cache.norm2);
    }

    BatchEncoding out;
    out.states = std::move(x);
    out.len = len;
    out.real_lens = caches.real_lens;
    return out;
}

BatchEncoding TinyEncoder::forward(const std::vector<TokenSequence>& batch) {
    return run_forward(batch, train_cache_);
}

BatchEncoding TinyEncoder::forward_inference(const std::vector<TokenSequence>& batch) const {
    CacheSet local;
    return run_forward(batch, local);
}

void TinyEncoder::backward(const Matrix& d_states) {
    if (train_cache_.layers.size() != layers_.size() || train_cache_.batch.empty())
        throw std::runtime_error("encoder backward without a cached forward");
    const int len = train_cache_.len;
    Matrix dx = d_states;
    for (size_t li = layers_.size(); li-- > 0;) {
        auto& layer = layers_[li];
        auto& cache = train_cache_.layers[li];
        dx = layer.norm2.backward(cache.norm2, dx);
        // ffn_sum = normed + ffn(normed)
        Matrix d_normed = layer.ffn.backward(cache.ffn, dx);
        k::add_inplace(d_normed, dx);
        dx = layer.norm1.backward(cache.norm1, d_normed);
        // attn_sum = x + attention(x)
        Matrix d_input =
            layer.attention.backward(train_cache_.real_lens, len, cache.attention, dx);
        k::add_inplace(d_input, dx);
        dx = std::move(d_input);
    }
    dx = embedding_norm_.backward(train_cache_.embedding, dx);

    // Scatter into the embedding tables; serial so accumulation order is
    // independent of thread count.
    const int n = static_cast<int>(train_cache_.batch.size());
    for (int e = 0; e < n; ++e) {
        for (int i = 0; i < len; ++i) {
            const double* src = dx.row(e * len + i);
            double* tok = g_token_embeddings_.row(train_cache_.batch[e].ids[i]);
            double* pos = g_position_embeddings_.row(i);
            for (int d = 0; d < spec_.hidden; ++d) {
                tok[d] += src[d];
                pos[d] += src[d];
            }
        }
    }
}

std::vector<nn::ParamRef> TinyEncoder::trainable_params() {
    std::vector<nn::ParamRef> params;
    params.push_back({"encoder.tok_emb", &token_embeddings_, &g_token_embeddings_});
    params.push_back({"encoder.pos_emb", &position_embeddings_, &g_position_embeddings_});
    embedding_norm_.collect("encoder.emb_norm", params);
    for (size_t li = 0; li < layers_.size(); ++li) {
        const std::string prefix = "encoder.layer" + std::to_string(li);
        layers_[li].attention.collect(prefix + ".attn", params);
        layers_[li].norm1.collect(prefix + ".norm1", params);
        layers_[li].ffn.collect(prefix + ".ffn", params);
        layers_[li].norm2.collect(prefix + ".norm2", params);
    }
    return params;
}

void TinyEncoder::save(const std::string& dir) const {
    fs::create_directories(dir);
    nlohmann::ordered_json j;
    j["name"] = spec_.name;
    j["hidden"] = spec_.hidden;
    j["layers"] = spec_.layers;
    j["heads"] = spec_.heads;
    j["ffn"] = spec_.ffn;
    j["vocab_size"] = spec_.vocab_size;
    write_text_file((fs::path(dir) / "encoder.json").string(), j.dump(2) + "\n");

    std::vector<std::pair<std::string, const Matrix*>> tensors;
    auto params = const_cast<TinyEncoder*>(this)->trainable_params();
    tensors.reserve(params.size());
    for (const auto& p : params) tensors.emplace_back(p.name, p.value);
    save_named_tensors((fs::path(dir) / "encoder.bin").string(), tensors);
}

std::unique_ptr<TinyEncoder> TinyEncoder::load(const std::string& dir) {
    const auto j = nlohmann::json::parse(read_text_file((fs::path(dir) / "encoder.json").string()));
    EncoderSpec spec;
    spec.name = j.at("name").get<std::string>();
    spec.hidden = j.at("hidden").get<int>();
    spec.layers = j.at("layers").get<int>();
    spec.heads = j.at("heads").get<int>();
    spec.ffn = j.at("ffn").get<int>();
    spec.vocab_size = j.at("vocab_size").get<int>();
    spec.test_scale = true;

    auto encoder = std::make_unique<TinyEncoder>(spec, 0);
    auto tensors = load_named_tensors((fs::path(dir) / "encoder.bin").string());
    for (auto& p : encoder->trainable_params()) {
        auto it = tensors.find(p.name);
        if (it == tensors.end())
            throw std::runtime_error("encoder file is missing tensor " + p.name);
        if (it->second.rows() != p.value->rows() || it->second.cols() != p.value->cols())
            throw std::runtime_error("encoder tensor shape mismatch for " + p.name);
        *p.value = std::move(it->second);
    }
    return encoder;
}

std::unique_ptr<EncoderAdapter> make_encoder(const std::string& name_or_path, uint64_t seed) {
    if (auto spec = lookup_encoder_spec(name_or_path)) {
        return std::make_unique<TinyEncoder>(*spec, seed);  // throws for paper-scale specs
    }
    if (fs::exists(fs::path(name_or_path) / "encoder.json")) {
        return TinyEncoder::load(name_or_path);
    }
    throw std::runtime_error("unknown encoder '" + name_or_path +
                             "': not a registered name and not a saved encoder directory");
}

}  // namespace tdc
