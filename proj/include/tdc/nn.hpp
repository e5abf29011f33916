#pragma once

#include <string>
#include <vector>

#include "tdc/matrix.hpp"
#include "tdc/rng.hpp"

namespace tdc::nn {

// Named view of one trainable tensor; the optimizer, persistence, and
// gradient checks all walk these.
struct ParamRef {
    std::string name;
    Matrix* value;
    Matrix* grad;
};

void zero_grads(const std::vector<ParamRef>& params);

// ---------------------------------------------------------------------------

// Fully connected layer, y = x.w + b with w stored [in x out].
struct Linear {
    Matrix w, b;
    Matrix gw, gb;

    void init(int in, int out, RandomStream& rs, double stddev = 0.02);
    int in_dim() const { return w.rows(); }
    int out_dim() const { return w.cols(); }

    Matrix forward(const Matrix& x) const;
    // Accumulates gw/gb, returns dL/dx.
    Matrix backward(const Matrix& x, const Matrix& dy);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

// ---------------------------------------------------------------------------

// Inverted dropout. The mask is drawn serially from the run stream so a
// fixed seed reproduces training exactly; inference mode is the identity.
struct DropoutCache {
    Matrix mask;  // entries 0 or 1/(1-p); empty when dropout was a no-op
};

Matrix dropout_forward(const Matrix& x, double p, bool training, RandomStream& rs,
                       DropoutCache& cache);
Matrix dropout_backward(const Matrix& dy, const DropoutCache& cache);

// ---------------------------------------------------------------------------

struct LayerNorm {
    Matrix gamma, beta;
    Matrix ggamma, gbeta;
    double eps = 1e-5;

    struct Cache {
        Matrix x, mean, rstd;
    };

    void init(int dim);
    Matrix forward(const Matrix& x, Cache& cache) const;
    Matrix backward(const Cache& cache, const Matrix& dy);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

// ---------------------------------------------------------------------------

// Multi-head self-attention over a batch flattened to [n*len x hidden].
// Padding positions never act as keys, so real positions are bit-for-bit
// independent of padding content; padding rows of the output are zero.
struct SelfAttention {
    int hidden = 0, heads = 0, head_dim = 0;
    Linear wq, wk, wv, wo;

    struct Cache {
        Matrix q, k, v;             // [n*len x hidden]
        std::vector<Matrix> probs;  // per example*head, [len x len]
        Matrix ctx;                 // [n*len x hidden], before the output projection
        Matrix x;                   // input copy for the projection backwards
    };

    void init(int hidden_dim, int num_heads, RandomStream& rs);
    Matrix forward(const Matrix& x_flat, const std::vector<int>& real_lens, int len,
                   Cache& cache) const;
    Matrix backward(const std::vector<int>& real_lens, int len, const Cache& cache,
                    const Matrix& dy);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

// ---------------------------------------------------------------------------

struct FeedForward {
    Linear fc1, fc2;

    struct Cache {
        Matrix x, pre, act;
    };

    void init(int hidden, int inner, RandomStream& rs);
    Matrix forward(const Matrix& x, Cache& cache) const;
    Matrix backward(const Cache& cache, const Matrix& dy);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

// ---------------------------------------------------------------------------

// Bank of 1-D convolutions (one Linear per filter width, applied to im2col
// windows) followed by max-over-time pooling. Pooling only sees windows
// that lie fully inside real tokens; when a sequence is shorter than a
// width, the single leading window is used (inputs are zero-padded past the
// real length, so the result stays independent of padding content).
struct ConvBank {
    std::vector<int> widths;
    int maps = 0;
    int input_dim = 0;
    std::vector<Linear> filters;  // one per width: [(width*input_dim) x maps]

    struct Cache {
        // Per width: im2col rows of all examples stacked in example order.
        std::vector<Matrix> stacked;
        std::vector<Matrix> conv;            // stacked conv outputs
        std::vector<std::vector<int>> offsets;  // per width: row offset per example (size n+1)
        std::vector<std::vector<int>> argmax;   // per width: n*maps window indices
        std::vector<int> lens;               // per example input rows
    };

    void init(std::vector<int> filter_widths, int maps_per_width, int in_dim, RandomStream& rs);
    int pooled_dim() const { return static_cast<int>(widths.size()) * maps; }
    int max_width() const;

    // xs[i]: [len_i x input_dim], zeroed past real_lens[i]; len_i >= max width.
    Matrix forward(const std::vector<Matrix>& xs, const std::vector<int>& real_lens,
                   Cache& cache) const;
    // Returns dL/dx per example; accumulates filter grads.
    std::vector<Matrix> backward(const Cache& cache, const Matrix& dpooled);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

// ---------------------------------------------------------------------------

// Mean cross-entropy over probability rows, -ln p[gold] clamped at 1e-12.
double cross_entropy_mean(const Matrix& probs, const std::vector<int>& gold);

// Gradient w.r.t. logits of softmax + mean cross-entropy: (p - onehot)/n.
Matrix softmax_ce_backward(const Matrix& probs, const std::vector<int>& gold);

// Lowest index wins ties.
int argmax_row(const double* row, int k);

// ---------------------------------------------------------------------------

// Adam with bias correction; beta1 0.9, beta2 0.999, eps 1e-8, no weight
// decay.
class Adam {
public:
    explicit Adam(double learning_rate) : lr_(learning_rate) {}

    void step(const std::vector<ParamRef>& params);

private:
    double lr_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    int t_ = 0;
    std::vector<Matrix> m_, v_;
};

}  // namespace tdc::nn
