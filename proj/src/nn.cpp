#include "tdc/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tdc/kernels.hpp"

namespace tdc::nn {

namespace k = tdc::kernels;

void zero_grads(const std::vector<ParamRef>& params) {
    for (const auto& p : params) p.grad->zero();
}

// ---------------------------------------------------------------------------

void Linear::init(int in, int out, RandomStream& rs, double stddev) {
    w = Matrix(in, out);
    b = Matrix(1, out);
    gw = Matrix(in, out);
    gb = Matrix(1, out);
    for (size_t i = 0; i < w.size(); ++i) w.data()[i] = rs.normal(0.0, stddev);
}

Matrix Linear::forward(const Matrix& x) const {
    if (x.cols() != w.rows())
        throw std::invalid_argument("Linear: input width " + std::to_string(x.cols()) +
                                    " does not match weight rows " + std::to_string(w.rows()));
    Matrix y;
    k::matmul(x, false, w, false, y);
    k::add_bias_rows(y, b);
    return y;
}

Matrix Linear::backward(const Matrix& x, const Matrix& dy) {
    Matrix dw_tmp;
    k::matmul(x, true, dy, false, dw_tmp);  // [in x out]
    k::add_inplace(gw, dw_tmp);
    for (int j = 0; j < dy.cols(); ++j) {
        double s = 0.0;
        for (int i = 0; i < dy.rows(); ++i) s += dy(i, j);
        gb(0, j) += s;
    }
    Matrix dx;
    k::matmul(dy, false, w, true, dx);
    return dx;
}

void Linear::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", &w, &gw});
    out.push_back({prefix + ".b", &b, &gb});
}

// ---------------------------------------------------------------------------

Matrix dropout_forward(const Matrix& x, double p, bool training, RandomStream& rs,
                       DropoutCache& cache) {
    if (!training || p <= 0.0) {
        cache.mask = Matrix();
        return x;
    }
    if (p >= 1.0) throw std::invalid_argument("dropout rate must be < 1");
    cache.mask = Matrix(x.rows(), x.cols());
    const double scale = 1.0 / (1.0 - p);
    for (size_t i = 0; i < cache.mask.size(); ++i)
        cache.mask.data()[i] = rs.uniform() < p ? 0.0 : scale;
    Matrix y = x;
    for (size_t i = 0; i < y.size(); ++i) y.data()[i] *= cache.mask.data()[i];
    return y;
}

Matrix dropout_backward(const Matrix& dy, const DropoutCache& cache) {
    if (cache.mask.empty()) return dy;
    Matrix dx = dy;
    for (size_t i = 0; i < dx.size(); ++i) dx.data()[i] *= cache.mask.data()[i];
    return dx;
}

// ---------------------------------------------------------------------------

void LayerNorm::init(int dim) {
    gamma = Matrix(1, dim, 1.0);
    beta = Matrix(1, dim, 0.0);
    ggamma = Matrix(1, dim);
    gbeta = Matrix(1, dim);
}

Matrix LayerNorm::forward(const Matrix& x, Cache& cache) const {
    cache.x = x;
    Matrix y;
    k::layer_norm_rows(x, gamma, beta, eps, y, cache.mean, cache.rstd);
    return y;
}

Matrix LayerNorm::backward(const Cache& cache, const Matrix& dy) {
    Matrix dx;
    k::layer_norm_rows_backward(cache.x, gamma, cache.mean, cache.rstd, dy, dx, ggamma, gbeta);
    return dx;
}

void LayerNorm::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".gamma", &gamma, &ggamma});
    out.push_back({prefix + ".beta", &beta, &gbeta});
}

// ---------------------------------------------------------------------------

namespace {

// Copies head columns [h*dh, (h+1)*dh) of rows [row0, row0+len) into a
// [len x dh] matrix.
void slice_head(const Matrix& flat, int row0, int len, int h, int dh, Matrix& out) {
    if (out.rows() != len || out.cols() != dh) out = Matrix(len, dh);
    for (int i = 0; i < len; ++i) {
        const double* src = flat.row(row0 + i) + h * dh;
        double* dst = out.row(i);
        std::copy(src, src + dh, dst);
    }
}

void add_head_slice(Matrix& flat, int row0, int len, int h, int dh, const Matrix& part) {
    for (int i = 0; i < len; ++i) {
        double* dst = flat.row(row0 + i) + h * dh;
        const double* src = part.row(i);
        for (int j = 0; j < dh; ++j) dst[j] += src[j];
    }
}

}  // namespace

void SelfAttention::init(int hidden_dim, int num_heads, RandomStream& rs) {
    if (hidden_dim % num_heads != 0)
        throw std::invalid_argument("hidden dim must be divisible by head count");
    hidden = hidden_dim;
    heads = num_heads;
    head_dim = hidden_dim / num_heads;
    wq.init(hidden, hidden, rs);
    wk.init(hidden, hidden, rs);
    wv.init(hidden, hidden, rs);
    wo.init(hidden, hidden, rs);
}

Matrix SelfAttention::forward(const Matrix& x_flat, const std::vector<int>& real_lens, int len,
                              Cache& cache) const {
    const int n = static_cast<int>(real_lens.size());
    cache.x = x_flat;
    cache.q = wq.forward(x_flat);
    cache.k = wk.forward(x_flat);
    cache.v = wv.forward(x_flat);
    cache.ctx = Matrix(x_flat.rows(), hidden);
    cache.probs.assign(static_cast<size_t>(n) * heads, Matrix());

    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
    k::parallel_for(n, [&](int e) {
        const int row0 = e * len;
        const int valid = real_lens[e];
        Matrix qh, kh, vh;
        for (int h = 0; h < heads; ++h) {
            slice_head(cache.q, row0, len, h, head_dim, qh);
            slice_head(cache.k, row0, len, h, head_dim, kh);
            slice_head(cache.v, row0, len, h, head_dim, vh);
            // Scores over valid keys only; queries past valid keep zero ctx.
            Matrix& p = cache.probs[static_cast<size_t>(e) * heads + h];
            p = Matrix(len, len);
            for (int i = 0; i < valid; ++i) {
                double* prow = p.row(i);
                const double* qrow = qh.row(i);
                double mx = -1e300;
                for (int j = 0; j < valid; ++j) {
                    double s = 0.0;
                    const double* krow = kh.row(j);
                    for (int d = 0; d < head_dim; ++d) s += qrow[d] * krow[d];
                    prow[j] = s * inv_sqrt;
                    mx = std::max(mx, prow[j]);
                }
                double sum = 0.0;
                for (int j = 0; j < valid; ++j) {
                    prow[j] = std::exp(prow[j] - mx);
                    sum += prow[j];
                }
                for (int j = 0; j < valid; ++j) prow[j] /= sum;
            }
            // ctx rows for valid queries.
            for (int i = 0; i < valid; ++i) {
                const double* prow = p.row(i);
                double* crow = cache.ctx.row(row0 + i) + h * head_dim;
                for (int d = 0; d < head_dim; ++d) crow[d] = 0.0;
                for (int j = 0; j < valid; ++j) {
                    const double pij = prow[j];
                    const double* vrow = vh.row(j);
                    for (int d = 0; d < head_dim; ++d) crow[d] += pij * vrow[d];
                }
            }
        }
    });
    return wo.forward(cache.ctx);
}

Matrix SelfAttention::backward(const std::vector<int>& real_lens, int len, const Cache& cache,
                               const Matrix& dy) {
    const int n = static_cast<int>(real_lens.size());
    // wo is const within a batch backward; capture dctx first.
    Matrix dctx = wo.backward(cache.ctx, dy);
    Matrix dq(cache.q.rows(), hidden), dk(cache.k.rows(), hidden), dv(cache.v.rows(), hidden);

    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
    k::parallel_for(n, [&](int e) {
        const int row0 = e * len;
        const int valid = real_lens[e];
        Matrix qh, kh, vh;
        for (int h = 0; h < heads; ++h) {
            slice_head(cache.q, row0, len, h, head_dim, qh);
            slice_head(cache.k, row0, len, h, head_dim, kh);
            slice_head(cache.v, row0, len, h, head_dim, vh);
            const Matrix& p = cache.probs[static_cast<size_t>(e) * heads + h];

            Matrix dqh(len, head_dim), dkh(len, head_dim), dvh(len, head_dim);
            for (int i = 0; i < valid; ++i) {
                const double* dcrow = dctx.row(row0 + i) + h * head_dim;
                const double* prow = p.row(i);
                // dP row and softmax backward.
                double dot = 0.0;
                std::vector<double> dp(valid);
                for (int j = 0; j < valid; ++j) {
                    double s = 0.0;
                    const double* vrow = vh.row(j);
                    for (int d = 0; d < head_dim; ++d) s += dcrow[d] * vrow[d];
                    dp[j] = s;
                    dot += s * prow[j];
                }
                for (int j = 0; j < valid; ++j) {
                    const double ds = prow[j] * (dp[j] - dot) * inv_sqrt;
                    const double* krow = kh.row(j);
                    const double* qrow = qh.row(i);
                    double* dqrow = dqh.row(i);
                    double* dkrow = dkh.row(j);
                    for (int d = 0; d < head_dim; ++d) {
                        dqrow[d] += ds * krow[d];
                        dkrow[d] += ds * qrow[d];
                    }
                    const double pij = prow[j];
                    double* dvrow = dvh.row(j);
                    for (int d = 0; d < head_dim; ++d) dvrow[d] += pij * dcrow[d];
                }
            }
            add_head_slice(dq, row0, len, h, head_dim, dqh);
            add_head_slice(dk, row0, len, h, head_dim, dkh);
            add_head_slice(dv, row0, len, h, head_dim, dvh);
        }
    });

    Matrix dx = wq.backward(cache.x, dq);
    k::add_inplace(dx, wk.backward(cache.x, dk));
    k::add_inplace(dx, wv.backward(cache.x, dv));
    return dx;
}

void SelfAttention::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    wq.collect(prefix + ".wq", out);
    wk.collect(prefix + ".wk", out);
    wv.collect(prefix + ".wv", out);
    wo.collect(prefix + ".wo", out);
}

// ---------------------------------------------------------------------------

void FeedForward::init(int hidden, int inner, RandomStream& rs) {
    fc1.init(hidden, inner, rs);
    fc2.init(inner, hidden, rs);
}

Matrix FeedForward::forward(const Matrix& x, Cache& cache) const {
    cache.x = x;
    cache.pre = fc1.forward(x);
    k::gelu(cache.pre, cache.act);
    return fc2.forward(cache.act);
}

Matrix FeedForward::backward(const Cache& cache, const Matrix& dy) {
    Matrix dact = fc2.backward(cache.act, dy);
    Matrix dpre;
    k::gelu_backward(cache.pre, dact, dpre);
    return fc1.backward(cache.x, dpre);
}

void FeedForward::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    fc1.collect(prefix + ".fc1", out);
    fc2.collect(prefix + ".fc2", out);
}

// ---------------------------------------------------------------------------

void ConvBank::init(std::vector<int> filter_widths, int maps_per_width, int in_dim,
                    RandomStream& rs) {
    if (filter_widths.empty()) throw std::invalid_argument("ConvBank: need at least one width");
    for (int w : filter_widths)
        if (w < 1) throw std::invalid_argument("ConvBank: widths must be >= 1");
    widths = std::move(filter_widths);
    maps = maps_per_width;
    input_dim = in_dim;
    filters.resize(widths.size());
    for (size_t i = 0; i < widths.size(); ++i) filters[i].init(widths[i] * in_dim, maps, rs);
}

int ConvBank::max_width() const { return *std::max_element(widths.begin(), widths.end()); }

Matrix ConvBank::forward(const std::vector<Matrix>& xs, const std::vector<int>& real_lens,
                         Cache& cache) const {
    const int n = static_cast<int>(xs.size());
    const int mw = max_width();
    for (int e = 0; e < n; ++e) {
        if (xs[e].rows() < mw)
            throw std::invalid_argument(
                "conv head: sequence length " + std::to_string(xs[e].rows()) +
                " is smaller than the largest filter width " + std::to_string(mw) +
                "; pad inputs to at least " + std::to_string(mw) + " positions");
        if (xs[e].cols() != input_dim)
            throw std::invalid_argument("conv head: input dim mismatch");
    }

    cache.lens.resize(n);
    for (int e = 0; e < n; ++e) cache.lens[e] = xs[e].rows();
    cache.stacked.assign(widths.size(), Matrix());
    cache.conv.assign(widths.size(), Matrix());
    cache.offsets.assign(widths.size(), {});
    cache.argmax.assign(widths.size(), {});

    Matrix pooled(n, pooled_dim());
    for (size_t wi = 0; wi < widths.size(); ++wi) {
        const int w = widths[wi];
        auto& offsets = cache.offsets[wi];
        offsets.resize(n + 1);
        offsets[0] = 0;
        for (int e = 0; e < n; ++e) offsets[e + 1] = offsets[e] + (xs[e].rows() - w + 1);

        Matrix& stacked = cache.stacked[wi];
        stacked = Matrix(offsets[n], w * input_dim);
        k::parallel_for(n, [&](int e) {
            Matrix cols;
            k::im2col(xs[e], w, cols);
            for (int t = 0; t < cols.rows(); ++t)
                std::copy(cols.row(t), cols.row(t) + cols.cols(), stacked.row(offsets[e] + t));
        });

        Matrix& conv = cache.conv[wi];
        conv = filters[wi].forward(stacked);

        auto& argmax = cache.argmax[wi];
        argmax.assign(static_cast<size_t>(n) * maps, 0);
        const int col0 = static_cast<int>(wi) * maps;
        k::parallel_for(n, [&](int e) {
            // Windows fully inside real tokens; a sequence shorter than the
            // width contributes its single leading (zero-padded) window.
            const int rows = offsets[e + 1] - offsets[e];
            int valid = std::min(real_lens[e] - w + 1, rows);
            valid = std::max(valid, 1);
            for (int m = 0; m < maps; ++m) {
                int best_t = 0;
                double best = conv(offsets[e], m);
                for (int t = 1; t < valid; ++t) {
                    const double v = conv(offsets[e] + t, m);
                    if (v > best) {
                        best = v;
                        best_t = t;
                    }
                }
                pooled(e, col0 + m) = best;
                argmax[static_cast<size_t>(e) * maps + m] = best_t;
            }
        });
    }
    return pooled;
}

std::vector<Matrix> ConvBank::backward(const Cache& cache, const Matrix& dpooled) {
    const int n = static_cast<int>(cache.lens.size());
    std::vector<Matrix> dxs(n);
    for (int e = 0; e < n; ++e) dxs[e] = Matrix(cache.lens[e], input_dim);

    for (size_t wi = 0; wi < widths.size(); ++wi) {
        const int w = widths[wi];
        const auto& offsets = cache.offsets[wi];
        const auto& argmax = cache.argmax[wi];
        const int col0 = static_cast<int>(wi) * maps;

        Matrix dconv(cache.conv[wi].rows(), maps);
        k::parallel_for(n, [&](int e) {
            for (int m = 0; m < maps; ++m) {
                const int t = argmax[static_cast<size_t>(e) * maps + m];
                dconv(offsets[e] + t, m) += dpooled(e, col0 + m);
            }
        });

        Matrix dstacked = filters[wi].backward(cache.stacked[wi], dconv);

        k::parallel_for(n, [&](int e) {
            for (int t = 0; t < offsets[e + 1] - offsets[e]; ++t) {
                const double* src = dstacked.row(offsets[e] + t);
                for (int p = 0; p < w; ++p) {
                    double* dst = dxs[e].row(t + p);
                    for (int d = 0; d < input_dim; ++d) dst[d] += src[p * input_dim + d];
                }
            }
        });
    }
    return dxs;
}

void ConvBank::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    for (size_t i = 0; i < filters.size(); ++i)
        filters[i].collect(prefix + ".conv" + std::to_string(widths[i]), out);
}

// ---------------------------------------------------------------------------

double cross_entropy_mean(const Matrix& probs, const std::vector<int>& gold) {
    if (static_cast<int>(gold.size()) != probs.rows())
        throw std::invalid_argument("cross_entropy: row count mismatch");
    double total = 0.0;
    for (int i = 0; i < probs.rows(); ++i) {
        const int g = gold[i];
        if (g < 0 || g >= probs.cols())
            throw std::out_of_range("cross_entropy: gold index out of range");
        total += -std::log(std::max(probs(i, g), 1e-12));
    }
    return total / probs.rows();
}

Matrix softmax_ce_backward(const Matrix& probs, const std::vector<int>& gold) {
    Matrix d = probs;
    const double inv_n = 1.0 / probs.rows();
    for (int i = 0; i < d.rows(); ++i) {
        d(i, gold[i]) -= 1.0;
        for (int j = 0; j < d.cols(); ++j) d(i, j) *= inv_n;
    }
    return d;
}

int argmax_row(const double* row, int k) {
    int best = 0;
    for (int j = 1; j < k; ++j)
        if (row[j] > row[best]) best = j;
    return best;
}

// ---------------------------------------------------------------------------

void Adam::step(const std::vector<ParamRef>& params) {
    if (m_.empty()) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (const auto& p : params) {
            m_.emplace_back(p.value->rows(), p.value->cols());
            v_.emplace_back(p.value->rows(), p.value->cols());
        }
    }
    if (m_.size() != params.size())
        throw std::invalid_argument("Adam: parameter list changed between steps");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t pi = 0; pi < params.size(); ++pi) {
        double* value = params[pi].value->data();
        const double* grad = params[pi].grad->data();
        double* m = m_[pi].data();
        double* v = v_[pi].data();
        const long long total = static_cast<long long>(params[pi].value->size());
        const double lr = lr_, b1 = beta1_, b2 = beta2_, eps = eps_;
        k::parallel_for(static_cast<int>(total), [=](int i) {
            const double g = grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        });
    }
}

}  // namespace tdc::nn
