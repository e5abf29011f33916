#include "tdc/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

namespace tdc::kernels {

namespace {

std::atomic<Backend>& backend_state() {
    static std::atomic<Backend> state{default_backend()};
    return state;
}

void check_matmul_dims(const Matrix& a, bool trans_a, const Matrix& b, bool trans_b) {
    const int inner_a = trans_a ? a.rows() : a.cols();
    const int inner_b = trans_b ? b.cols() : b.rows();
    if (inner_a != inner_b) {
        throw std::invalid_argument("matmul: inner dimensions disagree (" +
                                    std::to_string(inner_a) + " vs " + std::to_string(inner_b) +
                                    ")");
    }
}

constexpr double kSoftmaxFloor = -700.0;  // exp(-700) is still a positive double

inline void softmax_row(double* row, int k) {
    double mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < k; ++j) {
        double z = row[j] - mx;
        if (z < kSoftmaxFloor) z = kSoftmaxFloor;
        row[j] = std::exp(z);
        sum += row[j];
    }
    for (int j = 0; j < k; ++j) row[j] /= sum;
}

inline double gelu_value(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

inline double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    return cdf + x * pdf;
}

inline void ln_forward_row(const double* x, const double* gamma, const double* beta, double eps,
                           int d, double* y, double* mean_out, double* rstd_out) {
    double mean = 0.0;
    for (int j = 0; j < d; ++j) mean += x[j];
    mean /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
        const double c = x[j] - mean;
        var += c * c;
    }
    var /= d;
    const double rstd = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < d; ++j) y[j] = (x[j] - mean) * rstd * gamma[j] + beta[j];
    *mean_out = mean;
    *rstd_out = rstd;
}

inline void ln_backward_row(const double* x, const double* gamma, double mean, double rstd,
                            const double* dy, int d, double* dx) {
    double m1 = 0.0;  // mean of dxhat
    double m2 = 0.0;  // mean of dxhat * xhat
    for (int j = 0; j < d; ++j) {
        const double xhat = (x[j] - mean) * rstd;
        const double dxhat = dy[j] * gamma[j];
        m1 += dxhat;
        m2 += dxhat * xhat;
    }
    m1 /= d;
    m2 /= d;
    for (int j = 0; j < d; ++j) {
        const double xhat = (x[j] - mean) * rstd;
        const double dxhat = dy[j] * gamma[j];
        dx[j] = rstd * (dxhat - m1 - xhat * m2);
    }
}

}  // namespace

Backend default_backend() {
#ifdef _OPENMP
    const char* env = std::getenv("TDC_BACKEND");
    if (env != nullptr && std::strcmp(env, "serial") == 0) return Backend::serial;
    return Backend::parallel;
#else
    return Backend::serial;
#endif
}

Backend backend() { return backend_state().load(std::memory_order_relaxed); }

void set_backend(Backend b) { backend_state().store(b, std::memory_order_relaxed); }

// ---------------------------------------------------------------------------
// Serial reference implementations.
//
// Accumulation over the contraction index k runs in ascending order for
// every output element; the OpenMP versions keep the identical order so the
// two backends agree bitwise.
// ---------------------------------------------------------------------------

namespace serial {

void matmul(const Matrix& a, bool trans_a, const Matrix& b, bool trans_b, Matrix& c) {
    const int m = trans_a ? a.cols() : a.rows();
    const int n = trans_b ? b.rows() : b.cols();
    const int kk = trans_a ? a.rows() : a.cols();
    if (c.rows() != m || c.cols() != n) c = Matrix(m, n);
    if (!trans_a && !trans_b) {
        for (int i = 0; i < m; ++i) {
            double* crow = c.row(i);
            for (int j = 0; j < n; ++j) crow[j] = 0.0;
            const double* arow = a.row(i);
            for (int k = 0; k < kk; ++k) {
                const double aik = arow[k];
                const double* brow = b.row(k);
                for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
            }
        }
    } else if (!trans_a && trans_b) {
        for (int i = 0; i < m; ++i) {
            const double* arow = a.row(i);
            double* crow = c.row(i);
            for (int j = 0; j < n; ++j) {
                const double* brow = b.row(j);
                double s = 0.0;
                for (int k = 0; k < kk; ++k) s += arow[k] * brow[k];
                crow[j] = s;
            }
        }
    } else if (trans_a && !trans_b) {
        for (int i = 0; i < m; ++i) {
            double* crow = c.row(i);
            for (int j = 0; j < n; ++j) crow[j] = 0.0;
            for (int k = 0; k < kk; ++k) {
                const double aki = a(k, i);
                const double* brow = b.row(k);
                for (int j = 0; j < n; ++j) crow[j] += aki * brow[j];
            }
        }
    } else {
        for (int i = 0; i < m; ++i) {
            double* crow = c.row(i);
            for (int j = 0; j < n; ++j) {
                const double* brow = b.row(j);
                double s = 0.0;
                for (int k = 0; k < kk; ++k) s += a(k, i) * brow[k];
                crow[j] = s;
            }
        }
    }
}

void softmax_rows(Matrix& m) {
    for (int i = 0; i < m.rows(); ++i) softmax_row(m.row(i), m.cols());
}

void gelu(const Matrix& x, Matrix& y) {
    if (!y.same_shape(x)) y = Matrix(x.rows(), x.cols());
    const double* in = x.data();
    double* out = y.data();
    for (size_t i = 0; i < x.size(); ++i) out[i] = gelu_value(in[i]);
}

void gelu_backward(const Matrix& x, const Matrix& dy, Matrix& dx) {
    if (!dx.same_shape(x)) dx = Matrix(x.rows(), x.cols());
    const double* in = x.data();
    const double* g = dy.data();
    double* out = dx.data();
    for (size_t i = 0; i < x.size(); ++i) out[i] = g[i] * gelu_grad(in[i]);
}

void im2col(const Matrix& x, int width, Matrix& out) {
    const int rows = x.rows() - width + 1;
    const int h = x.cols();
    if (out.rows() != rows || out.cols() != width * h) out = Matrix(rows, width * h);
    for (int t = 0; t < rows; ++t) {
        double* dst = out.row(t);
        for (int w = 0; w < width; ++w)
            std::memcpy(dst + static_cast<size_t>(w) * h, x.row(t + w), sizeof(double) * h);
    }
}

void layer_norm_rows(const Matrix& x, const Matrix& gamma, const Matrix& beta, double eps,
                     Matrix& y, Matrix& mean, Matrix& rstd) {
    const int n = x.rows(), d = x.cols();
    if (!y.same_shape(x)) y = Matrix(n, d);
    if (mean.rows() != n || mean.cols() != 1) mean = Matrix(n, 1);
    if (rstd.rows() != n || rstd.cols() != 1) rstd = Matrix(n, 1);
    for (int i = 0; i < n; ++i)
        ln_forward_row(x.row(i), gamma.data(), beta.data(), eps, d, y.row(i), mean.row(i),
                       rstd.row(i));
}

void layer_norm_rows_backward(const Matrix& x, const Matrix& gamma, const Matrix& mean,
                              const Matrix& rstd, const Matrix& dy, Matrix& dx, Matrix& dgamma,
                              Matrix& dbeta) {
    const int n = x.rows(), d = x.cols();
    if (!dx.same_shape(x)) dx = Matrix(n, d);
    for (int j = 0; j < d; ++j) {
        double sg = 0.0, sb = 0.0;
        for (int i = 0; i < n; ++i) {
            const double xhat = (x(i, j) - mean(i, 0)) * rstd(i, 0);
            sg += dy(i, j) * xhat;
            sb += dy(i, j);
        }
        dgamma(0, j) += sg;
        dbeta(0, j) += sb;
    }
    for (int i = 0; i < n; ++i)
        ln_backward_row(x.row(i), gamma.data(), mean(i, 0), rstd(i, 0), dy.row(i), d, dx.row(i));
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP implementations: parallel over disjoint output rows/columns, same
// per-element accumulation order as the serial reference.
// ---------------------------------------------------------------------------

namespace openmp {

void matmul(const Matrix& a, bool trans_a, const Matrix& b, bool trans_b, Matrix& c) {
    const int m = trans_a ? a.cols() : a.rows();
    const int n = trans_b ? b.rows() : b.cols();
    const int kk = trans_a ? a.rows() : a.cols();
    if (c.rows() != m || c.cols() != n) c = Matrix(m, n);
    if (!trans_a && !trans_b) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < m; ++i) {
            double* crow = c.row(i);
            for (int j = 0; j < n; ++j) crow[j] = 0.0;
            const double* arow = a.row(i);
            for (int k = 0; k < kk; ++k) {
                const double aik = arow[k];
                const double* brow = b.row(k);
                for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
            }
        }
    } else if (!trans_a && trans_b) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < m; ++i) {
            const double* arow = a.row(i);
            double* crow = c.row(i);
            for (int j = 0; j < n; ++j) {
                const double* brow = b.row(j);
                double s = 0.0;
                for (int k = 0; k < kk; ++k) s += arow[k] * brow[k];
                crow[j] = s;
            }
        }
    } else if (trans_a && !trans_b) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < m; ++i) {
            double* crow = c.row(i);
            for (int j = 0; j < n; ++j) crow[j] = 0.0;
            for (int k = 0; k < kk; ++k) {
                const double aki = a(k, i);
                const double* brow = b.row(k);
                for (int j = 0; j < n; ++j) crow[j] += aki * brow[j];
            }
        }
    } else {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < m; ++i) {
            double* crow = c.row(i);
            for (int j = 0; j < n; ++j) {
                const double* brow = b.row(j);
                double s = 0.0;
                for (int k = 0; k < kk; ++k) s += a(k, i) * brow[k];
                crow[j] = s;
            }
        }
    }
}

void softmax_rows(Matrix& m) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m.rows(); ++i) softmax_row(m.row(i), m.cols());
}

void gelu(const Matrix& x, Matrix& y) {
    if (!y.same_shape(x)) y = Matrix(x.rows(), x.cols());
    const double* in = x.data();
    double* out = y.data();
    const long long total = static_cast<long long>(x.size());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < total; ++i) out[i] = gelu_value(in[i]);
}

void gelu_backward(const Matrix& x, const Matrix& dy, Matrix& dx) {
    if (!dx.same_shape(x)) dx = Matrix(x.rows(), x.cols());
    const double* in = x.data();
    const double* g = dy.data();
    double* out = dx.data();
    const long long total = static_cast<long long>(x.size());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < total; ++i) out[i] = g[i] * gelu_grad(in[i]);
}

void im2col(const Matrix& x, int width, Matrix& out) {
    const int rows = x.rows() - width + 1;
    const int h = x.cols();
    if (out.rows() != rows || out.cols() != width * h) out = Matrix(rows, width * h);
#pragma omp parallel for schedule(static)
    for (int t = 0; t < rows; ++t) {
        double* dst = out.row(t);
        for (int w = 0; w < width; ++w)
            std::memcpy(dst + static_cast<size_t>(w) * h, x.row(t + w), sizeof(double) * h);
    }
}

void layer_norm_rows(const Matrix& x, const Matrix& gamma, const Matrix& beta, double eps,
                     Matrix& y, Matrix& mean, Matrix& rstd) {
    const int n = x.rows(), d = x.cols();
    if (!y.same_shape(x)) y = Matrix(n, d);
    if (mean.rows() != n || mean.cols() != 1) mean = Matrix(n, 1);
    if (rstd.rows() != n || rstd.cols() != 1) rstd = Matrix(n, 1);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
        ln_forward_row(x.row(i), gamma.data(), beta.data(), eps, d, y.row(i), mean.row(i),
                       rstd.row(i));
}

void layer_norm_rows_backward(const Matrix& x, const Matrix& gamma, const Matrix& mean,
                              const Matrix& rstd, const Matrix& dy, Matrix& dx, Matrix& dgamma,
                              Matrix& dbeta) {
    const int n = x.rows(), d = x.cols();
    if (!dx.same_shape(x)) dx = Matrix(n, d);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < d; ++j) {
        double sg = 0.0, sb = 0.0;
        for (int i = 0; i < n; ++i) {
            const double xhat = (x(i, j) - mean(i, 0)) * rstd(i, 0);
            sg += dy(i, j) * xhat;
            sb += dy(i, j);
        }
        dgamma(0, j) += sg;
        dbeta(0, j) += sb;
    }
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
        ln_backward_row(x.row(i), gamma.data(), mean(i, 0), rstd(i, 0), dy.row(i), d, dx.row(i));
}

}  // namespace openmp

// ---------------------------------------------------------------------------
// Dispatch.
// ---------------------------------------------------------------------------

#ifdef _OPENMP
#define TDC_DISPATCH(fn, ...)                   \
    do {                                        \
        if (backend() == Backend::parallel) {   \
            openmp::fn(__VA_ARGS__);            \
        } else {                                \
            serial::fn(__VA_ARGS__);            \
        }                                       \
    } while (0)
#else
#define TDC_DISPATCH(fn, ...) serial::fn(__VA_ARGS__)
#endif

void matmul(const Matrix& a, bool trans_a, const Matrix& b, bool trans_b, Matrix& c) {
    check_matmul_dims(a, trans_a, b, trans_b);
    TDC_DISPATCH(matmul, a, trans_a, b, trans_b, c);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix c;
    matmul(a, false, b, false, c);
    return c;
}

void softmax_rows(Matrix& m) { TDC_DISPATCH(softmax_rows, m); }

void gelu(const Matrix& x, Matrix& y) { TDC_DISPATCH(gelu, x, y); }

void gelu_backward(const Matrix& x, const Matrix& dy, Matrix& dx) {
    TDC_DISPATCH(gelu_backward, x, dy, dx);
}

void im2col(const Matrix& x, int width, Matrix& out) {
    if (width < 1 || width > x.rows())
        throw std::invalid_argument("im2col: width must be in [1, rows]");
    TDC_DISPATCH(im2col, x, width, out);
}

void layer_norm_rows(const Matrix& x, const Matrix& gamma, const Matrix& beta, double eps,
                     Matrix& y, Matrix& mean, Matrix& rstd) {
    TDC_DISPATCH(layer_norm_rows, x, gamma, beta, eps, y, mean, rstd);
}

void layer_norm_rows_backward(const Matrix& x, const Matrix& gamma, const Matrix& mean,
                              const Matrix& rstd, const Matrix& dy, Matrix& dx, Matrix& dgamma,
                              Matrix& dbeta) {
    TDC_DISPATCH(layer_norm_rows_backward, x, gamma, mean, rstd, dy, dx, dgamma, dbeta);
}

#undef TDC_DISPATCH

void add_bias_rows(Matrix& m, const Matrix& bias) {
    if (bias.cols() != m.cols())
        throw std::invalid_argument("add_bias_rows: bias width mismatch");
    const double* b = bias.data();
    parallel_for(m.rows(), [&](int i) {
        double* row = m.row(i);
        for (int j = 0; j < m.cols(); ++j) row[j] += b[j];
    });
}

void add_inplace(Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("add_inplace: shape mismatch");
    double* pa = a.data();
    const double* pb = b.data();
    for (size_t i = 0; i < a.size(); ++i) pa[i] += pb[i];
}

}  // namespace tdc::kernels
