#pragma once

#include "tdc/matrix.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tdc::kernels {

// Two interchangeable backends: a plain serial reference and an OpenMP
// parallel one. Both compute every output element with the same fixed
// accumulation order, so results are bit-identical across backends and
// thread counts. The serial backend stays around as the test oracle;
// tools/bench_kernels compares their throughput.
enum class Backend { serial, parallel };

Backend backend();
void set_backend(Backend b);

// parallel when compiled with OpenMP (unless TDC_BACKEND=serial), else serial.
Backend default_backend();

namespace serial {
void matmul(const Matrix& a, bool trans_a, const Matrix& b, bool trans_b, Matrix& c);
void softmax_rows(Matrix& m);
void gelu(const Matrix& x, Matrix& y);
void gelu_backward(const Matrix& x, const Matrix& dy, Matrix& dx);
void im2col(const Matrix& x, int width, Matrix& out);
void layer_norm_rows(const Matrix& x, const Matrix& gamma, const Matrix& beta, double eps,
                     Matrix& y, Matrix& mean, Matrix& rstd);
void layer_norm_rows_backward(const Matrix& x, const Matrix& gamma, const Matrix& mean,
                              const Matrix& rstd, const Matrix& dy, Matrix& dx, Matrix& dgamma,
                              Matrix& dbeta);
}  // namespace serial

namespace openmp {
void matmul(const Matrix& a, bool trans_a, const Matrix& b, bool trans_b, Matrix& c);
void softmax_rows(Matrix& m);
void gelu(const Matrix& x, Matrix& y);
void gelu_backward(const Matrix& x, const Matrix& dy, Matrix& dx);
void im2col(const Matrix& x, int width, Matrix& out);
void layer_norm_rows(const Matrix& x, const Matrix& gamma, const Matrix& beta, double eps,
                     Matrix& y, Matrix& mean, Matrix& rstd);
void layer_norm_rows_backward(const Matrix& x, const Matrix& gamma, const Matrix& mean,
                              const Matrix& rstd, const Matrix& dy, Matrix& dx, Matrix& dgamma,
                              Matrix& dbeta);
}  // namespace openmp

// Dispatching entry points used by the rest of the toolkit.
void matmul(const Matrix& a, bool trans_a, const Matrix& b, bool trans_b, Matrix& c);
Matrix matmul(const Matrix& a, const Matrix& b);
void softmax_rows(Matrix& m);
void gelu(const Matrix& x, Matrix& y);
void gelu_backward(const Matrix& x, const Matrix& dy, Matrix& dx);
void im2col(const Matrix& x, int width, Matrix& out);
void layer_norm_rows(const Matrix& x, const Matrix& gamma, const Matrix& beta, double eps,
                     Matrix& y, Matrix& mean, Matrix& rstd);
void layer_norm_rows_backward(const Matrix& x, const Matrix& gamma, const Matrix& mean,
                              const Matrix& rstd, const Matrix& dy, Matrix& dx, Matrix& dgamma,
                              Matrix& dbeta);

void add_bias_rows(Matrix& m, const Matrix& bias);
void add_inplace(Matrix& a, const Matrix& b);

// Index-parallel loop honoring the active backend. Each index must touch
// disjoint outputs; then results do not depend on the thread count.
template <typename F>
void parallel_for(int n, F&& f) {
#ifdef _OPENMP
    if (backend() == Backend::parallel) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
#endif
    for (int i = 0; i < n; ++i) f(i);
}

}  // namespace tdc::kernels
