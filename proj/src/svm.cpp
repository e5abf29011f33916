#include "tdc/svm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tdc/kernels.hpp"
#include "tdc/nn.hpp"

namespace tdc {

namespace {

// Dual coordinate descent for min_w (1/2)||w||^2 + C sum_i hinge(y_i w.x_i)
// (Hsieh et al. style, L1 loss). x rows already carry the bias feature.
void train_binary(const std::vector<SparseVector>& xs, const std::vector<int8_t>& ys,
                  const std::vector<double>& q_diag, double c, double tolerance, int max_passes,
                  double* w) {
    const int n = static_cast<int>(xs.size());
    std::vector<double> alpha(n, 0.0);
    for (int pass = 0; pass < max_passes; ++pass) {
        double max_violation = 0.0;
        for (int i = 0; i < n; ++i) {
            if (q_diag[i] <= 0.0) continue;  // empty row: contributes nothing
            const double y = ys[i];
            double wx = 0.0;
            for (const auto& [col, val] : xs[i]) wx += w[col] * val;
            const double g = y * wx - 1.0;
            double pg = g;
            if (alpha[i] <= 0.0) {
                pg = std::min(g, 0.0);
            } else if (alpha[i] >= c) {
                pg = std::max(g, 0.0);
            }
            max_violation = std::max(max_violation, std::fabs(pg));
            if (pg != 0.0) {
                const double old = alpha[i];
                alpha[i] = std::clamp(old - g / q_diag[i], 0.0, c);
                const double delta = (alpha[i] - old) * y;
                if (delta != 0.0)
                    for (const auto& [col, val] : xs[i]) w[col] += delta * val;
            }
        }
        if (max_violation < tolerance) break;
    }
}

}  // namespace

SvmParams svm_train(const std::vector<SparseVector>& vectors, const std::vector<int>& labels,
                    int num_classes, const SvmOptions& options) {
    if (vectors.size() != labels.size())
        throw std::invalid_argument("svm_train: vectors/labels length mismatch");
    if (vectors.empty()) throw std::invalid_argument("svm_train: empty training set");
    if (options.c <= 0.0) throw std::invalid_argument("svm_train: C must be positive");

    int present = 0;
    std::vector<char> seen(num_classes, 0);
    for (int y : labels) {
        if (y < 0 || y >= num_classes) throw std::out_of_range("svm_train: label out of range");
        if (!seen[y]) {
            seen[y] = 1;
            ++present;
        }
    }
    if (present < 2)
        throw std::runtime_error("svm_train: need at least 2 distinct classes, got " +
                                 std::to_string(present));

    int dim = 0;
    for (const auto& x : vectors)
        for (const auto& [col, _] : x) dim = std::max(dim, col + 1);

    // Augment with the bias feature at column `dim`.
    std::vector<SparseVector> augmented = vectors;
    std::vector<double> q_diag(vectors.size());
    for (size_t i = 0; i < augmented.size(); ++i) {
        augmented[i].emplace_back(dim, 1.0);
        double q = 0.0;
        for (const auto& [_, val] : augmented[i]) q += val * val;
        q_diag[i] = q;
    }

    SvmParams params;
    params.dim = dim;
    params.classes = num_classes;
    params.weights = Matrix(num_classes, dim + 1);

    // One-vs-rest; classes are independent problems, outputs disjoint rows.
    kernels::parallel_for(num_classes, [&](int cls) {
        std::vector<int8_t> ys(labels.size());
        for (size_t i = 0; i < labels.size(); ++i) ys[i] = labels[i] == cls ? 1 : -1;
        train_binary(augmented, ys, q_diag, options.c, options.tolerance, options.max_passes,
                     params.weights.row(cls));
    });
    return params;
}

Matrix svm_decision_values(const SvmParams& params, const std::vector<SparseVector>& vectors) {
    Matrix decisions(static_cast<int>(vectors.size()), params.classes);
    kernels::parallel_for(static_cast<int>(vectors.size()), [&](int i) {
        for (int c = 0; c < params.classes; ++c) {
            const double* w = params.weights.row(c);
            double s = w[params.dim];  // bias feature
            // Columns beyond the training space carry zero weight.
            for (const auto& [col, val] : vectors[i])
                if (col < params.dim) s += w[col] * val;
            decisions(i, c) = s;
        }
    });
    return decisions;
}

std::vector<int> svm_predict(const SvmParams& params, const std::vector<SparseVector>& vectors) {
    const Matrix decisions = svm_decision_values(params, vectors);
    std::vector<int> out(vectors.size());
    for (int i = 0; i < decisions.rows(); ++i)
        out[i] = nn::argmax_row(decisions.row(i), decisions.cols());
    return out;
}

double svm_objective_mean(const SvmParams& params, const std::vector<SparseVector>& vectors,
                          const std::vector<int>& labels, double c) {
    const Matrix decisions = svm_decision_values(params, vectors);
    double total = 0.0;
    for (int cls = 0; cls < params.classes; ++cls) {
        const double* w = params.weights.row(cls);
        double norm_sq = 0.0;
        for (int j = 0; j <= params.dim; ++j) norm_sq += w[j] * w[j];
        double hinge = 0.0;
        for (size_t i = 0; i < vectors.size(); ++i) {
            const double y = labels[i] == cls ? 1.0 : -1.0;
            hinge += std::max(0.0, 1.0 - y * decisions(static_cast<int>(i), cls));
        }
        total += 0.5 * norm_sq + c * hinge;
    }
    return total / static_cast<double>(vectors.size());
}

}  // namespace tdc
