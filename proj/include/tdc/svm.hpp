#pragma once

#include <string>
#include <vector>

#include "tdc/matrix.hpp"
#include "tdc/tfidf.hpp"

namespace tdc {

// One-vs-rest linear SVM with plain hinge loss and L2 regularization,
// objective (1/2)||w||^2 + C * sum hinge per binary problem. The bias is an
// augmented constant-1 feature (and therefore regularized, as in liblinear
// with -B 1). Solved by dual coordinate descent over examples in a fixed
// cyclic order, so training is deterministic.
struct SvmParams {
    Matrix weights;  // [k x (dim+1)], last column is the bias feature
    int dim = 0;
    int classes = 0;
};

struct SvmOptions {
    double c = 1.0;
    double tolerance = 1e-4;  // max projected-gradient violation per class
    int max_passes = 1000;
};

SvmParams svm_train(const std::vector<SparseVector>& vectors, const std::vector<int>& labels,
                    int num_classes, const SvmOptions& options);

// Per-class decision values w_c . [x; 1].
Matrix svm_decision_values(const SvmParams& params, const std::vector<SparseVector>& vectors);

// argmax of decision values, lowest index on ties.
std::vector<int> svm_predict(const SvmParams& params, const std::vector<SparseVector>& vectors);

// Mean objective value over examples: ((1/2)||w||^2 + C sum hinge) summed
// over the k binary problems, divided by the example count. Reported in the
// training trace.
double svm_objective_mean(const SvmParams& params, const std::vector<SparseVector>& vectors,
                          const std::vector<int>& labels, double c);

}  // namespace tdc
