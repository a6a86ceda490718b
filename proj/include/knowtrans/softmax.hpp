#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Core>

namespace knowtrans {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// log(sum(exp(x))) with max subtraction.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    const Scalar m = x.maxCoeff();
    return m + std::log((x.array() - m).exp().sum());
}

template <typename Derived>
Vec<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& scores) {
    using Scalar = typename Derived::Scalar;
    const Scalar m = scores.maxCoeff();
    Vec<Scalar> e = (scores.array() - m).exp().matrix();
    return e / e.sum();
}

/// One softmax classification instance: candidate feature rows and the
/// index of the row that should win.
template <typename Scalar>
struct SoftmaxGroup {
    Mat<Scalar> features;
    Eigen::Index target = 0;
};

/// Mean over groups of -log softmax(features * w)[target]. When `grad` is
/// non-null it receives the gradient with respect to w, i.e.
/// mean of features^T (p - e_target).
template <typename Scalar>
Scalar mean_softmax_nll(const std::vector<SoftmaxGroup<Scalar>>& groups, const Vec<Scalar>& w,
                        Vec<Scalar>* grad = nullptr) {
    Scalar loss = 0;
    if (grad != nullptr) grad->setZero(w.size());
    if (groups.empty()) return loss;
    for (const auto& g : groups) {
        const Vec<Scalar> s = g.features * w;
        loss += log_sum_exp(s) - s[g.target];
        if (grad != nullptr) {
            Vec<Scalar> p = softmax(s);
            p[g.target] -= Scalar(1);
            grad->noalias() += g.features.transpose() * p;
        }
    }
    const auto n = static_cast<Scalar>(groups.size());
    if (grad != nullptr) *grad /= n;
    return loss / n;
}

}  // namespace knowtrans
