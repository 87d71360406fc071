#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "jitvp/errors.hpp"

namespace jitvp {

// Sparse feature row: (index, value) pairs, indices strictly increasing.
using SparseRow = std::vector<std::pair<std::uint32_t, double>>;

struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;
};

inline double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace detail {

// log(1 + exp(t)) without overflow.
inline double softplus(double t) {
    return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

}  // namespace detail

// Weighted L2-regularized logistic loss (mean over sample weights, bias
// unregularized).
struct LogisticProblem {
    const std::vector<SparseRow>* rows = nullptr;
    const std::vector<int>* labels = nullptr;          // 0/1
    const std::vector<double>* sample_weights = nullptr;  // nullptr: all 1
    std::size_t dim = 0;
    double l2 = 1e-4;

    double weight_of(std::size_t i) const {
        return sample_weights ? (*sample_weights)[i] : 1.0;
    }

    double weight_total() const {
        if (!sample_weights) return static_cast<double>(rows->size());
        double sum = 0;
        for (double w : *sample_weights) sum += w;
        return sum;
    }

    double margin(const LinearModel& m, std::size_t i) const {
        double z = m.bias;
        for (const auto& [index, value] : (*rows)[i]) z += m.weights[index] * value;
        return z;
    }

    double loss(const LinearModel& m) const {
        const double total = weight_total();
        double sum = 0;
        for (std::size_t i = 0; i < rows->size(); ++i) {
            const double y = (*labels)[i] == 1 ? 1.0 : -1.0;
            sum += weight_of(i) * detail::softplus(-y * margin(m, i));
        }
        double reg = 0;
        for (double w : m.weights) reg += w * w;
        return sum / total + 0.5 * l2 * reg;
    }

    // Returns the loss; fills grad (size dim) and grad_bias.
    double loss_and_gradient(const LinearModel& m, std::vector<double>& grad,
                             double& grad_bias) const {
        const double total = weight_total();
        grad.assign(dim, 0.0);
        grad_bias = 0.0;
        double sum = 0;
        for (std::size_t i = 0; i < rows->size(); ++i) {
            const double y = (*labels)[i] == 1 ? 1.0 : -1.0;
            const double z = margin(m, i);
            const double sw = weight_of(i);
            sum += sw * detail::softplus(-y * z);
            const double dz = sw / total * (-y) * sigmoid(-y * z);
            for (const auto& [index, value] : (*rows)[i]) grad[index] += dz * value;
            grad_bias += dz;
        }
        double reg = 0;
        for (std::size_t k = 0; k < dim; ++k) {
            reg += m.weights[k] * m.weights[k];
            grad[k] += l2 * m.weights[k];
        }
        return sum / total + 0.5 * l2 * reg;
    }
};

// Full-batch gradient descent with Armijo backtracking line search.
// Deterministic: no randomness, fixed iteration order.
inline LinearModel train_logistic_gd(const LogisticProblem& problem, int max_iters = 200,
                                     double grad_tol = 1e-8) {
    LinearModel model;
    model.weights.assign(problem.dim, 0.0);

    std::vector<double> grad;
    double grad_bias = 0;
    constexpr double c1 = 1e-4;

    double loss = problem.loss_and_gradient(model, grad, grad_bias);
    for (int iter = 0; iter < max_iters; ++iter) {
        double grad_inf = std::abs(grad_bias);
        double descent = grad_bias * grad_bias;
        for (double g : grad) {
            grad_inf = std::max(grad_inf, std::abs(g));
            descent += g * g;
        }
        if (grad_inf < grad_tol) break;

        double step = 1.0;
        LinearModel candidate = model;
        while (true) {
            for (std::size_t k = 0; k < problem.dim; ++k)
                candidate.weights[k] = model.weights[k] - step * grad[k];
            candidate.bias = model.bias - step * grad_bias;
            if (problem.loss(candidate) <= loss - c1 * step * descent) break;
            step *= 0.5;
            if (step < 1e-14) break;
        }
        model = candidate;
        loss = problem.loss_and_gradient(model, grad, grad_bias);
    }
    return model;
}

inline double predict_logistic(const LinearModel& model, const SparseRow& row) {
    double z = model.bias;
    for (const auto& [index, value] : row) z += model.weights[index] * value;
    return sigmoid(z);
}

}  // namespace jitvp
