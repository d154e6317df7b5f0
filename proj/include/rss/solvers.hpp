#pragma once

#include "rss/data_model.hpp"

#include <span>
#include <vector>

namespace rss {

enum class StepRule { fixed, backtracking };

/// Penalty weight `alpha` multiplies the regularizer; the loss is an
/// unnormalized sum over samples. The intercept is never penalized.
struct SolverConfig {
    double alpha = 0.0;
    int max_iters = 2000;
    /// Relative objective change that triggers the optimality check.
    double tol = 1e-8;
    /// Optimality residual bound for the nonsmooth solvers, scaled by (1 + alpha).
    double kkt_tol = 1e-6;
    StepRule step_rule = StepRule::backtracking;
    /// Keep the objective of every accepted iterate in SolveResult.
    bool record_trace = false;
    /// Fit on unit-variance columns; weights are reported in raw units.
    bool standardize = false;

    void validate() const;
};

struct SolveResult {
    ModelWeights weights;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;
};

/// Disjoint groups covering [0, p).
struct GroupStructure {
    std::vector<std::vector<Index>> groups;

    static GroupStructure singletons(Index p);
    void validate(Index p) const;
};

struct LossGrad {
    double value = 0.0;
    Vector grad_w;
    double grad_c = 0.0;
};

/// sum_i log(1 + exp(-y_i (X_i . w + c))) and its gradient.
LossGrad logistic_loss_grad(const ModelWeights& weights, const Matrix& X, std::span<const int> y);
/// Logistic loss plus (alpha/2)||w||^2.
LossGrad ridge_logistic_loss_grad(const ModelWeights& weights, const Matrix& X, std::span<const int> y,
                                  double alpha);
/// sum_i max(0, 1 - y_i (X_i . w + c))^2 plus (alpha/2)||w||^2.
LossGrad squared_hinge_loss_grad(const ModelWeights& weights, const Matrix& X, std::span<const int> y,
                                 double alpha);

double soft_threshold(double v, double t);
Vector block_soft_threshold(const Vector& v, double t);

double l1_objective(const ModelWeights& weights, const Matrix& X, std::span<const int> y, double alpha);
double group_objective(const ModelWeights& weights, const Matrix& X, std::span<const int> y,
                       const GroupStructure& groups, double alpha);

/// Largest violation of the L1 subgradient optimality conditions (intercept
/// included).
double l1_kkt_residual(const ModelWeights& weights, const Matrix& X, std::span<const int> y, double alpha);

/// Intercept-only logistic optimum, log(n+ / n-).
double intercept_only(std::span<const int> y);
/// Smallest alpha for which the L1 logistic solution has w = 0. With
/// standardize, for the problem on unit-variance columns.
double compute_alpha_max(const Matrix& X, std::span<const int> y, bool standardize = false);

SolveResult solve_l1_logistic(const Matrix& X, std::span<const int> y, const SolverConfig& cfg);
SolveResult solve_group_logistic(const Matrix& X, std::span<const int> y, const GroupStructure& groups,
                                 const SolverConfig& cfg);
SolveResult solve_l2_logistic(const Matrix& X, std::span<const int> y, const SolverConfig& cfg);
SolveResult solve_l2_svm(const Matrix& X, std::span<const int> y, const SolverConfig& cfg);

struct TTestResult {
    Vector t;
    Vector p;
};

/// Pooled-variance two-sample t test per column, mean(+1) - mean(-1).
/// Zero pooled variance gives t = 0, p = 1 for equal means and t = +-inf,
/// p = 0 otherwise.
TTestResult two_sample_ttest(const Matrix& X, std::span<const int> y);

}  // namespace rss
