#include "rss/solvers.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rss {

namespace {

enum class Loss { logistic, squared_hinge };

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

// 1 / (1 + exp(m)) without overflow.
double sigmoid_neg(double m) {
    if (m >= 0) {
        const double e = std::exp(-m);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(m));
}

Vector label_vector(std::span<const int> y) {
    Vector v(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) v(static_cast<Eigen::Index>(i)) = y[i];
    return v;
}

void check_shapes(const Matrix& X, std::span<const int> y) {
    if (static_cast<std::size_t>(X.rows()) != y.size())
        throw DataError("shape mismatch: " + std::to_string(X.rows()) + " rows, " + std::to_string(y.size()) +
                        " labels");
}

void check_both_classes(std::span<const int> y) {
    const auto pos = std::count(y.begin(), y.end(), 1);
    if (pos == 0 || pos == static_cast<long>(y.size())) throw DataError("both classes must be present");
}

class Smooth {
public:
    Smooth(const Matrix& X, std::span<const int> y, Loss loss, double ridge)
        : X_(X), y_(label_vector(y)), loss_(loss), ridge_(ridge) {}

    double value(const Vector& w, double c) const {
        const Vector m = (y_.array() * ((X_ * w).array() + c)).matrix();
        double v = 0.0;
        if (loss_ == Loss::logistic) {
            for (Eigen::Index i = 0; i < m.size(); ++i) v += softplus(-m(i));
        } else {
            for (Eigen::Index i = 0; i < m.size(); ++i) {
                const double h = std::max(0.0, 1.0 - m(i));
                v += h * h;
            }
        }
        return v + 0.5 * ridge_ * w.squaredNorm();
    }

    LossGrad eval(const Vector& w, double c) const {
        const Vector m = (y_.array() * ((X_ * w).array() + c)).matrix();
        Vector r(m.size());
        double v = 0.0;
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            if (loss_ == Loss::logistic) {
                v += softplus(-m(i));
                r(i) = -y_(i) * sigmoid_neg(m(i));
            } else {
                const double h = std::max(0.0, 1.0 - m(i));
                v += h * h;
                r(i) = -2.0 * h * y_(i);
            }
        }
        LossGrad out;
        out.value = v + 0.5 * ridge_ * w.squaredNorm();
        out.grad_w = X_.transpose() * r;
        if (ridge_ != 0.0) out.grad_w += ridge_ * w;
        out.grad_c = r.sum();
        return out;
    }

    double curvature() const { return loss_ == Loss::logistic ? 0.25 : 2.0; }

    // Upper bound on the gradient's Lipschitz constant over (w, c).
    double lipschitz_upper() const {
        return curvature() * (X_.squaredNorm() + static_cast<double>(X_.rows())) + ridge_;
    }

    // Power iteration on [X 1]^T [X 1]; backtracking corrects underestimates.
    double lipschitz_estimate() const {
        const Eigen::Index p = X_.cols();
        Vector v = Vector::Ones(p + 1) / std::sqrt(static_cast<double>(p + 1));
        double sigma2 = 0.0;
        for (int k = 0; k < 30; ++k) {
            const Vector a = (X_ * v.head(p)).array() + v(p);
            Vector next(p + 1);
            next.head(p) = X_.transpose() * a;
            next(p) = a.sum();
            sigma2 = next.norm();
            if (sigma2 == 0.0) break;
            v = next / sigma2;
        }
        return std::max(curvature() * sigma2 + ridge_, 1e-12);
    }

    Eigen::Index dim() const { return X_.cols(); }

private:
    const Matrix& X_;
    Vector y_;
    Loss loss_;
    double ridge_;
};

enum class PenaltyKind { none, l1, group };

class Penalty {
public:
    static Penalty none() { return Penalty(PenaltyKind::none, 0.0, nullptr); }
    static Penalty l1(double alpha) { return Penalty(PenaltyKind::l1, alpha, nullptr); }
    static Penalty group(double alpha, const GroupStructure& g) { return Penalty(PenaltyKind::group, alpha, &g); }

    double value(const Vector& w) const {
        switch (kind_) {
            case PenaltyKind::none: return 0.0;
            case PenaltyKind::l1: return alpha_ * w.lpNorm<1>();
            case PenaltyKind::group: {
                double s = 0.0;
                for (const auto& g : groups_->groups) s += gather(w, g).norm();
                return alpha_ * s;
            }
        }
        return 0.0;
    }

    void prox(Vector& w, double step) const {
        const double t = alpha_ * step;
        switch (kind_) {
            case PenaltyKind::none: return;
            case PenaltyKind::l1:
                for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = soft_threshold(w(j), t);
                return;
            case PenaltyKind::group:
                for (const auto& g : groups_->groups) scatter(w, g, block_soft_threshold(gather(w, g), t));
                return;
        }
    }

    // Optimality residual at (w, c) given the smooth gradient there.
    double residual(const Vector& w, const LossGrad& g) const {
        double worst = std::abs(g.grad_c);
        switch (kind_) {
            case PenaltyKind::none:
                return std::sqrt(g.grad_w.squaredNorm() + g.grad_c * g.grad_c);
            case PenaltyKind::l1:
                for (Eigen::Index j = 0; j < w.size(); ++j) {
                    const double r = w(j) != 0.0 ? std::abs(g.grad_w(j) + alpha_ * (w(j) > 0 ? 1.0 : -1.0))
                                                 : std::max(std::abs(g.grad_w(j)) - alpha_, 0.0);
                    worst = std::max(worst, r);
                }
                return worst;
            case PenaltyKind::group:
                for (const auto& grp : groups_->groups) {
                    const Vector wg = gather(w, grp);
                    const Vector gg = gather(g.grad_w, grp);
                    const double nw = wg.norm();
                    const double r = nw > 0.0 ? (gg + alpha_ * wg / nw).norm() : std::max(gg.norm() - alpha_, 0.0);
                    worst = std::max(worst, r);
                }
                return worst;
        }
        return worst;
    }

    double alpha() const { return alpha_; }
    bool smooth_only() const { return kind_ == PenaltyKind::none; }

private:
    Penalty(PenaltyKind k, double a, const GroupStructure* g) : kind_(k), alpha_(a), groups_(g) {}

    static Vector gather(const Vector& w, const std::vector<Index>& idx) {
        Vector out(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k)
            out(static_cast<Eigen::Index>(k)) = w(static_cast<Eigen::Index>(idx[k]));
        return out;
    }
    static void scatter(Vector& w, const std::vector<Index>& idx, const Vector& v) {
        for (std::size_t k = 0; k < idx.size(); ++k)
            w(static_cast<Eigen::Index>(idx[k])) = v(static_cast<Eigen::Index>(k));
    }

    PenaltyKind kind_;
    double alpha_;
    const GroupStructure* groups_;
};

// Accelerated proximal gradient with backtracking. Momentum restarts
// whenever a step would raise the objective, so accepted iterates are
// monotone.
SolveResult proximal_gradient(const Smooth& f, const Penalty& pen, const SolverConfig& cfg, ModelWeights x) {
    SolveResult out;
    std::vector<double>* trace = cfg.record_trace ? &out.objective_trace : nullptr;
    double L = cfg.step_rule == StepRule::fixed ? f.lipschitz_upper() : f.lipschitz_estimate();
    double Fx = f.value(x.w, x.c) + pen.value(x.w);
    if (trace) trace->push_back(Fx);

    auto optimal = [&](const ModelWeights& at) {
        const LossGrad g = f.eval(at.w, at.c);
        const double r = pen.residual(at.w, g);
        return r <= cfg.kkt_tol * (1.0 + pen.alpha());
    };

    Vector yw = x.w;
    double yc = x.c;
    double t = 1.0;
    bool y_is_x = true;

    int it = 0;
    for (; it < cfg.max_iters; ++it) {
        const LossGrad gy = f.eval(yw, yc);
        Vector zw;
        double zc = 0.0, fz = 0.0;
        for (int bt = 0; bt < 60; ++bt) {
            zw = yw - gy.grad_w / L;
            pen.prox(zw, 1.0 / L);
            zc = yc - gy.grad_c / L;
            fz = f.value(zw, zc);
            if (cfg.step_rule == StepRule::fixed) break;
            const Vector dw = zw - yw;
            const double dc = zc - yc;
            const double model =
                gy.value + gy.grad_w.dot(dw) + gy.grad_c * dc + 0.5 * L * (dw.squaredNorm() + dc * dc);
            if (fz <= model + 1e-12 * std::max(1.0, std::abs(model))) break;
            L *= 2.0;
        }
        const double Fz = fz + pen.value(zw);

        if (!(Fz <= Fx)) {
            if (!y_is_x) {
                yw = x.w;
                yc = x.c;
                t = 1.0;
                y_is_x = true;
                continue;
            }
            // No descent from x itself: round-off floor.
            out.converged = optimal(x);
            ++it;
            break;
        }

        const double prev = Fx;
        const Vector step_w = zw - x.w;
        const double step_c = zc - x.c;
        x.w = std::move(zw);
        x.c = zc;
        Fx = Fz;
        if (trace) trace->push_back(Fx);

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double beta = (t - 1.0) / t_next;
        yw = x.w + beta * step_w;
        yc = x.c + beta * step_c;
        t = t_next;
        y_is_x = beta == 0.0;

        if (std::abs(prev - Fx) <= cfg.tol * std::max(1.0, std::abs(Fx)) && optimal(x)) {
            out.converged = true;
            ++it;
            break;
        }
    }
    out.weights = std::move(x);
    out.objective = Fx;
    out.iterations = it;
    return out;
}

// Smooth objectives. Near the optimum the objective is flat to round-off, so
// momentum restarts use the gradient test and convergence uses the gradient
// norm, never function-value differences.
SolveResult accelerated_gradient(const Smooth& f, const SolverConfig& cfg, ModelWeights x) {
    SolveResult out;
    std::vector<double>* trace = cfg.record_trace ? &out.objective_trace : nullptr;
    double L = cfg.step_rule == StepRule::fixed ? f.lipschitz_upper() : f.lipschitz_estimate();
    const Penalty none = Penalty::none();
    if (trace) trace->push_back(f.value(x.w, x.c));

    Vector yw = x.w;
    double yc = x.c;
    double t = 1.0;
    bool y_is_x = true;
    double fx = f.value(x.w, x.c);

    int it = 0;
    for (; it < cfg.max_iters; ++it) {
        const LossGrad gy = f.eval(yw, yc);
        if (y_is_x && none.residual(yw, gy) < cfg.tol * (1.0 + std::abs(gy.value))) {
            out.converged = true;
            break;
        }
        Vector zw;
        double zc = 0.0, fz = 0.0;
        for (int bt = 0; bt < 60; ++bt) {
            zw = yw - gy.grad_w / L;
            zc = yc - gy.grad_c / L;
            fz = f.value(zw, zc);
            if (cfg.step_rule == StepRule::fixed) break;
            const double model = gy.value - 0.5 * (gy.grad_w.squaredNorm() + gy.grad_c * gy.grad_c) / L;
            if (fz <= model + 1e-12 * std::max(1.0, std::abs(model))) break;
            L *= 2.0;
        }
        const Vector step_w = zw - x.w;
        const double step_c = zc - x.c;
        // Restart when the momentum direction points uphill.
        const bool restart = gy.grad_w.dot(step_w) + gy.grad_c * step_c > 0.0;
        x.w = std::move(zw);
        x.c = zc;
        fx = fz;
        if (trace) trace->push_back(fx);
        if (restart) {
            t = 1.0;
            yw = x.w;
            yc = x.c;
            y_is_x = true;
            continue;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double beta = (t - 1.0) / t_next;
        yw = x.w + beta * step_w;
        yc = x.c + beta * step_c;
        t = t_next;
        y_is_x = beta == 0.0;
        if (!y_is_x && it % 20 == 19) {
            const LossGrad gx = f.eval(x.w, x.c);
            if (none.residual(x.w, gx) < cfg.tol * (1.0 + std::abs(gx.value))) {
                out.converged = true;
                ++it;
                break;
            }
        }
    }
    out.weights = std::move(x);
    out.objective = fx;
    out.iterations = it;
    return out;
}

// The intercept is unpenalized, so solving on column-centered data and
// shifting c afterwards gives the same optimum. Centering removes the
// column-mean direction that otherwise dominates the curvature.
// Centers the columns and, if asked, scales them to unit variance. Columns
// with no variance keep scale 1. restore() maps weights back to raw units.
struct Centered {
    Matrix X;
    Vector mean;
    Vector scale;
    Centered(const Matrix& raw, bool standardize)
        : X(raw), mean(raw.colwise().mean().transpose()), scale(Vector::Ones(raw.cols())) {
        X.rowwise() -= mean.transpose();
        if (!standardize || X.rows() == 0) return;
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            const double sd = std::sqrt(X.col(j).squaredNorm() / static_cast<double>(X.rows()));
            if (sd > 0.0) {
                scale(j) = sd;
                X.col(j) /= sd;
            }
        }
    }
    SolveResult restore(SolveResult r) const {
        r.weights.w.array() /= scale.array();
        r.weights.c -= mean.dot(r.weights.w);
        return r;
    }
};

ModelWeights zero_start(const Matrix& X, std::span<const int> y) {
    return ModelWeights{Vector::Zero(X.cols()), intercept_only(y)};
}

void check_inputs(const Matrix& X, std::span<const int> y, const SolverConfig& cfg) {
    check_shapes(X, y);
    check_both_classes(y);
    cfg.validate();
}

}  // namespace

void SolverConfig::validate() const {
    if (!(alpha >= 0.0)) throw DataError("solver alpha must be nonnegative");
    if (!(tol > 0.0)) throw DataError("solver tol must be positive");
    if (!(kkt_tol > 0.0)) throw DataError("solver kkt_tol must be positive");
    if (max_iters < 1) throw DataError("solver max_iters must be positive");
}

GroupStructure GroupStructure::singletons(Index p) {
    GroupStructure g;
    g.groups.reserve(p);
    for (Index j = 0; j < p; ++j) g.groups.push_back({j});
    return g;
}

void GroupStructure::validate(Index p) const {
    std::vector<char> seen(p, 0);
    Index total = 0;
    for (const auto& g : groups) {
        if (g.empty()) throw DataError("empty group");
        for (Index j : g) {
            if (j >= p) throw DataError("group index out of range");
            if (seen[j]) throw DataError("groups overlap");
            seen[j] = 1;
            ++total;
        }
    }
    if (total != p) throw DataError("groups do not cover every column");
}

LossGrad logistic_loss_grad(const ModelWeights& weights, const Matrix& X, std::span<const int> y) {
    check_shapes(X, y);
    return Smooth(X, y, Loss::logistic, 0.0).eval(weights.w, weights.c);
}

LossGrad ridge_logistic_loss_grad(const ModelWeights& weights, const Matrix& X, std::span<const int> y,
                                  double alpha) {
    check_shapes(X, y);
    return Smooth(X, y, Loss::logistic, alpha).eval(weights.w, weights.c);
}

LossGrad squared_hinge_loss_grad(const ModelWeights& weights, const Matrix& X, std::span<const int> y,
                                 double alpha) {
    check_shapes(X, y);
    return Smooth(X, y, Loss::squared_hinge, alpha).eval(weights.w, weights.c);
}

double soft_threshold(double v, double t) {
    const double m = std::abs(v) - t;
    if (m <= 0.0) return 0.0;
    return v > 0 ? m : -m;
}

Vector block_soft_threshold(const Vector& v, double t) {
    if (v.size() == 1) return Vector::Constant(1, soft_threshold(v(0), t));
    const double n = v.norm();
    if (n <= t) return Vector::Zero(v.size());
    return v * (1.0 - t / n);
}

double l1_objective(const ModelWeights& weights, const Matrix& X, std::span<const int> y, double alpha) {
    check_shapes(X, y);
    return Smooth(X, y, Loss::logistic, 0.0).value(weights.w, weights.c) + alpha * weights.w.lpNorm<1>();
}

double group_objective(const ModelWeights& weights, const Matrix& X, std::span<const int> y,
                       const GroupStructure& groups, double alpha) {
    check_shapes(X, y);
    return Smooth(X, y, Loss::logistic, 0.0).value(weights.w, weights.c) +
           Penalty::group(alpha, groups).value(weights.w);
}

double l1_kkt_residual(const ModelWeights& weights, const Matrix& X, std::span<const int> y, double alpha) {
    const LossGrad g = logistic_loss_grad(weights, X, y);
    return Penalty::l1(alpha).residual(weights.w, g);
}

double intercept_only(std::span<const int> y) {
    const double pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
    const double neg = static_cast<double>(y.size()) - pos;
    if (pos == 0 || neg == 0) throw DataError("both classes must be present");
    return std::log(pos / neg);
}

double compute_alpha_max(const Matrix& X, std::span<const int> y, bool standardize) {
    check_shapes(X, y);
    if (standardize) return compute_alpha_max(Centered(X, true).X, y, false);
    const LossGrad g = logistic_loss_grad(zero_start(X, y), X, y);
    return g.grad_w.size() ? g.grad_w.lpNorm<Eigen::Infinity>() : 0.0;
}

SolveResult solve_l1_logistic(const Matrix& X, std::span<const int> y, const SolverConfig& cfg) {
    check_inputs(X, y, cfg);
    const Centered cx(X, cfg.standardize);
    Smooth f(cx.X, y, Loss::logistic, 0.0);
    return cx.restore(proximal_gradient(f, Penalty::l1(cfg.alpha), cfg, zero_start(X, y)));
}

SolveResult solve_group_logistic(const Matrix& X, std::span<const int> y, const GroupStructure& groups,
                                 const SolverConfig& cfg) {
    check_inputs(X, y, cfg);
    groups.validate(static_cast<Index>(X.cols()));
    const Centered cx(X, cfg.standardize);
    Smooth f(cx.X, y, Loss::logistic, 0.0);
    return cx.restore(proximal_gradient(f, Penalty::group(cfg.alpha, groups), cfg, zero_start(X, y)));
}

SolveResult solve_l2_logistic(const Matrix& X, std::span<const int> y, const SolverConfig& cfg) {
    check_inputs(X, y, cfg);
    const Centered cx(X, cfg.standardize);
    Smooth f(cx.X, y, Loss::logistic, cfg.alpha);
    return cx.restore(accelerated_gradient(f, cfg, zero_start(X, y)));
}

SolveResult solve_l2_svm(const Matrix& X, std::span<const int> y, const SolverConfig& cfg) {
    check_inputs(X, y, cfg);
    const Centered cx(X, cfg.standardize);
    Smooth f(cx.X, y, Loss::squared_hinge, cfg.alpha);
    return cx.restore(accelerated_gradient(f, cfg, ModelWeights{Vector::Zero(X.cols()), 0.0}));
}

TTestResult two_sample_ttest(const Matrix& X, std::span<const int> y) {
    check_shapes(X, y);
    const auto n_pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
    const auto n_neg = static_cast<double>(y.size()) - n_pos;
    if (n_pos < 2 || n_neg < 2) throw DataError("t test needs at least 2 samples per class");
    const double dof = n_pos + n_neg - 2.0;
    const boost::math::students_t dist(dof);

    TTestResult out{Vector(X.cols()), Vector(X.cols())};
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        // Shift by the first value so constant columns cancel exactly.
        const double shift = X(0, j);
        double sp = 0, sn = 0;
        for (Eigen::Index i = 0; i < X.rows(); ++i) (y[static_cast<std::size_t>(i)] == 1 ? sp : sn) += X(i, j) - shift;
        const double mp = sp / n_pos, mn = sn / n_neg;
        double ss = 0;
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            const double d = X(i, j) - shift - (y[static_cast<std::size_t>(i)] == 1 ? mp : mn);
            ss += d * d;
        }
        const double diff = mp - mn;
        const double var = ss / dof;
        if (var == 0.0) {
            out.t(j) = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
            out.p(j) = diff == 0.0 ? 1.0 : 0.0;
            continue;
        }
        const double t = diff / std::sqrt(var * (1.0 / n_pos + 1.0 / n_neg));
        out.t(j) = t;
        out.p(j) = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
    }
    return out;
}

}  // namespace rss
