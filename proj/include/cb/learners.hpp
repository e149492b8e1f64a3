#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cb/errors.hpp"
#include "cb/text.hpp"

namespace cb {

enum class LossMode { logistic, squared };

inline const char* loss_mode_name(LossMode m) {
    return m == LossMode::logistic ? "logistic" : "squared";
}

// Online linear model trained one gradient step at a time:
//   p = predict(x), g = p - y
//   w <- w - eta * (g * x + l2 * w)
//   b <- b - eta * g
// logistic mode predicts sigma(w.x + b), squared mode predicts w.x + b.
// Weights and bias start at exactly zero.
class SgdLinear {
public:
    SgdLinear(std::size_t n_features, LossMode mode, double eta = 0.01, double l2 = 1e-4)
        : weights_(n_features, 0.0), eta_(eta), l2_(l2), mode_(mode) {
        if (n_features < 1) throw arity_error("n_features must be >= 1");
        if (!(eta >= 0.0) || !std::isfinite(eta))
            throw config_error("learning rate must be non-negative and finite");
        if (!(l2 >= 0.0) || !std::isfinite(l2))
            throw config_error("l2 strength must be non-negative and finite");
    }

    double predict(std::span<const double> x) const {
        check_arity(x.size());
        double z = bias_;
        for (std::size_t i = 0; i < x.size(); ++i) z += weights_[i] * x[i];
        if (mode_ == LossMode::logistic) return 1.0 / (1.0 + std::exp(-z));
        return z;
    }

    // One step per call, in call order. `position` tags overflow errors with
    // the offending record.
    void partial_fit(std::span<const double> x, double y, std::int64_t position = -1) {
        check_arity(x.size());
        if (mode_ == LossMode::logistic) {
            if (y != 0.0 && y != 1.0)
                throw schema_error("logistic target must be 0 or 1, got " + detail::fmt17(y));
        } else if (!std::isfinite(y)) {
            throw schema_error("squared target must be finite");
        }
        const double g = predict(x) - y;
        for (std::size_t i = 0; i < x.size(); ++i)
            weights_[i] -= eta_ * (g * x[i] + l2_ * weights_[i]);
        bias_ -= eta_ * g;
        for (const double w : weights_)
            if (!std::isfinite(w)) throw numeric_error("weight overflow after update", position);
        if (!std::isfinite(bias_)) throw numeric_error("bias overflow after update", position);
    }

    std::size_t n_features() const { return weights_.size(); }
    LossMode mode() const { return mode_; }
    double eta() const { return eta_; }
    double l2() const { return l2_; }
    double bias() const { return bias_; }
    const std::vector<double>& weights() const { return weights_; }

    // One plain-text line: mode eta l2 bias w0 w1 ...
    std::string export_state() const {
        std::string out = loss_mode_name(mode_);
        out += ' ';
        out += detail::fmt17(eta_);
        out += ' ';
        out += detail::fmt17(l2_);
        out += ' ';
        out += detail::fmt17(bias_);
        for (const double w : weights_) {
            out += ' ';
            out += detail::fmt17(w);
        }
        return out;
    }

    static SgdLinear import_state(const std::string& line) {
        const auto tokens = detail::split(std::string(detail::trim(line)), ' ');
        if (tokens.size() < 5) throw parse_error("model state needs 'mode eta l2 bias w...'", 1);
        LossMode mode;
        if (tokens[0] == "logistic")
            mode = LossMode::logistic;
        else if (tokens[0] == "squared")
            mode = LossMode::squared;
        else
            throw parse_error("unknown loss mode '" + tokens[0] + "'", 1);
        double eta = 0, l2 = 0, bias = 0;
        if (!detail::parse_double(tokens[1], eta) || !detail::parse_double(tokens[2], l2) ||
            !detail::parse_double(tokens[3], bias))
            throw parse_error("bad numeric field in model state", 1);
        SgdLinear model(tokens.size() - 4, mode, eta, l2);
        model.bias_ = bias;
        for (std::size_t i = 4; i < tokens.size(); ++i)
            if (!detail::parse_double(tokens[i], model.weights_[i - 4]))
                throw parse_error("bad weight in model state", 1);
        return model;
    }

private:
    void check_arity(std::size_t n) const {
        if (n != weights_.size())
            throw arity_error("input has " + std::to_string(n) + " features, model expects " +
                              std::to_string(weights_.size()));
    }

    std::vector<double> weights_;
    double bias_ = 0.0;
    double eta_;
    double l2_;
    LossMode mode_;
};

struct TreeParams {
    int max_depth = 10;
    int min_samples_split = 2;
};

enum class TreeTask { classify, regress };

// CART, greedy induction. Gini impurity for classification, variance for
// regression. Candidate thresholds are midpoints of consecutive sorted
// distinct feature values; ties break on lowest feature index, then lowest
// threshold. Descent rule: x[feature] <= threshold goes left.
class DecisionTree {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        double value = 0.0;  // leaf prediction: majority class or mean target
        int left = -1;
        int right = -1;
        bool is_leaf() const { return feature < 0; }
    };

    static DecisionTree fit(const std::vector<std::vector<double>>& x,
                            const std::vector<double>& y, TreeTask task,
                            TreeParams params = {}) {
        if (x.empty() || x.size() != y.size())
            throw arity_error("tree_fit needs a non-empty, aligned training set");
        const std::size_t arity = x[0].size();
        for (const auto& row : x)
            if (row.size() != arity) throw arity_error("inconsistent feature arity");
        DecisionTree tree;
        tree.arity_ = arity;
        tree.task_ = task;
        std::vector<std::size_t> idx(x.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        tree.build(x, y, idx, 0, params);
        return tree;
    }

    double predict(std::span<const double> x) const {
        if (x.size() != arity_)
            throw arity_error("input has " + std::to_string(x.size()) +
                              " features, tree expects " + std::to_string(arity_));
        int node = 0;
        while (!nodes_[static_cast<std::size_t>(node)].is_leaf()) {
            const Node& n = nodes_[static_cast<std::size_t>(node)];
            node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
        return nodes_[static_cast<std::size_t>(node)].value;
    }

    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& root() const { return nodes_[0]; }
    std::size_t arity() const { return arity_; }
    TreeTask task() const { return task_; }

private:
    // Impurity of a target multiset: Gini for classification, variance for
    // regression.
    static double impurity(const std::vector<double>& y, const std::vector<std::size_t>& idx,
                           TreeTask task) {
        const double n = static_cast<double>(idx.size());
        if (task == TreeTask::classify) {
            std::map<double, std::size_t> counts;
            for (const std::size_t i : idx) ++counts[y[i]];
            double gini = 1.0;
            for (const auto& [cls, cnt] : counts) {
                const double p = static_cast<double>(cnt) / n;
                gini -= p * p;
            }
            return gini;
        }
        double mean = 0.0;
        for (const std::size_t i : idx) mean += y[i];
        mean /= n;
        double var = 0.0;
        for (const std::size_t i : idx) var += (y[i] - mean) * (y[i] - mean);
        return var / n;
    }

    static double leaf_value(const std::vector<double>& y, const std::vector<std::size_t>& idx,
                             TreeTask task) {
        if (task == TreeTask::classify) {
            // majority class; ties resolve to the smaller class value (map is ordered)
            std::map<double, std::size_t> counts;
            for (const std::size_t i : idx) ++counts[y[i]];
            double best = counts.begin()->first;
            std::size_t best_count = counts.begin()->second;
            for (const auto& [cls, cnt] : counts)
                if (cnt > best_count) {
                    best = cls;
                    best_count = cnt;
                }
            return best;
        }
        double mean = 0.0;
        for (const std::size_t i : idx) mean += y[i];
        return mean / static_cast<double>(idx.size());
    }

    int build(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
              const std::vector<std::size_t>& idx, int depth, const TreeParams& params) {
        const int me = static_cast<int>(nodes_.size());
        nodes_.emplace_back();

        const bool pure = impurity(y, idx, task_) <= 0.0;
        const bool stop = pure || depth >= params.max_depth ||
                          idx.size() < static_cast<std::size_t>(params.min_samples_split);

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_score = std::numeric_limits<double>::infinity();
        if (!stop) {
            std::vector<double> values;
            for (std::size_t f = 0; f < arity_; ++f) {
                values.clear();
                for (const std::size_t i : idx) values.push_back(x[i][f]);
                std::sort(values.begin(), values.end());
                values.erase(std::unique(values.begin(), values.end()), values.end());
                for (std::size_t v = 0; v + 1 < values.size(); ++v) {
                    const double thr = (values[v] + values[v + 1]) / 2.0;
                    std::vector<std::size_t> left, right;
                    for (const std::size_t i : idx)
                        (x[i][f] <= thr ? left : right).push_back(i);
                    const double score =
                        (static_cast<double>(left.size()) * impurity(y, left, task_) +
                         static_cast<double>(right.size()) * impurity(y, right, task_)) /
                        static_cast<double>(idx.size());
                    // strict < keeps the lowest feature index / lowest threshold on ties
                    if (score < best_score) {
                        best_score = score;
                        best_feature = static_cast<int>(f);
                        best_threshold = thr;
                    }
                }
            }
        }

        if (best_feature < 0) {  // stopped, or no feature has two distinct values
            nodes_[static_cast<std::size_t>(me)].value = leaf_value(y, idx, task_);
            return me;
        }

        std::vector<std::size_t> left, right;
        for (const std::size_t i : idx)
            (x[i][static_cast<std::size_t>(best_feature)] <= best_threshold ? left : right)
                .push_back(i);
        const int l = build(x, y, left, depth + 1, params);
        const int r = build(x, y, right, depth + 1, params);
        Node& n = nodes_[static_cast<std::size_t>(me)];
        n.feature = best_feature;
        n.threshold = best_threshold;
        n.left = l;
        n.right = r;
        return me;
    }

    std::vector<Node> nodes_;
    std::size_t arity_ = 0;
    TreeTask task_ = TreeTask::classify;
};

// Ordinary least squares via normal equations on [X | 1]; a ridge jitter of
// 1e-8 on the diagonal keeps the system solvable for degenerate designs.
struct OlsModel {
    std::vector<double> coefficients;
    double intercept = 0.0;

    double predict(std::span<const double> x) const {
        if (x.size() != coefficients.size())
            throw arity_error("input has " + std::to_string(x.size()) +
                              " features, model expects " +
                              std::to_string(coefficients.size()));
        double z = intercept;
        for (std::size_t i = 0; i < x.size(); ++i) z += coefficients[i] * x[i];
        return z;
    }
};

inline OlsModel ols_fit(const std::vector<std::vector<double>>& x,
                        const std::vector<double>& y) {
    if (x.empty() || x.size() != y.size())
        throw arity_error("ols_fit needs a non-empty, aligned training set");
    const std::size_t d = x[0].size();
    for (const auto& row : x)
        if (row.size() != d) throw arity_error("inconsistent feature arity");

    const std::size_t m = d + 1;  // augmented with the intercept column
    std::vector<double> a(m * m, 0.0);
    std::vector<double> rhs(m, 0.0);
    for (std::size_t r = 0; r < x.size(); ++r) {
        for (std::size_t i = 0; i < m; ++i) {
            const double xi = i < d ? x[r][i] : 1.0;
            rhs[i] += xi * y[r];
            for (std::size_t j = 0; j < m; ++j) {
                const double xj = j < d ? x[r][j] : 1.0;
                a[i * m + j] += xi * xj;
            }
        }
    }
    for (std::size_t i = 0; i < m; ++i) a[i * m + i] += 1e-8;

    // Gaussian elimination with partial pivoting; dimensions here are tiny.
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::abs(a[r * m + col]) > std::abs(a[pivot * m + col])) pivot = r;
        if (pivot != col) {
            for (std::size_t j = 0; j < m; ++j) std::swap(a[col * m + j], a[pivot * m + j]);
            std::swap(rhs[col], rhs[pivot]);
        }
        const double diag = a[col * m + col];
        for (std::size_t r = col + 1; r < m; ++r) {
            const double factor = a[r * m + col] / diag;
            for (std::size_t j = col; j < m; ++j) a[r * m + j] -= factor * a[col * m + j];
            rhs[r] -= factor * rhs[col];
        }
    }
    std::vector<double> beta(m, 0.0);
    for (std::size_t i = m; i-- > 0;) {
        double v = rhs[i];
        for (std::size_t j = i + 1; j < m; ++j) v -= a[i * m + j] * beta[j];
        beta[i] = v / a[i * m + i];
    }

    OlsModel model;
    model.coefficients.assign(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(d));
    model.intercept = beta[d];
    for (const double c : beta)
        if (!std::isfinite(c)) throw numeric_error("ols solution is not finite");
    return model;
}

}  // namespace cb
