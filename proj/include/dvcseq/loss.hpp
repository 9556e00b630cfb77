#pragma once

// Weighted sequence negative log-likelihood over the joint text+time
// vocabulary:
//
//   loss = -(sum_k w_k * log p(z_{k+1} | z_{1..k})) / (sum_k w_k)
//
// where row k of the log-probability matrix is the model's prediction after
// reading the first k+1 target tokens. Natural log.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dvcseq/domain.hpp"
#include "dvcseq/error.hpp"

namespace dvcseq {

class LogProbMatrix {
public:
    LogProbMatrix() = default;

    LogProbMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            fail(ErrorKind::invalid_input, "log-prob matrix data does not match " + std::to_string(rows_) + "x" +
                                               std::to_string(cols_));
        }
    }

    LogProbMatrix(std::size_t rows, std::size_t cols, double fill)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    const std::vector<double>& data() const { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double logsumexp(std::span<const double> xs) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double x : xs) hi = std::max(hi, x);
    if (!std::isfinite(hi)) return hi;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - hi);
    return hi + std::log(acc);
}

// Throws invalid_input if any row's probabilities do not sum to 1 within tol.
inline void check_row_normalization(const LogProbMatrix& m, double tol = 1e-6) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double lse = logsumexp(m.row(r));
        if (!(std::abs(std::expm1(lse)) <= tol)) {
            fail(ErrorKind::invalid_input, "log-prob row " + std::to_string(r) + " is not normalized");
        }
    }
}

inline std::vector<double> unit_weights(std::size_t n) { return std::vector<double>(n, 1.0); }

struct LossOptions {
#ifdef NDEBUG
    bool check_rows = false;
#else
    bool check_rows = true;
#endif
};

inline double sequence_nll(std::span<const TokenId> target, const LogProbMatrix& logprobs,
                           std::span<const double> weights, LossOptions opts = {}) {
    if (target.size() < 2) fail(ErrorKind::invalid_input, "target needs at least two tokens");
    const std::size_t steps = target.size() - 1;
    if (logprobs.rows() != steps) {
        fail(ErrorKind::invalid_input, "expected " + std::to_string(steps) + " log-prob rows, got " +
                                           std::to_string(logprobs.rows()));
    }
    if (weights.size() != steps) {
        fail(ErrorKind::invalid_input, "expected " + std::to_string(steps) + " weights, got " +
                                           std::to_string(weights.size()));
    }
    if (opts.check_rows) check_row_normalization(logprobs);

    double weight_sum = 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
        const double w = weights[k];
        if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorKind::invalid_input, "weights must be finite and nonnegative");
        const TokenId next = target[k + 1];
        if (next < 0 || static_cast<std::size_t>(next) >= logprobs.cols()) {
            fail(ErrorKind::invalid_token, "target id " + std::to_string(next) + " outside vocabulary");
        }
        weight_sum += w;
        if (w > 0.0) acc += w * logprobs(k, static_cast<std::size_t>(next));
    }
    if (weight_sum <= 0.0) fail(ErrorKind::invalid_input, "weights must not all be zero");
    // -0.0 -> 0.0 for the perfect-prediction case.
    return acc == 0.0 ? 0.0 : -acc / weight_sum;
}

}  // namespace dvcseq
