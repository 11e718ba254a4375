#include "vandisc/regression.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vandisc::bsde {
namespace {

void enumerate_monomials(int vars, int degree, std::vector<std::vector<int>>& out)
{
    out.clear();
    std::vector<int> exponents(static_cast<std::size_t>(vars), 0);
    for (int total = 0; total <= degree; ++total) {
        // All exponent vectors with the given total, in lexicographic order.
        auto recurse = [&](auto&& self, int var, int remaining) -> void {
            if (var == vars - 1) {
                exponents[static_cast<std::size_t>(var)] = remaining;
                out.push_back(exponents);
                return;
            }
            for (int e = remaining; e >= 0; --e) {
                exponents[static_cast<std::size_t>(var)] = e;
                self(self, var + 1, remaining - e);
            }
        };
        if (vars == 0) {
            if (total == 0)
                out.push_back({});
            continue;
        }
        recurse(recurse, 0, total);
    }
}

double monomial_value(const std::vector<int>& exponents, const double* standardized)
{
    double value = 1.0;
    for (std::size_t c = 0; c < exponents.size(); ++c)
        for (int e = 0; e < exponents[c]; ++e)
            value *= standardized[c];
    return value;
}

}  // namespace

Regression::Regression(const double* regressors, std::size_t rows, int cols, int max_degree, bool parallel)
    : regressors_(regressors), rows_(rows), cols_(cols), parallel_(parallel), requested_degree_(max_degree)
{
    if (rows == 0)
        throw std::invalid_argument("regression needs at least one row");
    if (max_degree < 0 || max_degree > 8)
        throw std::invalid_argument("regression degree must be between 0 and 8");
    if (cols < 0 || cols > 16)
        throw std::invalid_argument("regression supports at most 16 regressor columns");

    // Column statistics in fixed row order.
    for (int c = 0; c < cols_; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < rows_; ++r)
            sum += regressors_[r * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c)];
        const double mean = sum / static_cast<double>(rows_);
        double sq = 0.0;
        for (std::size_t r = 0; r < rows_; ++r) {
            const double dv = regressors_[r * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c)] - mean;
            sq += dv * dv;
        }
        const double sd = std::sqrt(sq / static_cast<double>(rows_));
        if (sd > 1e-12 * std::max(1.0, std::abs(mean))) {
            kept_.push_back(c);
            mean_.push_back(mean);
            scale_.push_back(sd);
        }
    }

    for (int degree = kept_.empty() ? 0 : max_degree; degree >= 0; --degree) {
        build_basis(degree);
        const Eigen::MatrixXd g = gram();
        if (g.rows() > 1) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g, Eigen::EigenvaluesOnly);
            const double lo = eig.eigenvalues().minCoeff();
            const double hi = eig.eigenvalues().maxCoeff();
            if (!(lo > kConditionFloor * hi))
                continue;
        }
        degree_ = degree;
        solver_.compute(g);
        return;
    }
    throw std::runtime_error("regression failed even at degree 0");
}

void Regression::build_basis(int degree)
{
    enumerate_monomials(static_cast<int>(kept_.size()), degree, monomials_);
    const auto p = static_cast<Eigen::Index>(monomials_.size());
    design_.resize(p, static_cast<Eigen::Index>(rows_));
    auto fill = [&](std::size_t r) {
        fill_row(regressors_ + r * static_cast<std::size_t>(cols_), design_.col(static_cast<Eigen::Index>(r)).data());
    };
    if (parallel_) {
        const auto rows = static_cast<std::ptrdiff_t>(rows_);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t r = 0; r < rows; ++r)
            fill(static_cast<std::size_t>(r));
    } else {
        for (std::size_t r = 0; r < rows_; ++r)
            fill(r);
    }
}

void Regression::fill_row(const double* regressor, double* out) const
{
    double standardized[16];
    for (std::size_t c = 0; c < kept_.size(); ++c)
        standardized[c] = (regressor[kept_[c]] - mean_[c]) / scale_[c];
    for (std::size_t m = 0; m < monomials_.size(); ++m)
        out[m] = monomial_value(monomials_[m], standardized);
}

Eigen::MatrixXd Regression::gram() const
{
    const Eigen::Index p = design_.rows();
    const std::size_t blocks = (rows_ + kBlockRows - 1) / kBlockRows;
    std::vector<Eigen::MatrixXd> partial(blocks);
    auto block_gram = [&](std::size_t b) {
        const auto start = static_cast<Eigen::Index>(b * kBlockRows);
        const auto count = static_cast<Eigen::Index>(std::min(kBlockRows, rows_ - b * kBlockRows));
        const auto view = design_.middleCols(start, count);
        partial[b].noalias() = view * view.transpose();
    };
    if (parallel_) {
        const auto n = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t b = 0; b < n; ++b)
            block_gram(static_cast<std::size_t>(b));
    } else {
        for (std::size_t b = 0; b < blocks; ++b)
            block_gram(b);
    }
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(p, p);
    for (const auto& g : partial)
        total += g;
    return total / static_cast<double>(rows_);
}

Regression::Fit Regression::fit(const double* targets, std::size_t stride) const
{
    Fit result;
    const double first = targets[0];
    bool constant = true;
    for (std::size_t r = 1; r < rows_ && constant; ++r)
        constant = targets[r * stride] == first;
    if (constant) {
        result.constant = first;
        return result;
    }
    const Eigen::Index p = design_.rows();
    const std::size_t blocks = (rows_ + kBlockRows - 1) / kBlockRows;
    std::vector<Eigen::VectorXd> partial(blocks);
    auto block_rhs = [&](std::size_t b) {
        const std::size_t start = b * kBlockRows;
        const std::size_t end = std::min(rows_, start + kBlockRows);
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(p);
        for (std::size_t r = start; r < end; ++r)
            acc += design_.col(static_cast<Eigen::Index>(r)) * targets[r * stride];
        partial[b] = std::move(acc);
    };
    if (parallel_) {
        const auto n = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t b = 0; b < n; ++b)
            block_rhs(static_cast<std::size_t>(b));
    } else {
        for (std::size_t b = 0; b < blocks; ++b)
            block_rhs(b);
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    for (const auto& v : partial)
        rhs += v;
    rhs /= static_cast<double>(rows_);
    result.coef = solver_.solve(rhs);
    return result;
}

double Regression::predict(const Fit& fit, std::size_t row) const
{
    if (fit.constant)
        return *fit.constant;
    return design_.col(static_cast<Eigen::Index>(row)).dot(fit.coef);
}

double Regression::predict_at(const Fit& fit, const double* regressor) const
{
    if (fit.constant)
        return *fit.constant;
    Eigen::VectorXd phi(static_cast<Eigen::Index>(monomials_.size()));
    fill_row(regressor, phi.data());
    return phi.dot(fit.coef);
}

Regression::Model Regression::model(std::vector<Fit> fits) const
{
    return Model{kept_, mean_, scale_, monomials_, std::move(fits)};
}

double Regression::Model::evaluate(std::size_t target, const double* regressor) const
{
    const Fit& fit = fits.at(target);
    if (fit.constant)
        return *fit.constant;
    double standardized[16];
    for (std::size_t c = 0; c < kept_columns.size(); ++c)
        standardized[c] = (regressor[kept_columns[c]] - mean[c]) / scale[c];
    double value = 0.0;
    for (std::size_t m = 0; m < monomials.size(); ++m)
        value += fit.coef[static_cast<Eigen::Index>(m)] * monomial_value(monomials[m], standardized);
    return value;
}

}  // namespace vandisc::bsde
