#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <vector>

namespace vandisc::bsde {

// Least-squares projection onto polynomials of total degree <= degree in the
// standardized regressors. Regressor columns that are constant across rows
// are dropped; the degree is lowered until the Gram matrix is well
// conditioned (eigenvalue ratio >= kConditionFloor).
class Regression {
public:
    static constexpr double kConditionFloor = 1e-10;
    static constexpr std::size_t kBlockRows = 1024;

    // regressors: rows x cols, row-major; must outlive the Regression.
    Regression(const double* regressors, std::size_t rows, int cols, int max_degree, bool parallel);

    int degree() const { return degree_; }
    int requested_degree() const { return requested_degree_; }
    std::size_t basis_size() const { return static_cast<std::size_t>(monomials_.size()); }
    std::size_t rows() const { return rows_; }
    // Regressor columns that vary across rows.
    std::size_t varying_columns() const { return kept_.size(); }

    // Coefficients for one target column; an exactly constant target yields
    // that constant back at every point.
    struct Fit {
        Eigen::VectorXd coef;
        std::optional<double> constant;
    };
    Fit fit(const double* targets, std::size_t stride) const;
    double predict(const Fit& fit, std::size_t row) const;
    // Evaluates at an arbitrary regressor vector of the original columns.
    double predict_at(const Fit& fit, const double* regressor) const;

    // Standardization and basis, detached from the regressor storage.
    struct Model {
        std::vector<int> kept_columns;
        std::vector<double> mean;
        std::vector<double> scale;
        std::vector<std::vector<int>> monomials;
        std::vector<Fit> fits;
        double evaluate(std::size_t target, const double* regressor) const;
    };
    Model model(std::vector<Fit> fits) const;

private:
    void build_basis(int degree);
    void fill_row(const double* regressor, double* out) const;
    Eigen::MatrixXd gram() const;

    const double* regressors_;
    std::size_t rows_;
    int cols_;
    bool parallel_;
    int requested_degree_;
    int degree_ = 0;
    std::vector<int> kept_;
    std::vector<double> mean_;
    std::vector<double> scale_;
    std::vector<std::vector<int>> monomials_;  // exponent per kept column
    Eigen::MatrixXd design_;                  // rows x basis, row-major semantics via transpose storage
    Eigen::LDLT<Eigen::MatrixXd> solver_;
};

}  // namespace vandisc::bsde
