#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace countycast {

// Design matrix with named columns. The intercept is implicit: fitting
// routines prepend a ones column internally.
struct DesignMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> names;

    int rows() const { return static_cast<int>(values.rows()); }
    int cols() const { return static_cast<int>(values.cols()); }
};

// Per-column affine transform fitted on training rows and re-applied verbatim
// to recursively generated features. Constant columns map to zero.
struct Standardization {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd; // n-1 denominator; 1.0 stored for constant columns
    std::vector<char> constant;

    double apply(int col, double x) const {
        return constant[static_cast<size_t>(col)] ? 0.0 : (x - mean[col]) / sd[col];
    }
    Eigen::VectorXd apply_row(const Eigen::VectorXd& x) const;
};

std::pair<DesignMatrix, Standardization> standardize(const DesignMatrix& X);

struct FitConfig {
    double grad_tol = 1e-8; // infinity norm of the score
    int max_iter = 100;
    double coef_cap = 30.0; // non-intercept magnitude guard
    double ridge = 0.0;     // quadratic penalty on non-intercept coefficients
};

struct GlmFit {
    double intercept = 0.0;
    Eigen::VectorXd coef;
    bool converged = false;
    bool capped = false;         // divergence guard fired
    bool rank_deficient = false; // dependent columns dropped (coefficient 0)
    int iterations = 0;
    double deviance = 0.0;
    std::vector<double> deviance_trace;

    double eta(const Eigen::VectorXd& x) const { return intercept + coef.dot(x); }
};

// Maximizes sum_i [y_i * eta_i - exp(eta_i)] - (ridge/2)*|coef|^2 by IRLS with
// step-halving. y may be non-negative reals.
GlmFit fit_poisson_glm(const DesignMatrix& X, const Eigen::VectorXd& y,
                       const FitConfig& config = {});

struct OlsFit {
    double intercept = 0.0;
    Eigen::VectorXd coef;
    bool rank_deficient = false; // minimum-norm solution returned

    double predict(const Eigen::VectorXd& x) const { return intercept + coef.dot(x); }
};

OlsFit fit_ols(const DesignMatrix& X, const Eigen::VectorXd& y);

// sum_i [y_i eta_i - exp(eta_i) - lgamma(y_i + 1)]
double poisson_loglik(const DesignMatrix& X, const Eigen::VectorXd& y,
                      double intercept, const Eigen::VectorXd& coef);

// 2 * sum_i [y_i log(y_i/mu_i) - (y_i - mu_i)], the saturated-model gap.
double poisson_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu);

} // namespace countycast
