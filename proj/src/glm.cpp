#include "countycast/glm.hpp"

#include <cmath>
#include <stdexcept>

namespace countycast {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw std::runtime_error(std::string(what) + " contains NaN or infinity");
}

// Greedy rank filter preferring earlier columns, so the intercept (column 0
// of the augmented design) always survives. Returns kept column indices.
std::vector<int> independent_columns(const Eigen::MatrixXd& A, double rel_tol = 1e-10) {
    const int n = static_cast<int>(A.rows());
    const int p = static_cast<int>(A.cols());
    std::vector<int> kept;
    Eigen::MatrixXd basis(n, p); // orthonormal columns of the kept span
    int r = 0;
    for (int j = 0; j < p; ++j) {
        Eigen::VectorXd v = A.col(j);
        const double norm0 = v.norm();
        if (r > 0) v -= basis.leftCols(r) * (basis.leftCols(r).transpose() * v);
        if (norm0 == 0.0 || v.norm() <= rel_tol * std::max(norm0, 1.0)) continue;
        basis.col(r) = v / v.norm();
        kept.push_back(j);
        ++r;
    }
    return kept;
}

} // namespace

Eigen::VectorXd Standardization::apply_row(const Eigen::VectorXd& x) const {
    Eigen::VectorXd z(x.size());
    for (int j = 0; j < x.size(); ++j) z[j] = apply(j, x[j]);
    return z;
}

std::pair<DesignMatrix, Standardization> standardize(const DesignMatrix& X) {
    require_finite(X.values, "design matrix");
    const int n = X.rows();
    const int p = X.cols();
    Standardization stz;
    stz.mean.resize(p);
    stz.sd.resize(p);
    stz.constant.assign(static_cast<size_t>(p), 0);

    DesignMatrix Z = X;
    for (int j = 0; j < p; ++j) {
        const double mean = n > 0 ? X.values.col(j).mean() : 0.0;
        double ss = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = X.values(i, j) - mean;
            ss += d * d;
        }
        const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
        stz.mean[j] = mean;
        if (sd > 0.0) {
            stz.sd[j] = sd;
            Z.values.col(j) = (X.values.col(j).array() - mean) / sd;
        } else {
            stz.sd[j] = 1.0;
            stz.constant[static_cast<size_t>(j)] = 1;
            Z.values.col(j).setZero();
        }
    }
    return {std::move(Z), std::move(stz)};
}

double poisson_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
    double dev = 0.0;
    for (int i = 0; i < y.size(); ++i) {
        double term = mu[i] - y[i];
        if (y[i] > 0.0) term += y[i] * std::log(y[i] / mu[i]);
        dev += 2.0 * term;
    }
    return dev;
}

GlmFit fit_poisson_glm(const DesignMatrix& X, const Eigen::VectorXd& y,
                       const FitConfig& config) {
    require_finite(X.values, "design matrix");
    require_finite(y, "response");
    const int n = X.rows();
    const int p = X.cols();
    if (n != y.size()) throw std::runtime_error("fit_poisson_glm: row/response mismatch");
    if (y.minCoeff() < 0.0) throw std::runtime_error("fit_poisson_glm: negative response");
    if (n < p + 1) throw std::runtime_error("fit_poisson_glm: need rows >= cols + 1");

    // augmented design with intercept first
    Eigen::MatrixXd A(n, p + 1);
    A.col(0).setOnes();
    if (p > 0) A.rightCols(p) = X.values;

    GlmFit fit;
    fit.coef = Eigen::VectorXd::Zero(p);

    const std::vector<int> kept = independent_columns(A);
    const int q = static_cast<int>(kept.size());
    fit.rank_deficient = q < p + 1;
    Eigen::MatrixXd Ak(n, q);
    for (int j = 0; j < q; ++j) Ak.col(j) = A.col(kept[static_cast<size_t>(j)]);

    // ridge acts on non-intercept coefficients only
    Eigen::VectorXd ridge_diag = Eigen::VectorXd::Zero(q);
    for (int j = 0; j < q; ++j)
        if (kept[static_cast<size_t>(j)] > 0) ridge_diag[j] = config.ridge;

    auto penalized_deviance = [&](const Eigen::VectorXd& beta, const Eigen::VectorXd& mu) {
        double pen = 0.0;
        for (int j = 0; j < q; ++j) pen += ridge_diag[j] * beta[j] * beta[j];
        return poisson_deviance(y, mu) + pen;
    };

    // mu_0 = y + 0.5 keeps the first working response finite at y = 0
    Eigen::VectorXd mu = y.array() + 0.5;
    Eigen::VectorXd eta = mu.array().log();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
    double dev = penalized_deviance(beta, mu);
    bool have_beta = false;

    const double eta_clip = 690.0; // keeps exp(eta) finite during wild steps

    // augmented rows carry the ridge so one QR solves the penalized step
    const int n_ridge = config.ridge > 0.0 ? q : 0;
    Eigen::MatrixXd B(n + n_ridge, q);
    Eigen::VectorXd rhs(n + n_ridge);
    if (n_ridge > 0) {
        B.bottomRows(n_ridge).setZero();
        for (int j = 0; j < q; ++j)
            B(n + j, j) = std::sqrt(ridge_diag[j]);
        rhs.tail(n_ridge).setZero();
    }

    for (int iter = 1; iter <= config.max_iter; ++iter) {
        Eigen::VectorXd w = mu.cwiseMax(1e-12);
        Eigen::VectorXd z = eta + (y - mu).cwiseQuotient(w);
        const Eigen::VectorXd sw = w.cwiseSqrt();
        B.topRows(n) = sw.asDiagonal() * Ak;
        rhs.head(n) = sw.cwiseProduct(z);
        Eigen::VectorXd beta_new = B.householderQr().solve(rhs);
        if (!beta_new.allFinite()) {
            fit.capped = true;
            break;
        }

        // step-halving keeps the (penalized) deviance non-increasing up to an
        // ulp-scale slack, so steps near the optimum are not rejected for
        // rounding noise in the deviance
        const double dev_slack = 1e-12 * (std::abs(dev) + 1.0);
        Eigen::VectorXd candidate = beta_new;
        double new_dev = 0.0;
        bool accepted = false;
        for (int half = 0; half < 30; ++half) {
            const Eigen::VectorXd eta_c = (Ak * candidate).cwiseMin(eta_clip);
            const Eigen::VectorXd mu_c = eta_c.array().exp();
            new_dev = penalized_deviance(candidate, mu_c);
            if (std::isfinite(new_dev) && (new_dev <= dev + dev_slack || !have_beta)) {
                eta = eta_c;
                mu = mu_c;
                accepted = true;
                break;
            }
            if (!have_beta) break;
            candidate = 0.5 * (candidate + beta);
        }
        if (!accepted) {
            // no admissible step: settle for the current iterate
            Eigen::VectorXd grad = Ak.transpose() * (y - mu);
            grad -= ridge_diag.cwiseProduct(beta);
            fit.converged = grad.lpNorm<Eigen::Infinity>() < config.grad_tol;
            fit.iterations = iter;
            break;
        }
        beta = candidate;
        have_beta = true;
        dev = new_dev;
        fit.iterations = iter;
        fit.deviance_trace.push_back(dev);

        for (int j = 0; j < q; ++j) {
            if (kept[static_cast<size_t>(j)] > 0 && std::abs(beta[j]) > config.coef_cap) {
                beta[j] = beta[j] > 0 ? config.coef_cap : -config.coef_cap;
                fit.capped = true;
            }
        }
        if (fit.capped) {
            eta = (Ak * beta).cwiseMin(eta_clip);
            mu = eta.array().exp();
            dev = penalized_deviance(beta, mu);
            break;
        }

        Eigen::VectorXd grad = Ak.transpose() * (y - mu);
        grad -= ridge_diag.cwiseProduct(beta);
        if (grad.lpNorm<Eigen::Infinity>() < config.grad_tol) {
            fit.converged = true;
            break;
        }
    }

    fit.deviance = dev;
    for (int j = 0; j < q; ++j) {
        const int col = kept[static_cast<size_t>(j)];
        if (col == 0) fit.intercept = beta[j];
        else fit.coef[col - 1] = beta[j];
    }
    if (fit.capped) fit.converged = false;
    return fit;
}

OlsFit fit_ols(const DesignMatrix& X, const Eigen::VectorXd& y) {
    require_finite(X.values, "design matrix");
    require_finite(y, "response");
    const int n = X.rows();
    const int p = X.cols();
    if (n != y.size()) throw std::runtime_error("fit_ols: row/response mismatch");
    if (n < p + 1) throw std::runtime_error("fit_ols: need rows >= cols + 1");

    Eigen::MatrixXd A(n, p + 1);
    A.col(0).setOnes();
    if (p > 0) A.rightCols(p) = X.values;

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    cod.setThreshold(1e-10);
    const Eigen::VectorXd beta = cod.solve(y); // minimum-norm when rank deficient

    OlsFit fit;
    fit.intercept = beta[0];
    fit.coef = beta.tail(p);
    fit.rank_deficient = cod.rank() < p + 1;
    return fit;
}

double poisson_loglik(const DesignMatrix& X, const Eigen::VectorXd& y,
                      double intercept, const Eigen::VectorXd& coef) {
    require_finite(X.values, "design matrix");
    require_finite(y, "response");
    double ll = 0.0;
    for (int i = 0; i < y.size(); ++i) {
        const double eta = intercept + (X.cols() > 0 ? coef.dot(X.values.row(i)) : 0.0);
        ll += y[i] * eta - std::exp(eta) - std::lgamma(y[i] + 1.0);
    }
    return ll;
}

} // namespace countycast
