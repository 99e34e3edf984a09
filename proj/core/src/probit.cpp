#include "mte/probit.hpp"

#include <cmath>
#include <limits>

#include "mte/common.hpp"

namespace mte {

Eigen::VectorXd FirstStageModel::coefficients() const {
    Eigen::VectorXd out(eta.size() + delta.size());
    out << eta, delta;
    return out;
}

std::vector<std::string> FirstStageModel::coefficient_names() const {
    std::vector<std::string> out = feature_names(x_features);
    for (const auto& n : feature_names(z_features)) out.push_back(n);
    return out;
}

namespace {

void check_rank(const Eigen::MatrixXd& design, const std::vector<std::string>& names) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() == design.cols()) return;
    const auto perm = qr.colsPermutation().indices();
    std::string cols;
    for (Eigen::Index k = qr.rank(); k < design.cols(); ++k) {
        if (!cols.empty()) cols += ", ";
        cols += names[static_cast<std::size_t>(perm[k])];
    }
    throw RankError("probit: design is rank deficient; collinear columns: " + cols);
}

// Log-likelihood plus analytic score and Hessian weights. The index is
// clamped at +-35 where Phi saturates in double precision.
double probit_loglik(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& beta, Eigen::VectorXd* score,
                     Eigen::MatrixXd* neg_hessian) {
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    Eigen::VectorXd xb = design * beta;
    double ll = 0.0;
    if (score) score->setZero(p);
    if (neg_hessian) neg_hessian->setZero(p, p);
    Eigen::VectorXd w(n), s(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double q = y[i] > 0.5 ? 1.0 : -1.0;
        const double zq = std::clamp(q * xb[i], -35.0, 35.0);
        ll += log_norm_cdf(zq);
        const double lam = inv_mills(zq);
        s[i] = q * lam;
        w[i] = lam * (lam + zq);
    }
    if (score) *score = design.transpose() * s;
    if (neg_hessian) *neg_hessian = design.transpose() * w.asDiagonal() * design;
    return ll;
}

}  // namespace

FirstStageModel probit_fit(const Dataset& data, const std::vector<Feature>& x_features,
                           const std::vector<Feature>& z_features, const ProbitOptions& options) {
    std::vector<Feature> all = x_features;
    all.insert(all.end(), z_features.begin(), z_features.end());
    if (all.empty()) throw ConfigError("probit: empty design");

    const Eigen::MatrixXd design = build_design(data, all);
    if (design.rows() <= design.cols())
        throw FitError("probit: n=" + std::to_string(design.rows()) + " too small for p=" +
                       std::to_string(design.cols()));
    check_rank(design, feature_names(all));

    const auto& part = data.col("participates");
    Eigen::VectorXd y(design.rows());
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = part[static_cast<std::size_t>(i)];
    const double share = y.mean();
    if (share <= 0.0 || share >= 1.0)
        throw FitError("probit: outcome has no variation (share=" + std::to_string(share) + ")");

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(design.cols());
    Eigen::VectorXd score;
    Eigen::MatrixXd neg_hess;
    double ll = probit_loglik(design, y, beta, &score, &neg_hess);

    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        if (score.cwiseAbs().maxCoeff() < options.gradient_tol) break;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(neg_hess);
        if (ldlt.info() != Eigen::Success)
            throw FitError("probit: Hessian factorization failed at iteration " + std::to_string(iter));
        const Eigen::VectorXd step = ldlt.solve(score);
        // Likelihood differences below rounding noise count as acceptance;
        // near the optimum the predicted gain is O(grad^2) and sinks under
        // the O(eps*|ll|) evaluation noise long before the score test is met.
        const double noise = 1e-10 * (1.0 + std::abs(ll));
        double scale = 1.0;
        for (int half = 0; half < 40; ++half) {
            const Eigen::VectorXd trial = beta + scale * step;
            const double ll_trial = probit_loglik(design, y, trial, nullptr, nullptr);
            if (ll_trial >= ll - noise) {
                beta = trial;
                break;
            }
            scale *= 0.5;
        }
        ll = probit_loglik(design, y, beta, &score, &neg_hess);
        if (beta.norm() > options.divergence_norm)
            throw FitError("probit: coefficients diverging (norm " + std::to_string(beta.norm()) +
                           "); data appear perfectly separated");
    }
    if (score.cwiseAbs().maxCoeff() >= options.gradient_tol)
        throw FitError("probit: no convergence in " + std::to_string(options.max_iterations) +
                       " iterations (|grad|=" + std::to_string(score.cwiseAbs().maxCoeff()) + ")");

    // A saturated index classifies every observation perfectly and zeroes the
    // score; that is separation, not convergence.
    {
        const Eigen::VectorXd xb = design * beta;
        double worst = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < xb.size(); ++i) {
            worst = std::min(worst, (y[i] > 0.5 ? 1.0 : -1.0) * xb[i]);
        }
        if (worst > 0.0)
            throw FitError("probit: data are perfectly separated (all index signs match outcomes)");
    }

    FirstStageModel model;
    model.x_features = x_features;
    model.z_features = z_features;
    model.eta = beta.head(static_cast<Eigen::Index>(x_features.size()));
    model.delta = beta.tail(static_cast<Eigen::Index>(z_features.size()));
    model.log_likelihood = ll;
    model.iterations = iter;
    model.x_means.resize(x_features.size());
    for (std::size_t j = 0; j < x_features.size(); ++j) {
        model.x_means[j] = design.col(static_cast<Eigen::Index>(j)).mean();
    }
    return model;
}

std::vector<double> probit_index(const FirstStageModel& model, const Dataset& rows) {
    std::vector<Feature> all = model.x_features;
    all.insert(all.end(), model.z_features.begin(), model.z_features.end());
    const Eigen::MatrixXd design = build_design(rows, all);
    const Eigen::VectorXd xb = design * model.coefficients();
    return std::vector<double>(xb.data(), xb.data() + xb.size());
}

std::vector<double> probit_predict(const FirstStageModel& model, const Dataset& rows) {
    std::vector<double> f = probit_index(model, rows);
    for (double& v : f) v = std::clamp(norm_cdf(v), 1e-6, 1.0 - 1e-6);
    return f;
}

}  // namespace mte
