#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mte/common.hpp"

namespace mte {

struct LeastSquares {
    Eigen::VectorXd coef;
    Eigen::VectorXd fitted;
    Eigen::VectorXd residuals;
    double rss = 0.0;
    Eigen::Index rank = 0;
};

// Pivoted-QR least squares. With `names` supplied, rank deficiency raises a
// RankError listing the dependent columns; with allow_deficient the
// minimum-norm solution is returned instead.
inline LeastSquares lstsq(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                          const std::vector<std::string>* names = nullptr,
                          bool allow_deficient = false) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    LeastSquares out;
    out.rank = qr.rank();
    if (out.rank < design.cols() && !allow_deficient) {
        std::string cols;
        const auto perm = qr.colsPermutation().indices();
        for (Eigen::Index k = out.rank; k < design.cols(); ++k) {
            if (!cols.empty()) cols += ", ";
            cols += names ? (*names)[static_cast<std::size_t>(perm[k])]
                          : ("col" + std::to_string(perm[k]));
        }
        throw RankError("least squares: design is rank deficient; collinear columns: " + cols);
    }
    out.coef = qr.solve(y);
    out.fitted = design * out.coef;
    out.residuals = y - out.fitted;
    out.rss = out.residuals.squaredNorm();
    return out;
}

}  // namespace mte
