#include "uprop/nonlinearity.hpp"

#include <cmath>
#include <stdexcept>

namespace uprop {

JacobianPolyMatrix map_jacobian(const std::vector<TaylorPoly>& map,
                                const Eigen::VectorXd& beta) {
    if (map.empty()) throw std::invalid_argument("map_jacobian: empty map");
    const int n = map[0].nvars();
    if (beta.size() != n) {
        throw std::invalid_argument("map_jacobian: beta length must equal nvars");
    }
    for (int j = 0; j < n; ++j) {
        if (!(beta[j] > 0.0)) {
            throw std::invalid_argument("map_jacobian: zero or negative beta component");
        }
    }
    JacobianPolyMatrix jac;
    jac.rows = static_cast<int>(map.size());
    jac.cols = n;
    jac.entries.reserve(static_cast<std::size_t>(jac.rows) * n);
    for (const auto& component : map) {
        for (int j = 0; j < n; ++j) {
            jac.entries.push_back((component.partial(j) / beta[j]).truncated(1));
        }
    }
    return jac;
}

NliBreakdown nli_full(const std::vector<TaylorPoly>& map, const Eigen::VectorXd& beta) {
    const JacobianPolyMatrix jac = map_jacobian(map, beta);
    const int n = jac.cols;
    NliBreakdown out;
    out.direction_scores = Eigen::VectorXd::Zero(n);
    double jbar_sq = 0.0;
    double bound_sq = 0.0;
    std::vector<int> e(n, 0);
    for (const auto& entry : jac.entries) {
        const double c0 = entry.constant_part();
        jbar_sq += c0 * c0;
        double bound = 0.0;
        for (int p = 0; p < n; ++p) {
            e.assign(n, 0);
            e[p] = 1;
            const double c = std::abs(entry.coeff(e));
            bound += c;
            out.direction_scores[p] += c;
        }
        bound_sq += bound * bound;
    }
    out.jbar_norm = std::sqrt(jbar_sq);
    out.bound_norm = std::sqrt(bound_sq);
    if (out.jbar_norm == 0.0) {
        throw std::domain_error("nli: degenerate map, zero constant Jacobian");
    }
    out.nu = out.bound_norm / out.jbar_norm;
    return out;
}

double nli(const std::vector<TaylorPoly>& map, const Eigen::VectorXd& beta) {
    return nli_full(map, beta).nu;
}

}  // namespace uprop
