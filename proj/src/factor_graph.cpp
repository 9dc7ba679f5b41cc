#include "satslam/factor_graph.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

namespace satslam {

bool Estimate::covers(const FactorGraph& g) const {
    return static_cast<int>(poses.size()) == g.num_poses() &&
           static_cast<int>(landmarks.size()) == g.num_landmarks();
}

VariableKey FactorGraph::add_pose_variable(const Pose& init) {
    VariableKey k = pose_key(num_poses());
    pose_inits_.push_back(init);
    order_.push_back(k);
    return k;
}

VariableKey FactorGraph::add_landmark_variable(const Vec3& init) {
    VariableKey k = landmark_key(num_landmarks());
    landmark_inits_.push_back(init);
    order_.push_back(k);
    return k;
}

bool FactorGraph::has(VariableKey k) const {
    const int count = k.kind == VarKind::Pose ? num_poses() : num_landmarks();
    return k.index >= 0 && k.index < count;
}

void FactorGraph::add_prior(PriorFactor f) {
    if (!has(f.key) || f.key.kind != VarKind::Pose) {
        throw StructuralError("add_prior: unknown pose key");
    }
    factors_.push_back(std::move(f));
}

void FactorGraph::add_projection(ProjectionFactor f) {
    if (!has(f.pose_key) || f.pose_key.kind != VarKind::Pose) {
        throw StructuralError("add_projection: unknown pose key");
    }
    if (!has(f.landmark_key) || f.landmark_key.kind != VarKind::Landmark) {
        throw StructuralError("add_projection: unknown landmark key");
    }
    if (!f.intrinsics) {
        throw StructuralError("add_projection: missing intrinsics");
    }
    factors_.push_back(std::move(f));
}

int FactorGraph::residual_dim() const {
    int n = 0;
    for (const Factor& f : factors_) {
        n += std::holds_alternative<PriorFactor>(f) ? 6 : 2;
    }
    return n;
}

Estimate FactorGraph::initial_estimate() const {
    return Estimate{pose_inits_, landmark_inits_};
}

std::vector<VariableKey> FactorGraph::weakly_constrained_landmarks() const {
    std::vector<int> counts(static_cast<std::size_t>(num_landmarks()), 0);
    for (const Factor& f : factors_) {
        if (const auto* proj = std::get_if<ProjectionFactor>(&f)) {
            ++counts[static_cast<std::size_t>(proj->landmark_key.index)];
        }
    }
    std::vector<VariableKey> out;
    for (int i = 0; i < num_landmarks(); ++i) {
        if (counts[static_cast<std::size_t>(i)] < 2) {
            out.push_back(landmark_key(i));
        }
    }
    return out;
}

int LinearSystem::column_offset_of(VariableKey k) const {
    for (std::size_t i = 0; i < column_order.size(); ++i) {
        if (column_order[i] == k) {
            return column_offsets[i];
        }
    }
    throw StructuralError("column_offset_of: key not in linear system");
}

namespace {

// Column offsets in variable insertion order, with O(1) key lookup.
struct ColumnIndex {
    std::vector<int> pose_cols;
    std::vector<int> landmark_cols;

    explicit ColumnIndex(const FactorGraph& g) {
        pose_cols.assign(static_cast<std::size_t>(g.num_poses()), -1);
        landmark_cols.assign(static_cast<std::size_t>(g.num_landmarks()), -1);
        int col = 0;
        for (VariableKey k : g.variable_order()) {
            if (k.kind == VarKind::Pose) {
                pose_cols[static_cast<std::size_t>(k.index)] = col;
                col += 6;
            } else {
                landmark_cols[static_cast<std::size_t>(k.index)] = col;
                col += 3;
            }
        }
    }

    int of(VariableKey k) const {
        return k.kind == VarKind::Pose ? pose_cols[static_cast<std::size_t>(k.index)]
                                       : landmark_cols[static_cast<std::size_t>(k.index)];
    }
};

template <int N>
Eigen::Matrix<double, N, N> whitener(const Eigen::Matrix<double, N, N>& sigma) {
    Eigen::LLT<Eigen::Matrix<double, N, N>> llt(sigma);
    return llt.matrixL();
}

} // namespace

LinearSystem linearize(const FactorGraph& g, const Estimate& e) {
    if (!e.covers(g)) {
        throw StructuralError("linearize: estimate does not cover the graph");
    }

    const ColumnIndex cols(g);
    LinearSystem ls;
    ls.column_order = g.variable_order();
    ls.column_offsets.reserve(ls.column_order.size());
    for (VariableKey k : ls.column_order) {
        ls.column_offsets.push_back(cols.of(k));
    }

    const int rows = g.residual_dim();
    ls.residual = Eigen::VectorXd::Zero(rows);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(rows) * 9);

    int row = 0;
    for (const Factor& f : g.factors()) {
        if (const auto* prior = std::get_if<PriorFactor>(&f)) {
            const Pose& est = e.pose(prior->key);
            const Vec6 raw = se3_local(prior->prior_pose, est);

            Mat6 jac = Mat6::Zero();
            jac.topLeftCorner<3, 3>() = so3_right_jacobian_inverse(raw.head<3>());
            jac.bottomRightCorner<3, 3>() = Mat3::Identity();

            const Eigen::Matrix<double, 6, 6> chol = whitener<6>(prior->sigma_p);
            const Vec6 wr = chol.triangularView<Eigen::Lower>().solve(raw);
            const Mat6 wj = chol.triangularView<Eigen::Lower>().solve(jac);

            ls.residual.segment<6>(row) = wr;
            const int c = cols.of(prior->key);
            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 6; ++j) {
                    if (wj(i, j) != 0.0) {
                        triplets.emplace_back(row + i, c + j, wj(i, j));
                    }
                }
            }
            row += 6;
        } else {
            const auto& proj = std::get<ProjectionFactor>(f);
            const Pose& pose = e.pose(proj.pose_key);
            const Vec3& lm = e.landmark(proj.landmark_key);
            try {
                const Vec2 predicted = project(pose, lm, *proj.intrinsics);
                const auto [j_pose, j_lm] = project_jacobians(pose, lm, *proj.intrinsics);

                const Mat2 chol = whitener<2>(proj.sigma_v);
                const Vec2 wr = chol.triangularView<Eigen::Lower>().solve(Vec2(predicted - proj.z));
                const Eigen::Matrix<double, 2, 6> wjp =
                    chol.triangularView<Eigen::Lower>().solve(j_pose);
                const Eigen::Matrix<double, 2, 3> wjl =
                    chol.triangularView<Eigen::Lower>().solve(j_lm);

                ls.residual.segment<2>(row) = wr;
                const int cp = cols.of(proj.pose_key);
                const int cl = cols.of(proj.landmark_key);
                for (int i = 0; i < 2; ++i) {
                    for (int j = 0; j < 6; ++j) {
                        triplets.emplace_back(row + i, cp + j, wjp(i, j));
                    }
                    for (int j = 0; j < 3; ++j) {
                        triplets.emplace_back(row + i, cl + j, wjl(i, j));
                    }
                }
            } catch (const BehindCameraError&) {
                ++ls.skipped_factors;  // rows stay zero
            }
            row += 2;
        }
    }

    ls.jacobian.resize(rows, g.tangent_dim());
    ls.jacobian.setFromTriplets(triplets.begin(), triplets.end());
    return ls;
}

Eigen::SparseMatrix<double> information_matrix(const LinearSystem& ls) {
    Eigen::SparseMatrix<double> lambda = ls.jacobian.transpose() * ls.jacobian;
    lambda.makeCompressed();
    return lambda;
}

double log_det(const Eigen::SparseMatrix<double>& m) {
    if (m.rows() == 0) {
        return 0.0;
    }
    for (int i = 0; i < m.outerSize(); ++i) {
        if (m.coeff(i, i) <= 0.0) {
            throw SingularInformationError("log_det: nonpositive diagonal entry");
        }
    }
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(m);
    if (llt.info() != Eigen::Success) {
        throw SingularInformationError("log_det: sparse Cholesky factorization failed");
    }
    double sum = 0.0;
    const auto diag = llt.matrixL().nestedExpression().diagonal();
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
        const double d = diag(i);
        if (!(d > 0.0) || !std::isfinite(d)) {
            throw SingularInformationError("log_det: nonpositive pivot");
        }
        sum += 2.0 * std::log(d);
    }
    return sum;
}

namespace {

Estimate retract_all(const FactorGraph& g, const Estimate& e, const LinearSystem& ls,
                     const Eigen::VectorXd& delta) {
    Estimate out = e;
    for (std::size_t i = 0; i < ls.column_order.size(); ++i) {
        const VariableKey k = ls.column_order[i];
        const int c = ls.column_offsets[i];
        if (k.kind == VarKind::Pose) {
            out.poses[static_cast<std::size_t>(k.index)] =
                se3_retract(e.pose(k), delta.segment<6>(c));
        } else {
            out.landmarks[static_cast<std::size_t>(k.index)] = e.landmark(k) + delta.segment<3>(c);
        }
    }
    return out;
}

// Counts near-zero eigenvalues densely; only used to diagnose a failure.
int nullspace_dimension(const Eigen::SparseMatrix<double>& lambda) {
    const Eigen::MatrixXd dense(lambda);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd eigs = es.eigenvalues();
    const double scale = std::max(eigs.cwiseAbs().maxCoeff(), 1e-300);
    return static_cast<int>((eigs.array() < 1e-10 * scale).count());
}

void check_normal_equations_rank(const Eigen::SparseMatrix<double>& lambda) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(lambda);
    if (ldlt.info() == Eigen::Success) {
        const Eigen::VectorXd d = ldlt.vectorD();
        const double dmax = d.size() > 0 ? d.maxCoeff() : 0.0;
        if (dmax > 0.0 && (d.array() > 1e-12 * dmax).all()) {
            return;
        }
    }
    throw RankDeficiencyError("optimize_map: singular normal equations",
                              nullspace_dimension(lambda));
}

} // namespace

SolveResult optimize_map(const FactorGraph& g, const Estimate& init, const SolverConfig& cfg) {
    SolveResult result;
    result.estimate = init;

    LinearSystem ls = linearize(g, result.estimate);
    double cost = 0.5 * ls.residual.squaredNorm();
    result.skipped_factors = ls.skipped_factors;
    result.cost_history.push_back(cost);

    Eigen::SparseMatrix<double> lambda = information_matrix(ls);
    check_normal_equations_rank(lambda);

    if (cost == 0.0) {
        result.final_cost = 0.0;
        return result;
    }

    const Eigen::SparseMatrix<double> identity = [&] {
        Eigen::SparseMatrix<double> id(lambda.rows(), lambda.cols());
        id.setIdentity();
        return id;
    }();

    double damping = cfg.lambda_init;
    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
        result.iterations = iter;
        const Eigen::VectorXd rhs = -ls.jacobian.transpose() * ls.residual;

        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(lambda + damping * identity);
        if (solver.info() != Eigen::Success) {
            damping *= cfg.lambda_up;
            if (damping > cfg.lambda_max) break;
            continue;
        }
        const Eigen::VectorXd delta = solver.solve(rhs);

        const Estimate candidate = retract_all(g, result.estimate, ls, delta);
        LinearSystem cand_ls = linearize(g, candidate);
        const double cand_cost = 0.5 * cand_ls.residual.squaredNorm();
        const double step_norm = delta.norm();

        if (cand_cost < cost || (cand_cost == cost && step_norm < cfg.step_tol)) {
            const double decrease = cost - cand_cost;
            result.estimate = candidate;
            result.skipped_factors = cand_ls.skipped_factors;
            ls = std::move(cand_ls);
            lambda = information_matrix(ls);
            const bool converged = decrease < cfg.relative_cost_tol * cost ||
                                   step_norm < cfg.step_tol;
            cost = cand_cost;
            result.cost_history.push_back(cost);
            damping = std::max(damping / cfg.lambda_down, 1e-12);
            if (converged) break;
        } else {
            damping *= cfg.lambda_up;
            if (damping > cfg.lambda_max) break;
        }
    }

    result.final_cost = cost;
    return result;
}

std::vector<Eigen::MatrixXd> marginal_covariances(const FactorGraph& g, const Estimate& e,
                                                  const std::vector<VariableKey>& keys) {
    const LinearSystem ls = linearize(g, e);
    const Eigen::SparseMatrix<double> lambda = information_matrix(ls);

    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(lambda);
    if (llt.info() != Eigen::Success) {
        throw SingularInformationError("marginal_covariance: information matrix is singular");
    }

    std::vector<Eigen::MatrixXd> out;
    out.reserve(keys.size());
    for (VariableKey key : keys) {
        if (!g.has(key)) {
            throw StructuralError("marginal_covariance: unknown key");
        }
        const int offset = ls.column_offset_of(key);
        const int dim = key.tangent_dim();

        Eigen::MatrixXd unit = Eigen::MatrixXd::Zero(lambda.rows(), dim);
        for (int j = 0; j < dim; ++j) {
            unit(offset + j, j) = 1.0;
        }
        const Eigen::MatrixXd cols = llt.solve(unit);
        Eigen::MatrixXd block = cols.middleRows(offset, dim);
        block = 0.5 * (block + block.transpose().eval());

        if (key.kind == VarKind::Pose) {
            Mat6 map = Mat6::Identity();
            map.topLeftCorner<3, 3>() = ypr_rate_jacobian(e.pose(key).rotation);
            block = map * block * map.transpose();
        }
        out.push_back(std::move(block));
    }
    return out;
}

Eigen::MatrixXd marginal_covariance(const FactorGraph& g, const Estimate& e, VariableKey key) {
    return marginal_covariances(g, e, {key}).front();
}

Vec3 yaw_pitch_roll(const Mat3& r) {
    const double pitch = -std::asin(std::clamp(r(2, 0), -1.0, 1.0));
    const double yaw = std::atan2(r(1, 0), r(0, 0));
    const double roll = std::atan2(r(2, 1), r(2, 2));
    return {yaw, pitch, roll};
}

Mat3 rotation_from_ypr(const Vec3& ypr) {
    const double cy = std::cos(ypr.x()), sy = std::sin(ypr.x());
    const double cp = std::cos(ypr.y()), sp = std::sin(ypr.y());
    const double cr = std::cos(ypr.z()), sr = std::sin(ypr.z());
    Mat3 rz, ry, rx;
    rz << cy, -sy, 0, sy, cy, 0, 0, 0, 1;
    ry << cp, 0, sp, 0, 1, 0, -sp, 0, cp;
    rx << 1, 0, 0, 0, cr, -sr, 0, sr, cr;
    return rz * ry * rx;
}

Mat3 ypr_rate_jacobian(const Mat3& r) {
    const Vec3 ypr = yaw_pitch_roll(r);
    const double cp = std::cos(ypr.y());
    const double tp = std::tan(ypr.y());
    const double cr = std::cos(ypr.z()), sr = std::sin(ypr.z());
    // Body angular rate to z-y-x Euler angle rates; singular at pitch +-90 deg.
    Mat3 j;
    j << 0.0, sr / cp, cr / cp,
         0.0, cr, -sr,
         1.0, sr * tp, cr * tp;
    return j;
}

} // namespace satslam
