#include "flam/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "flam/errors.hpp"

namespace flam {

namespace {

using Mat5 = Eigen::Matrix<double, 5, 5>;
using Triplets = std::vector<Eigen::Triplet<double>>;

template <int N, class Jac, class Res>
void scatter(Triplets& trips, Eigen::VectorXd& xi, const Jac& J, const Res& e,
             const Eigen::Matrix<double, Jac::RowsAtCompileTime, 1>& w,
             const std::array<std::size_t, N>& index) {
    const Eigen::Matrix<double, N, N> H = J.transpose() * w.asDiagonal() * J;
    const Eigen::Matrix<double, N, 1> g = J.transpose() * w.asDiagonal() * e;
    for (int c = 0; c < N; ++c) {
        xi(static_cast<Eigen::Index>(index[c])) += g(c);
        for (int r = 0; r < N; ++r) {
            if (H(r, c) != 0.0) {
                trips.emplace_back(static_cast<int>(index[r]), static_cast<int>(index[c]), H(r, c));
            }
        }
    }
}

/// Apply z = M^-1 r for the selected preconditioner.
class PreconditionerOp {
public:
    PreconditionerOp(const Eigen::SparseMatrix<double>& A, const StateLayout& layout,
                     double lambda, Preconditioner kind)
        : layout_(layout), kind_(kind) {
        if (kind_ == Preconditioner::none) {
            return;
        }
        const std::size_t K = layout.num_states();
        const std::size_t N = layout.num_nodes();
        const auto traj_dim = static_cast<Eigen::Index>(layout.trajectory_dim());
        diag_.assign(K, Mat5::Zero());
        lower_.assign(K, Mat5::Zero());
        map_ = Eigen::MatrixXd::Zero(2 * static_cast<Eigen::Index>(N), 2 * static_cast<Eigen::Index>(N));

        for (int col = 0; col < A.outerSize(); ++col) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(A, col); it; ++it) {
                const auto r = it.row();
                const auto c = it.col();
                if (r < traj_dim && c < traj_dim) {
                    const auto kr = static_cast<std::size_t>(r / kStateDim);
                    const auto kc = static_cast<std::size_t>(c / kStateDim);
                    if (kr == kc) {
                        diag_[kr](r % kStateDim, c % kStateDim) += it.value();
                    } else if (kr == kc + 1 && kind_ == Preconditioner::trajectory_map) {
                        lower_[kr](r % kStateDim, c % kStateDim) += it.value();
                    }
                } else if (r >= traj_dim && c >= traj_dim) {
                    const auto mr = r - traj_dim;
                    const auto mc = c - traj_dim;
                    if (kind_ == Preconditioner::trajectory_map || mr / kNodeDim == mc / kNodeDim) {
                        map_(mr, mc) += it.value();
                    }
                }
            }
        }
        for (auto& d : diag_) {
            d.diagonal().array() += lambda;
        }
        map_.diagonal().array() += lambda;

        if (kind_ == Preconditioner::block_jacobi) {
            for (auto& d : diag_) {
                d = safe_inverse(d);
            }
            for (Eigen::Index i = 0; i < map_.rows(); i += kNodeDim) {
                map_.block<2, 2>(i, i) = safe_inverse(Eigen::Matrix2d(map_.block<2, 2>(i, i)));
            }
            return;
        }

        // Block Cholesky of the tridiagonal chain: L_k L_k^T = D_k - C_k C_k^T,
        // C_k = B_k L_{k-1}^-T.
        chol_.resize(K);
        for (std::size_t k = 0; k < K; ++k) {
            Mat5 S = diag_[k];
            if (k > 0) {
                const Mat5 Ct = chol_[k - 1].matrixL().solve(Mat5(lower_[k].transpose()));
                lower_[k] = Ct.transpose();
                S.noalias() -= lower_[k] * Ct;
            }
            chol_[k].compute(S);
            if (chol_[k].info() != Eigen::Success) {
                S.diagonal().array() += std::max(1e-12, 1e-12 * S.diagonal().cwiseAbs().maxCoeff());
                chol_[k].compute(S);
            }
        }
        map_chol_.compute(map_);
        if (map_chol_.info() != Eigen::Success && map_.rows() > 0) {
            Eigen::MatrixXd M = map_;
            M.diagonal().array() += std::max(1e-12, 1e-12 * M.diagonal().cwiseAbs().maxCoeff());
            map_chol_.compute(M);
        }
    }

    void apply(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
        if (kind_ == Preconditioner::none) {
            z = r;
            return;
        }
        z.resize(r.size());
        const std::size_t K = layout_.num_states();
        const auto traj_dim = static_cast<Eigen::Index>(layout_.trajectory_dim());
        if (kind_ == Preconditioner::block_jacobi) {
            for (std::size_t k = 0; k < K; ++k) {
                const auto o = static_cast<Eigen::Index>(kStateDim * k);
                z.segment<5>(o) = diag_[k] * r.segment<5>(o);
            }
            for (Eigen::Index i = 0; i < map_.rows(); i += kNodeDim) {
                z.segment<2>(traj_dim + i) = map_.block<2, 2>(i, i) * r.segment<2>(traj_dim + i);
            }
            return;
        }
        if (K > 0) {
            // forward: L y = r
            Eigen::Matrix<double, 5, 1> y = chol_[0].matrixL().solve(Eigen::Matrix<double, 5, 1>(r.segment<5>(0)));
            z.segment<5>(0) = y;
            for (std::size_t k = 1; k < K; ++k) {
                const auto o = static_cast<Eigen::Index>(kStateDim * k);
                const Eigen::Matrix<double, 5, 1> rhs = r.segment<5>(o) - lower_[k] * z.segment<5>(o - kStateDim);
                z.segment<5>(o) = chol_[k].matrixL().solve(rhs);
            }
            // backward: L^T x = y
            {
                const auto o = static_cast<Eigen::Index>(kStateDim * (K - 1));
                z.segment<5>(o) = chol_[K - 1].matrixU().solve(Eigen::Matrix<double, 5, 1>(z.segment<5>(o)));
            }
            for (std::size_t k = K - 1; k-- > 0;) {
                const auto o = static_cast<Eigen::Index>(kStateDim * k);
                const Eigen::Matrix<double, 5, 1> rhs =
                    z.segment<5>(o) - lower_[k + 1].transpose() * z.segment<5>(o + kStateDim);
                z.segment<5>(o) = chol_[k].matrixU().solve(rhs);
            }
        }
        if (map_.rows() > 0) {
            z.tail(map_.rows()) = map_chol_.solve(r.tail(map_.rows()));
        }
    }

private:
    template <class M>
    static M safe_inverse(const M& m) {
        Eigen::LLT<M> llt(m);
        if (llt.info() == Eigen::Success) {
            return llt.solve(M::Identity());
        }
        M inv = M::Zero();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            inv(i, i) = m(i, i) > 0.0 ? 1.0 / m(i, i) : 1.0;
        }
        return inv;
    }

    StateLayout layout_;
    Preconditioner kind_;
    std::vector<Mat5> diag_;
    std::vector<Mat5> lower_;
    std::vector<Eigen::LLT<Mat5>> chol_;
    Eigen::MatrixXd map_;
    Eigen::LLT<Eigen::MatrixXd> map_chol_;
};

CgResult run_cg(const Eigen::SparseMatrix<double>& A, double lambda, const StateLayout& layout,
                const Eigen::VectorXd& b, const CgConfig& config) {
    const auto n = static_cast<Eigen::Index>(b.size());
    CgResult out;
    out.delta = Eigen::VectorXd::Zero(n);
    const double b_norm = b.norm();
    if (b_norm == 0.0) {
        out.converged = true;
        return out;
    }
    const std::size_t cap =
        config.max_iterations > 0 ? config.max_iterations : 10 * static_cast<std::size_t>(n);
    const double target = config.relative_tolerance * b_norm;
    const PreconditionerOp precond(A, layout, lambda, config.preconditioner);

    auto apply_a = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out_v) {
        out_v.noalias() = A * v;
        out_v += lambda * v;
    };

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r = b;
    Eigen::VectorXd z(n);
    Eigen::VectorXd Ap(n);
    precond.apply(r, z);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);

    Eigen::VectorXd best = x;
    double best_norm = b_norm;
    std::size_t it = 0;
    int restarts = 0;
    while (it < cap) {
        apply_a(p, Ap);
        const double pAp = p.dot(Ap);
        if (!(pAp > 0.0) || !std::isfinite(pAp)) {
            break;
        }
        const double alpha = rz / pAp;
        x.noalias() += alpha * p;
        r.noalias() -= alpha * Ap;
        ++it;
        const double r_norm = r.norm();
        if (r_norm < best_norm) {
            best_norm = r_norm;
            best = x;
        }
        if (r_norm <= target) {
            // Guard against drift of the recursive residual.
            Eigen::VectorXd true_r(n);
            apply_a(x, true_r);
            true_r = b - true_r;
            const double true_norm = true_r.norm();
            if (true_norm <= target || restarts >= 3) {
                best = x;
                best_norm = true_norm;
                break;
            }
            ++restarts;
            r = true_r;
            best_norm = true_norm;
            best = x;
            precond.apply(r, z);
            p = z;
            rz = r.dot(z);
            continue;
        }
        precond.apply(r, z);
        const double rz_next = r.dot(z);
        const double beta = rz_next / rz;
        rz = rz_next;
        p = z + beta * p;
    }

    Eigen::VectorXd res(n);
    apply_a(best, res);
    res -= b;
    out.delta = std::move(best);
    out.iterations = it;
    out.residual_norm = res.norm();
    out.converged = out.residual_norm <= target;
    return out;
}

}  // namespace

SparseSystem assemble(const FlamProblem& problem, const FullState& y) {
    const StateLayout layout = problem.layout();
    if (y.layout() != layout || !(y.map.grid() == problem.grid())) {
        throw ConfigError("linearization point does not match the problem dimensions");
    }
    SparseSystem sys;
    sys.layout = layout;
    const auto dim = static_cast<Eigen::Index>(layout.dim());
    sys.xi = Eigen::VectorXd::Zero(dim);

    Triplets trips;
    trips.reserve(problem.motion_factors().size() * 100 + problem.observation_factors().size() * 169);

    const Eigen::Matrix<double, 5, 1> wm = problem.weights().motion_information();
    for (const auto& f : problem.motion_factors()) {
        const RobotState& prev = y.states[f.step - 1];
        const RobotState& curr = y.states[f.step];
        const MotionResidual e = motion_residual(prev, curr, f.input, problem.dt());
        const MotionJacobian J = motion_jacobian(prev, curr, f.input, problem.dt());
        std::array<std::size_t, 10> idx{};
        for (std::size_t j = 0; j < 5; ++j) {
            idx[j] = layout.state_offset(f.step - 1) + j;
            idx[5 + j] = layout.state_offset(f.step) + j;
        }
        scatter<10>(trips, sys.xi, J, e, wm, idx);
    }

    const Eigen::Vector2d wz = Eigen::Vector2d::Constant(problem.weights().observation_information());
    for (const auto& f : problem.observation_factors()) {
        const ObservationLinearization lin =
            linearize_observation(y.states[f.step], y.map, f.cell, f.measurement);
        std::array<std::size_t, 13> idx{};
        for (std::size_t j = 0; j < 5; ++j) {
            idx[j] = layout.state_offset(f.step) + j;
        }
        for (std::size_t n = 0; n < 4; ++n) {
            const std::size_t base = layout.node_offset(static_cast<std::size_t>(lin.nodes[n]));
            idx[5 + 2 * n] = base;
            idx[6 + 2 * n] = base + 1;
        }
        scatter<13>(trips, sys.xi, lin.jacobian, lin.residual, wz, idx);
    }

    // Map prior: e = v_i, J = I.
    const double wp = problem.weights().map_prior_information();
    if (wp > 0.0) {
        for (std::size_t i = 0; i < layout.num_nodes(); ++i) {
            const auto o = static_cast<Eigen::Index>(layout.node_offset(i));
            for (Eigen::Index c = 0; c < 2; ++c) {
                trips.emplace_back(o + c, o + c, wp);
                sys.xi(o + c) += wp * y.map[i](c);
            }
        }
    }

    sys.omega.resize(dim, dim);
    sys.omega.setFromTriplets(trips.begin(), trips.end());
    sys.omega.makeCompressed();
    return sys;
}

SparseSystem anchor_initial_state(SparseSystem sys, double weight) {
    if (sys.layout.num_states() == 0) {
        return sys;
    }
    for (int j = 0; j < kStateDim; ++j) {
        const auto i = static_cast<Eigen::Index>(sys.layout.state_offset(0)) + j;
        sys.omega.coeffRef(i, i) += weight;
    }
    sys.omega.makeCompressed();
    return sys;
}

CgResult solve_damped_cg(const SparseSystem& sys, double lambda, const CgConfig& config) {
    if (static_cast<std::size_t>(sys.xi.size()) != sys.dim() ||
        static_cast<std::size_t>(sys.omega.rows()) != sys.dim()) {
        throw ConfigError("sparse system dimension mismatch");
    }
    return run_cg(sys.omega, lambda, sys.layout, -sys.xi, config);
}

CgResult solve_cg(const Eigen::SparseMatrix<double>& A, const StateLayout& layout,
                  const Eigen::VectorXd& b, const CgConfig& config) {
    return run_cg(A, 0.0, layout, b, config);
}

void SolverConfig::validate() const {
    if (!(damping >= 0.0)) {
        throw ConfigError("damping must be nonnegative");
    }
    if (!(anchor_weight > 0.0)) {
        throw ConfigError("anchor weight must be positive");
    }
    if (!(cg.relative_tolerance > 0.0) || !(step_tolerance > 0.0)) {
        throw ConfigError("solver tolerances must be positive");
    }
    if (max_iterations == 0) {
        throw ConfigError("max_iterations must be positive");
    }
    if (!(lsf_ridge > 0.0)) {
        throw ConfigError("LSF ridge must be positive");
    }
}

FullState initial_guess(const FlamProblem& problem, const SensorLog& log, const RobotState& x0,
                        double ridge) {
    const GridSpec& grid = problem.grid();
    const Trajectory dr = dead_reckon(log, x0);

    FullState y;
    y.states.reserve(dr.size());
    for (const auto& s : dr) {
        y.states.push_back(s.state);
    }

    const auto n = static_cast<Eigen::Index>(grid.node_count());
    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 2);
    for (const auto& f : problem.observation_factors()) {
        const RobotState& x = y.states[f.step];
        const BilinearStencil st = bilinear_stencil(grid, f.cell, x.position);
        const Vec2 target =
            rotation_to_body(x.heading).transpose() * f.measurement.rel_flow + x.velocity;
        for (int a = 0; a < 4; ++a) {
            const int ia = st.cell.nodes[a];
            rhs.row(ia) += st.cell.weights[a] * target.transpose();
            for (int b = 0; b < 4; ++b) {
                normal(ia, st.cell.nodes[b]) += st.cell.weights[a] * st.cell.weights[b];
            }
        }
    }
    const double mean_diag = n > 0 ? normal.diagonal().mean() : 0.0;
    double rho = ridge * (mean_diag > 0.0 ? mean_diag : 1.0);
    // Same node prior as the FLAM cost, expressed in the unweighted normal equations.
    const double wp = problem.weights().map_prior_information();
    rho += wp / problem.weights().observation_information();
    normal.diagonal().array() += rho;
    const Eigen::MatrixXd v = normal.ldlt().solve(rhs);

    std::vector<Vec2> nodes(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        nodes[static_cast<std::size_t>(i)] = v.row(i).transpose();
    }
    y.map = FlowMap(grid, std::move(nodes));
    return y;
}

FullState initial_guess(const SensorLog& log, const GridSpec& grid, double ridge) {
    const FlamProblem problem(log, grid, FactorWeights{});
    return initial_guess(problem, log, log.truth.front().state, ridge);
}

OptimizeResult optimize(const FlamProblem& problem, FullState initial, const SolverConfig& config,
                        const IterationObserver& observer) {
    config.validate();
    OptimizeResult out;
    FullState y = std::move(initial);
    double cost = problem.cost(y);
    out.initial_cost = cost;
    const double lambda = config.damping;
    int increases = 0;
    const auto worse = [](double trial, double ref) { return trial > ref * (1.0 + 1e-12); };

    for (std::size_t it = 1; it <= config.max_iterations; ++it) {
        const SparseSystem sys = anchor_initial_state(assemble(problem, y), config.anchor_weight);
        const CgResult cg = solve_damped_cg(sys, lambda, config.cg);

        FullState trial = y;
        trial.apply_increment(cg.delta);
        double trial_cost = problem.cost(trial);

        IterationRecord rec;
        rec.iteration = it;
        rec.step_norm = cg.delta.size() > 0 ? cg.delta.lpNorm<Eigen::Infinity>() : 0.0;
        rec.cg_iterations = cg.iterations;
        rec.cg_converged = cg.converged;
        rec.damping = lambda;
        rec.step_scale = 1.0;

        bool increased = worse(trial_cost, cost);
        if (config.line_search) {
            for (std::size_t h = 0; h < config.max_step_halvings && increased; ++h) {
                rec.step_scale *= 0.5;
                trial = y;
                trial.apply_increment(rec.step_scale * cg.delta);
                trial_cost = problem.cost(trial);
                increased = worse(trial_cost, cost);
            }
        }

        if (config.line_search && increased) {
            // no descent along delta even for tiny steps: the iterate is as good as it gets
            rec.accepted = false;
            rec.cost = cost;
            out.iterations.push_back(rec);
            if (observer) {
                observer(rec);
            }
            out.stalled = true;
            break;
        }

        y = std::move(trial);
        cost = trial_cost;
        rec.cost = cost;
        out.iterations.push_back(rec);
        if (observer) {
            observer(rec);
        }

        increases = increased ? increases + 1 : 0;
        if (increases >= 2) {
            out.diverged = true;
            break;
        }
        if (rec.step_norm < config.step_tolerance) {
            out.converged = true;
            break;
        }
    }
    out.final_system = anchor_initial_state(assemble(problem, y), config.anchor_weight);
    out.estimate = std::move(y);
    return out;
}

OptimizeResult optimize(const SensorLog& log, const GridSpec& grid, const SolverConfig& config,
                        const FactorWeights& weights) {
    const FlamProblem problem(log, grid, weights);
    FullState init = initial_guess(problem, log, log.truth.front().state, config.lsf_ridge);
    return optimize(problem, std::move(init), config);
}

MarginalResult marginal_covariance(const SparseSystem& sys, double lambda,
                                   std::span<const VariableId> variables, const CgConfig& config) {
    MarginalResult out;
    Eigen::SparseMatrix<double> A = sys.omega;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        A.coeffRef(i, i) += lambda;
    }
    A.makeCompressed();
    const auto n = static_cast<Eigen::Index>(sys.dim());
    for (const auto& v : variables) {
        const bool is_state = v.kind == VariableId::Kind::state;
        if (is_state ? v.index >= sys.layout.num_states() : v.index >= sys.layout.num_nodes()) {
            throw ConfigError("marginal covariance: variable index out of range");
        }
        const int size = is_state ? kStateDim : kNodeDim;
        const auto offset = static_cast<Eigen::Index>(
            is_state ? sys.layout.state_offset(v.index) : sys.layout.node_offset(v.index));
        Eigen::MatrixXd block(size, size);
        for (int j = 0; j < size; ++j) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
            e(offset + j) = 1.0;
            const CgResult r = solve_cg(A, sys.layout, e, config);
            out.converged = out.converged && r.converged;
            block.col(j) = r.delta.segment(offset, size);
        }
        out.blocks.emplace_back(0.5 * (block + block.transpose()));
    }
    return out;
}

}  // namespace flam
