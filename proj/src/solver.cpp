#include "doe/solver.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <Eigen/SparseCholesky>

namespace doe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Initial point push (absolute/relative) away from bounds.
constexpr double kBoundPush = 1e-2;
constexpr double kBoundFrac = 1e-2;
// Barrier subproblem tolerance factor and superlinear exponent for mu.
constexpr double kBarrierTolFactor = 10.0;
constexpr double kMuSuperlinear = 1.5;
// Bound multiplier safeguard.
constexpr double kSigmaSafeguard = 1e10;
// Error scaling threshold.
constexpr double kScaleMax = 100.0;
// Inertia correction schedule.
constexpr double kDeltaWFirst = 1e-4;
constexpr double kDeltaWGrowFirst = 100.0;
constexpr double kDeltaWGrow = 8.0;
constexpr double kDeltaWShrink = 1.0 / 3.0;
constexpr double kDeltaWMax = 1e40;
constexpr double kDeltaCBase = 1e-8;
// Target relative residual of KKT solves.
constexpr double kSolveTol = 1e-14;
// Filter line search.
constexpr double kGammaTheta = 1e-5;
constexpr double kGammaPhi = 1e-8;
constexpr double kGammaAlpha = 0.05;
constexpr double kDelta = 1.0;
constexpr double kSTheta = 1.1;
constexpr double kSPhi = 2.3;
constexpr double kEtaPhi = 1e-8;
constexpr double kSocShrink = 0.99;
constexpr int kMaxSoc = 4;
constexpr double kMinStep = 1e-13;
constexpr double kTinyStep = 1e-14;
// Linear damping of variables bounded on one side only.
constexpr double kDamping = 1e-4;

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void SolverOptions::check() const {
    if (!(tol_kkt > 0.0)) throw std::invalid_argument("tol_kkt must be positive");
    if (max_iter <= 0) throw std::invalid_argument("max_iter must be positive");
    if (!(mu_init > 0.0)) throw std::invalid_argument("mu_init must be positive");
    if (!(mu_shrink > 0.0 && mu_shrink < 1.0)) throw std::invalid_argument("mu_shrink must lie in (0, 1)");
    if (!(step_fraction > 0.0 && step_fraction < 1.0)) throw std::invalid_argument("step_fraction must lie in (0, 1)");
    if (!(regularization_min > 0.0)) throw std::invalid_argument("regularization_min must be positive");
    if (!(infeasibility_tol > 0.0)) throw std::invalid_argument("infeasibility_tol must be positive");
}

std::string to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible_local: return "infeasible_local";
        case SolveStatus::iteration_limit: return "iteration_limit";
        case SolveStatus::numerical_error: return "numerical_error";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// BarrierProblem

BarrierProblem::BarrierProblem(const NlpProblem& problem) : problem_(problem) {
    const int n = problem.n_vars();
    reduced_.assign(std::size_t(n), -1);
    fixed_x_.assign(std::size_t(n), 0.0);
    for (int v = 0; v < n; ++v) {
        const double lo = problem.lower[v], hi = problem.upper[v];
        if (lo == hi) {
            fixed_x_[v] = lo;
        } else {
            reduced_[v] = int(free_.size());
            free_.push_back(v);
            wl_.push_back(lo);
            wu_.push_back(hi);
        }
    }
    n_x_ = int(free_.size());

    auto compile = [&](const QuadraticExpr& e) {
        QuadraticExpr out;
        out.constant = e.constant;
        for (const auto& t : e.linear) {
            if (reduced_[t.var] >= 0)
                out.add(reduced_[t.var], t.coef);
            else
                out.constant += t.coef * fixed_x_[t.var];
        }
        for (const auto& t : e.quadratic) {
            const int ri = reduced_[t.i], rj = reduced_[t.j];
            if (ri >= 0 && rj >= 0)
                out.add(ri, rj, t.coef);
            else if (ri >= 0)
                out.add(ri, t.coef * fixed_x_[t.j]);
            else if (rj >= 0)
                out.add(rj, t.coef * fixed_x_[t.i]);
            else
                out.constant += t.coef * fixed_x_[t.i] * fixed_x_[t.j];
        }
        return out;
    };

    for (std::size_t r = 0; r < problem.rows.size(); ++r) {
        const auto& row = problem.rows[r];
        QuadraticExpr e = compile(row.expr);
        if (e.linear.empty() && e.quadratic.empty()) {
            // Every variable of the row is fixed: nothing for the barrier method to do.
            constant_rows_.push_back(int(r));
            row_map_.push_back(-1);
            continue;
        }
        row_map_.push_back(int(rows_.size()));
        rows_.push_back(std::move(e));
        if (row.is_equality()) {
            row_rhs_.push_back(row.lower);
            row_slack_.push_back(-1);
        } else {
            row_rhs_.push_back(0.0);
            row_slack_.push_back(n_x_ + n_s_);
            ++n_s_;
            wl_.push_back(row.lower);
            wu_.push_back(row.upper);
        }
        row_hessian_.push_back(rows_.back().hessian());
    }
    objective_ = compile(problem.objective);
    if (problem.maximize) {
        objective_.constant = -objective_.constant;
        for (auto& t : objective_.linear) t.coef = -t.coef;
        for (auto& t : objective_.quadratic) t.coef = -t.coef;
    }
    objective_hessian_ = objective_.hessian();
}

double BarrierProblem::objective(std::span<const double> w) const { return objective_.value(w.first(n_x_)); }

void BarrierProblem::objective_gradient(std::span<const double> w, std::span<double> grad) const {
    std::fill(grad.begin(), grad.end(), 0.0);
    objective_.add_gradient(w.first(n_x_), 1.0, grad);
}

void BarrierProblem::constraints(std::span<const double> w, std::span<double> c) const {
    const auto x = w.first(n_x_);
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        double v = rows_[r].value(x);
        v -= row_slack_[r] >= 0 ? w[row_slack_[r]] : row_rhs_[r];
        c[r] = v;
    }
}

void BarrierProblem::jacobian(std::span<const double> w, std::vector<Eigen::Triplet<double>>& out) const {
    const auto x = w.first(n_x_);
    std::vector<LinearTerm> grad;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        grad.clear();
        rows_[r].gradient(x, grad);
        for (const auto& g : grad) out.emplace_back(int(r), g.var, g.coef);
        if (row_slack_[r] >= 0) out.emplace_back(int(r), row_slack_[r], -1.0);
    }
}

void BarrierProblem::hessian(std::span<const double> y, std::vector<Eigen::Triplet<double>>& out) const {
    for (const auto& h : objective_hessian_) out.emplace_back(h.row, h.col, h.value);
    for (std::size_t r = 0; r < rows_.size(); ++r)
        for (const auto& h : row_hessian_[r]) out.emplace_back(h.row, h.col, y[r] * h.value);
}

std::vector<double> BarrierProblem::reduce(std::span<const double> x) const {
    std::vector<double> w(std::size_t(n_primal()), 0.0);
    for (int k = 0; k < n_x_; ++k) w[k] = x[free_[k]];
    std::vector<double> full(x.begin(), x.end());
    for (std::size_t v = 0; v < full.size(); ++v)
        if (reduced_[v] < 0) full[v] = fixed_x_[v];
    for (std::size_t r = 0; r < row_map_.size(); ++r) {
        const int k = row_map_[r];
        if (k >= 0 && row_slack_[std::size_t(k)] >= 0) w[row_slack_[std::size_t(k)]] = problem_.rows[r].expr.value(full);
    }
    return w;
}

std::vector<double> BarrierProblem::expand_duals(std::span<const double> y) const {
    std::vector<double> out(row_map_.size(), 0.0);
    for (std::size_t r = 0; r < row_map_.size(); ++r)
        if (row_map_[r] >= 0) out[r] = y[std::size_t(row_map_[r])];
    return out;
}

std::vector<double> BarrierProblem::expand(std::span<const double> w) const {
    std::vector<double> x = fixed_x_;
    for (int k = 0; k < n_x_; ++k) x[free_[k]] = w[k];
    return x;
}

// ---------------------------------------------------------------------------
// KKT system

struct KktSystem::Factor {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt;
    bool analyzed = false;
};

KktSystem::KktSystem() : factor_(std::make_unique<Factor>()) {}
KktSystem::~KktSystem() = default;
KktSystem::KktSystem(KktSystem&&) noexcept = default;
KktSystem& KktSystem::operator=(KktSystem&&) noexcept = default;

Eigen::VectorXd KktSystem::solve(const Eigen::VectorXd& rhs, double* residual) const {
    // The factorization carries -dc I in the dual block. Its inverse is used as
    // a right preconditioner for GMRES on the unregularized matrix; plain
    // refinement stalls once dc times the inverse dual Schur complement exceeds 1.
    auto apply = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd out = lower_.selfadjointView<Eigen::Lower>() * v;
        out.tail(n_dual_) += delta_c_ * v.tail(n_dual_);
        return out;
    };
    auto precond = [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(factor_->ldlt.solve(v)); };
    const double scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
    auto error_of = [&](const Eigen::VectorXd& x) { return (rhs - apply(x)).lpNorm<Eigen::Infinity>() / scale; };

    Eigen::VectorXd sol = precond(rhs);
    double err = error_of(sol);
    constexpr int kRestart = 40;
    for (int cycle = 0; cycle < 4 && err > kSolveTol; ++cycle) {
        const Eigen::VectorXd r0 = rhs - apply(sol);
        const double beta = r0.norm();
        if (!(beta > 0.0)) break;
        Eigen::MatrixXd V(r0.size(), kRestart + 1);
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(kRestart + 1, kRestart);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(kRestart + 1);
        std::vector<double> cs(kRestart), sn(kRestart);
        V.col(0) = r0 / beta;
        g[0] = beta;
        int k = 0;
        for (; k < kRestart; ++k) {
            Eigen::VectorXd w = apply(precond(V.col(k)));
            for (int i = 0; i <= k; ++i) {
                H(i, k) = w.dot(V.col(i));
                w -= H(i, k) * V.col(i);
            }
            H(k + 1, k) = w.norm();
            if (H(k + 1, k) > 0.0) V.col(k + 1) = w / H(k + 1, k);
            for (int i = 0; i < k; ++i) {
                const double t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
                H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
                H(i, k) = t;
            }
            const double d = std::hypot(H(k, k), H(k + 1, k));
            if (d == 0.0) break;
            cs[k] = H(k, k) / d;
            sn[k] = H(k + 1, k) / d;
            H(k, k) = d;
            H(k + 1, k) = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            if (std::abs(g[k + 1]) <= 1e-3 * kSolveTol * scale) {
                ++k;
                break;
            }
        }
        if (k == 0) break;
        const Eigen::VectorXd y =
            H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
        const Eigen::VectorXd candidate = sol + precond(V.leftCols(k) * y);
        const double cand_err = error_of(candidate);
        if (!(cand_err < err)) break;
        sol = candidate;
        err = cand_err;
    }
    if (residual) *residual = err;
    return sol;
}

class KktAssembler {
  public:
    // Fills `sys` and factorizes with inertia correction; reuses the analyzed
    // pattern of `sys` when present.
    static void run(KktSystem& sys, const BarrierProblem& bp, const Iterate& it, double mu,
                    const SolverOptions& options, double last_delta_w, bool keep_full) {
        const int nw = bp.n_primal();
        const int m = bp.n_dual();
        const int dim = nw + m;
        sys.n_primal_ = nw;
        sys.n_dual_ = m;
        sys.delta_c_ = std::max(options.regularization_min, kDeltaCBase * std::pow(std::min(mu, 1.0), 0.25));

        std::vector<Eigen::Triplet<double>> base;
        bp.hessian(it.y, base);
        std::vector<Eigen::Triplet<double>> jac;
        bp.jacobian(it.w, jac);
        for (const auto& t : jac) base.emplace_back(nw + t.row(), t.col(), t.value());

        const auto& wl = bp.lower();
        const auto& wu = bp.upper();
        std::vector<double> sigma(std::size_t(nw), 0.0);
        for (int i = 0; i < nw; ++i) {
            if (finite(wl[i])) sigma[i] += it.z_lower[i] / (it.w[i] - wl[i]);
            if (finite(wu[i])) sigma[i] += it.z_upper[i] / (wu[i] - it.w[i]);
        }

        auto build = [&](double delta_w) {
            std::vector<Eigen::Triplet<double>> trip = base;
            for (int i = 0; i < nw; ++i) trip.emplace_back(i, i, sigma[i] + delta_w);
            for (int r = 0; r < m; ++r) trip.emplace_back(nw + r, nw + r, -sys.delta_c_);
            Eigen::SparseMatrix<double> K(dim, dim);
            K.setFromTriplets(trip.begin(), trip.end());
            return K;
        };

        auto attempt = [&](double delta_w) {
            sys.lower_ = build(delta_w);
            sys.delta_w_ = delta_w;
            auto& f = *sys.factor_;
            if (!f.analyzed) {
                f.ldlt.analyzePattern(sys.lower_);
                f.analyzed = true;
            }
            f.ldlt.factorize(sys.lower_);
            Inertia in;
            if (f.ldlt.info() == Eigen::Success) {
                const auto& d = f.ldlt.vectorD();
                for (Eigen::Index k = 0; k < d.size(); ++k) {
                    if (d[k] > 0.0)
                        ++in.positive;
                    else if (d[k] < 0.0)
                        ++in.negative;
                    else
                        ++in.zero;
                }
            } else {
                in.zero = 1;
            }
            sys.inertia_ = in;
            return in.positive == nw && in.negative == m && in.zero == 0;
        };

        sys.ok_ = false;
        if (attempt(0.0)) {
            sys.ok_ = true;
        } else {
            double delta_w = last_delta_w == 0.0 ? kDeltaWFirst
                                                 : std::max(options.regularization_min, kDeltaWShrink * last_delta_w);
            const double grow = last_delta_w == 0.0 ? kDeltaWGrowFirst : kDeltaWGrow;
            while (delta_w <= kDeltaWMax) {
                if (attempt(delta_w)) {
                    sys.ok_ = true;
                    break;
                }
                delta_w *= grow;
            }
        }
        if (keep_full) sys.full_ = sys.lower_.selfadjointView<Eigen::Lower>();
    }
};

KktSystem kkt_assemble(const BarrierProblem& bp, const Iterate& it, double mu, const SolverOptions& options,
                       double last_delta_w) {
    if (!(mu > 0.0)) throw std::invalid_argument("barrier parameter must be positive");
    KktSystem sys;
    KktAssembler::run(sys, bp, it, mu, options, last_delta_w, true);
    return sys;
}

// ---------------------------------------------------------------------------
// Interior-point iterations

namespace {

enum class Outcome { converged, iteration_limit, line_search_failed, kkt_failed };

struct RunResult {
    Outcome outcome;
    std::vector<double> x;
    std::vector<double> y;
    double kkt_error = 0.0;
    double primal_inf = 0.0;
};

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double e : v) m = std::max(m, std::abs(e));
    return m;
}

double l1(std::span<const double> v) {
    double s = 0.0;
    for (double e : v) s += std::abs(e);
    return s;
}

class InteriorPoint {
  public:
    InteriorPoint(const BarrierProblem& bp, const SolverOptions& opt, int& iterations)
        : bp_(bp), opt_(opt), iterations_(iterations), nw_(bp.n_primal()), m_(bp.n_dual()) {}

    RunResult run(std::span<const double> x_start) {
        initialize(x_start);
        const auto& wl = bp_.lower();
        const auto& wu = bp_.upper();
        std::vector<double> grad(static_cast<std::size_t>(nw_)), c(static_cast<std::size_t>(m_));
        std::vector<Eigen::Triplet<double>> jt;
        Eigen::SparseMatrix<double> A(m_, nw_);

        bp_.constraints(it_.w, c);
        theta_max_ = 1e4 * std::max(1.0, l1(c));
        theta_min_ = 1e-4 * std::max(1.0, l1(c));
        const double mu_min = opt_.tol_kkt / 10.0;

        for (;;) {
            bp_.objective_gradient(it_.w, grad);
            bp_.constraints(it_.w, c);
            jt.clear();
            bp_.jacobian(it_.w, jt);
            A.setFromTriplets(jt.begin(), jt.end());

            const Eigen::Map<const Eigen::VectorXd> y(it_.y.data(), m_);
            const Eigen::VectorXd aty = A.transpose() * y;

            auto error = [&](double mu) {
                double z_sum = 0.0, comp = 0.0, dual = 0.0;
                int n_z = 0;
                for (int i = 0; i < nw_; ++i) {
                    dual = std::max(dual, std::abs(grad[i] + aty[i] - it_.z_lower[i] + it_.z_upper[i]));
                    if (finite(wl[i])) {
                        z_sum += it_.z_lower[i];
                        ++n_z;
                        comp = std::max(comp, std::abs((it_.w[i] - wl[i]) * it_.z_lower[i] - mu));
                    }
                    if (finite(wu[i])) {
                        z_sum += it_.z_upper[i];
                        ++n_z;
                        comp = std::max(comp, std::abs((wu[i] - it_.w[i]) * it_.z_upper[i] - mu));
                    }
                }
                const double s_d = std::max(kScaleMax, (l1(it_.y) + z_sum) / std::max(1, m_ + n_z)) / kScaleMax;
                const double s_c = std::max(kScaleMax, z_sum / std::max(1, n_z)) / kScaleMax;
                last_dual_inf_ = dual;
                return std::max({dual / s_d, max_abs(c), comp / s_c});
            };

            const double e0 = error(0.0);
            primal_inf_ = max_abs(c);
            if (opt_.trace) trace_line(c);
            if (e0 <= opt_.tol_kkt) return finish(Outcome::converged, e0);
            if (iterations_ >= opt_.max_iter) return finish(Outcome::iteration_limit, e0);

            while (mu_ > mu_min && error(mu_) <= kBarrierTolFactor * mu_) {
                mu_ = std::max(mu_min, std::min(opt_.mu_shrink * mu_, std::pow(mu_, kMuSuperlinear)));
                filter_.clear();
            }
            const double tau = std::max(opt_.step_fraction, 1.0 - mu_);

            // Newton system: rhs = -(grad phi_mu + A^T y; c).
            barrier_grad_.assign(std::size_t(nw_), 0.0);
            Eigen::VectorXd rhs(nw_ + m_);
            for (int i = 0; i < nw_; ++i) {
                double g = grad[i];
                const bool lo = finite(wl[i]), hi = finite(wu[i]);
                if (lo) g -= mu_ / (it_.w[i] - wl[i]);
                if (hi) g += mu_ / (wu[i] - it_.w[i]);
                if (lo && !hi) g += kDamping * mu_;
                if (hi && !lo) g -= kDamping * mu_;
                barrier_grad_[i] = g;
                rhs[i] = -(g + aty[i]);
            }
            for (int r = 0; r < m_; ++r) rhs[nw_ + r] = -c[r];

            KktAssembler::run(kkt_, bp_, it_, mu_, opt_, last_delta_w_, false);
            if (!kkt_.ok()) return finish(Outcome::kkt_failed, e0);
            if (kkt_.delta_w() > 0.0) last_delta_w_ = kkt_.delta_w();
            const Eigen::VectorXd step = kkt_.solve(rhs);
            if (!step.allFinite()) return finish(Outcome::kkt_failed, e0);

            std::vector<double> dw(step.data(), step.data() + nw_);
            std::vector<double> dzl(std::size_t(nw_), 0.0), dzu(std::size_t(nw_), 0.0);
            for (int i = 0; i < nw_; ++i) {
                if (finite(wl[i])) {
                    const double gap = it_.w[i] - wl[i];
                    dzl[i] = mu_ / gap - it_.z_lower[i] - it_.z_lower[i] / gap * dw[i];
                }
                if (finite(wu[i])) {
                    const double gap = wu[i] - it_.w[i];
                    dzu[i] = mu_ / gap - it_.z_upper[i] + it_.z_upper[i] / gap * dw[i];
                }
            }
            const double alpha_max = primal_fraction(it_.w, dw, tau);
            double alpha_z = 1.0;
            for (int i = 0; i < nw_; ++i) {
                if (dzl[i] < 0.0) alpha_z = std::min(alpha_z, -tau * it_.z_lower[i] / dzl[i]);
                if (dzu[i] < 0.0) alpha_z = std::min(alpha_z, -tau * it_.z_upper[i] / dzu[i]);
            }

            std::vector<double> trial;
            const double alpha = line_search(dw, c, rhs, alpha_max, tau, trial);
            if (alpha < 0.0) return finish(Outcome::line_search_failed, e0);

            it_.w = std::move(trial);
            for (int r = 0; r < m_; ++r) it_.y[r] += alpha * step[nw_ + r];
            for (int i = 0; i < nw_; ++i) {
                it_.z_lower[i] += alpha_z * dzl[i];
                it_.z_upper[i] += alpha_z * dzu[i];
            }
            safeguard_multipliers();
            last_alpha_ = alpha;
            ++iterations_;
        }
    }

  private:
    // Filter line search on (||c||_1, barrier objective). Returns the accepted
    // primal step length (trial point in `trial`) or -1.
    double line_search(const std::vector<double>& dw, const std::vector<double>& c, const Eigen::VectorXd& rhs,
                       double alpha_max, double tau, std::vector<double>& trial) {
        const double theta0 = l1(c);
        const double phi0 = barrier_value(it_.w);
        double dphi = 0.0;
        for (int i = 0; i < nw_; ++i) dphi += barrier_grad_[i] * dw[i];

        trial.assign(std::size_t(nw_), 0.0);
        bool tiny = true;
        for (int i = 0; i < nw_; ++i)
            if (std::abs(dw[i]) > kTinyStep * (1.0 + std::abs(it_.w[i]))) tiny = false;
        if (tiny) {
            for (int i = 0; i < nw_; ++i) trial[i] = it_.w[i] + alpha_max * dw[i];
            return alpha_max;
        }

        double alpha_min = kGammaAlpha * kGammaTheta;
        if (dphi < 0.0) {
            alpha_min = std::min(kGammaTheta, kGammaPhi * theta0 / -dphi);
            if (theta0 <= theta_min_)
                alpha_min = std::min(alpha_min, kDelta * std::pow(theta0, kSTheta) / std::pow(-dphi, kSPhi));
            alpha_min *= kGammaAlpha;
        }

        bool f_type = false;
        auto acceptable = [&](double theta, double phi, double alpha) {
            if (!std::isfinite(phi) || theta > theta_max_) return false;
            for (const auto& [ft, fp] : filter_)
                if (theta >= ft && phi >= fp) return false;
            const bool switching =
                dphi < 0.0 && alpha * std::pow(-dphi, kSPhi) > kDelta * std::pow(theta0, kSTheta);
            if (theta0 <= theta_min_ && switching) {
                f_type = true;
                return phi <= phi0 + kEtaPhi * alpha * dphi;
            }
            f_type = false;
            return theta <= (1.0 - kGammaTheta) * theta0 || phi <= phi0 - kGammaPhi * theta0;
        };

        std::vector<double> c_trial(static_cast<std::size_t>(m_));
        double alpha = alpha_max;
        bool accepted = false;
        for (bool first = true; !accepted; first = false, alpha *= 0.5) {
            if (alpha < std::max(alpha_min, kMinStep)) return -1.0;
            for (int i = 0; i < nw_; ++i) trial[i] = it_.w[i] + alpha * dw[i];
            bp_.constraints(trial, c_trial);
            const double theta = l1(c_trial);
            if (acceptable(theta, barrier_value(trial), alpha)) {
                accepted = true;
                break;
            }
            if (!first || theta < theta0 || m_ == 0) continue;
            // Second-order corrections: re-solve with the accumulated constraint values.
            std::vector<double> c_soc(static_cast<std::size_t>(m_));
            for (int r = 0; r < m_; ++r) c_soc[r] = alpha * c[r] + c_trial[r];
            double theta_prev = theta0;
            std::vector<double> t2(static_cast<std::size_t>(nw_)), c2(static_cast<std::size_t>(m_));
            for (int k = 0; k < kMaxSoc; ++k) {
                Eigen::VectorXd soc_rhs = rhs;
                for (int r = 0; r < m_; ++r) soc_rhs[nw_ + r] = -c_soc[r];
                const Eigen::VectorXd d = kkt_.solve(soc_rhs);
                const std::vector<double> dsoc(d.data(), d.data() + nw_);
                const double a = primal_fraction(it_.w, dsoc, tau);
                for (int i = 0; i < nw_; ++i) t2[i] = it_.w[i] + a * dsoc[i];
                bp_.constraints(t2, c2);
                const double theta2 = l1(c2);
                if (acceptable(theta2, barrier_value(t2), alpha)) {
                    trial = t2;
                    accepted = true;
                    break;
                }
                if (theta2 > kSocShrink * theta_prev) break;
                theta_prev = theta2;
                for (int r = 0; r < m_; ++r) c_soc[r] = a * c_soc[r] + c2[r];
            }
            if (accepted) break;
        }
        if (!f_type) filter_.emplace_back((1.0 - kGammaTheta) * theta0, phi0 - kGammaPhi * theta0);
        return alpha;
    }

    void initialize(std::span<const double> x_start) {
        it_.w = bp_.reduce(x_start);
        const auto& wl = bp_.lower();
        const auto& wu = bp_.upper();
        for (int i = 0; i < nw_; ++i) {
            const double lo = wl[i], hi = wu[i];
            if (finite(lo) && finite(hi)) {
                const double pl = std::min(kBoundPush * std::max(1.0, std::abs(lo)), kBoundFrac * (hi - lo));
                const double pu = std::min(kBoundPush * std::max(1.0, std::abs(hi)), kBoundFrac * (hi - lo));
                it_.w[i] = std::clamp(it_.w[i], lo + pl, hi - pu);
            } else if (finite(lo)) {
                it_.w[i] = std::max(it_.w[i], lo + kBoundPush * std::max(1.0, std::abs(lo)));
            } else if (finite(hi)) {
                it_.w[i] = std::min(it_.w[i], hi - kBoundPush * std::max(1.0, std::abs(hi)));
            }
        }
        it_.y.assign(std::size_t(m_), 0.0);
        it_.z_lower.assign(std::size_t(nw_), 0.0);
        it_.z_upper.assign(std::size_t(nw_), 0.0);
        for (int i = 0; i < nw_; ++i) {
            if (finite(wl[i])) it_.z_lower[i] = 1.0;
            if (finite(wu[i])) it_.z_upper[i] = 1.0;
        }
        mu_ = opt_.mu_init;
        last_alpha_ = 0.0;
        filter_.clear();
    }

    double primal_fraction(const std::vector<double>& w, const std::vector<double>& d, double tau) const {
        double alpha = 1.0;
        for (int i = 0; i < nw_; ++i) {
            if (d[i] < 0.0 && finite(bp_.lower()[i]))
                alpha = std::min(alpha, -tau * (w[i] - bp_.lower()[i]) / d[i]);
            if (d[i] > 0.0 && finite(bp_.upper()[i]))
                alpha = std::min(alpha, tau * (bp_.upper()[i] - w[i]) / d[i]);
        }
        return alpha;
    }

    // Objective plus log barrier and the linear damping of one-sided bounds.
    double barrier_value(const std::vector<double>& w) const {
        double phi = bp_.objective(w);
        for (int i = 0; i < nw_; ++i) {
            const bool lo = finite(bp_.lower()[i]), hi = finite(bp_.upper()[i]);
            if (lo) {
                const double gap = w[i] - bp_.lower()[i];
                if (!(gap > 0.0)) return kInf;
                phi -= mu_ * std::log(gap);
                if (!hi) phi += kDamping * mu_ * gap;
            }
            if (hi) {
                const double gap = bp_.upper()[i] - w[i];
                if (!(gap > 0.0)) return kInf;
                phi -= mu_ * std::log(gap);
                if (!lo) phi += kDamping * mu_ * gap;
            }
        }
        return phi;
    }

    void safeguard_multipliers() {
        for (int i = 0; i < nw_; ++i) {
            if (finite(bp_.lower()[i])) {
                const double gap = it_.w[i] - bp_.lower()[i];
                it_.z_lower[i] = std::clamp(it_.z_lower[i], mu_ / (kSigmaSafeguard * gap), kSigmaSafeguard * mu_ / gap);
            }
            if (finite(bp_.upper()[i])) {
                const double gap = bp_.upper()[i] - it_.w[i];
                it_.z_upper[i] = std::clamp(it_.z_upper[i], mu_ / (kSigmaSafeguard * gap), kSigmaSafeguard * mu_ / gap);
            }
        }
    }

    void trace_line(const std::vector<double>& c) const {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%4d  obj=% .10e  inf_pr=%.2e  inf_du=%.2e  mu=%.2e  alpha=%.2e  dw=%.1e\n",
                      iterations_, bp_.objective(it_.w), max_abs(c), last_dual_inf_, mu_, last_alpha_,
                      kkt_.delta_w());
        *opt_.trace << buf;
    }

    RunResult finish(Outcome outcome, double kkt_error) {
        return {outcome, bp_.expand(it_.w), it_.y, kkt_error, primal_inf_};
    }

    const BarrierProblem& bp_;
    const SolverOptions& opt_;
    int& iterations_;
    const int nw_;
    const int m_;
    Iterate it_;
    KktSystem kkt_;
    std::vector<double> barrier_grad_;
    std::vector<std::pair<double, double>> filter_;
    double theta_max_ = 0.0;
    double theta_min_ = 0.0;
    double mu_ = 0.1;
    double last_delta_w_ = 0.0;
    double last_alpha_ = 0.0;
    double last_dual_inf_ = 0.0;
    double primal_inf_ = 0.0;
};

// l1 distance of the row values from their bounds.
double row_violation(const NlpProblem& problem, std::span<const double> x) {
    double total = 0.0;
    for (const auto& row : problem.rows) {
        const double v = row.expr.value(x);
        total += std::max(0.0, row.lower - v) + std::max(0.0, v - row.upper);
    }
    return total;
}

// min sum(p + n) s.t. lower <= row(x) - p + n <= upper, p, n >= 0
NlpProblem elastic_problem(const NlpProblem& problem, std::span<const double> x) {
    NlpProblem e;
    e.layout.n_vars = problem.n_vars();
    e.lower = problem.lower;
    e.upper = problem.upper;
    e.start.assign(x.begin(), x.end());
    e.n_equalities = problem.n_equalities;
    e.maximize = false;
    for (const auto& row : problem.rows) {
        const double v = row.expr.value(x);
        const double above = finite(row.upper) ? std::max(0.0, v - row.upper) : 0.0;
        const double below = finite(row.lower) ? std::max(0.0, row.lower - v) : 0.0;
        const int p = e.layout.n_vars++;
        const int n = e.layout.n_vars++;
        e.lower.insert(e.lower.end(), {0.0, 0.0});
        e.upper.insert(e.upper.end(), {kInf, kInf});
        e.start.insert(e.start.end(), {above + 1e-2, below + 1e-2});
        ConstraintRow r = row;
        r.expr.add(p, -1.0).add(n, 1.0);
        e.rows.push_back(std::move(r));
        e.objective.add(p, 1.0).add(n, 1.0);
    }
    return e;
}

}  // namespace

Solution solve(const NlpProblem& problem, const SolverOptions& options) {
    options.check();
    Solution sol;
    for (int v = 0; v < problem.n_vars(); ++v)
        if (problem.lower[v] > problem.upper[v]) {
            sol.status = SolveStatus::infeasible_local;
            sol.x = problem.start;
            sol.message = "variable bounds are inconsistent";
            return sol;
        }
    for (const auto& row : problem.rows)
        if (row.lower > row.upper) {
            sol.status = SolveStatus::infeasible_local;
            sol.x = problem.start;
            sol.message = "row bounds are inconsistent";
            return sol;
        }

    BarrierProblem bp(problem);
    {
        const std::vector<double> fixed = bp.expand(bp.reduce(problem.start));
        for (int r : bp.constant_rows()) {
            const auto& row = problem.rows[std::size_t(r)];
            const double v = row.expr.value(fixed);
            const double excess = std::max(row.lower - v, v - row.upper);
            if (excess > options.infeasibility_tol) {
                sol.status = SolveStatus::infeasible_local;
                sol.x = fixed;
                sol.duals.assign(std::size_t(problem.n_rows()), 0.0);
                sol.primal_infeasibility = excess;
                sol.message = "row " + std::to_string(r) + " (" + to_string(row.kind) +
                              ") is violated by fixed variables";
                return sol;
            }
        }
    }
    int iterations = 0;
    std::vector<double> x0 = problem.start;
    RunResult res;
    const int max_restorations = options.allow_restoration ? 3 : 0;
    for (int restoration = 0;; ++restoration) {
        InteriorPoint ip(bp, options, iterations);
        res = ip.run(x0);
        if (res.outcome == Outcome::converged || restoration >= max_restorations) break;
        // A stalled or exhausted run may be locally infeasible: minimize the l1
        // violation from where it stopped and either classify or restart.
        SolverOptions eopt = options;
        eopt.allow_restoration = false;
        eopt.trace = nullptr;
        eopt.max_iter = std::max(200, options.max_iter);
        const NlpProblem elastic = elastic_problem(problem, res.x);
        const Solution es = solve(elastic, eopt);
        const std::vector<double> xe(es.x.begin(), es.x.begin() + problem.n_vars());
        const double violation = row_violation(problem, xe);
        if (es.status == SolveStatus::optimal && violation > options.infeasibility_tol) {
            sol.status = SolveStatus::infeasible_local;
            sol.x = xe;
            sol.duals.assign(std::size_t(problem.n_rows()), 0.0);
            sol.iterations = iterations;
            sol.objective = problem.objective.value(sol.x);
            sol.primal_infeasibility = violation;
            sol.max_kkt_residual = res.kkt_error;
            sol.message = "restoration converged to a point with l1 violation " + std::to_string(violation);
            return sol;
        }
        if (res.outcome == Outcome::iteration_limit) break;
        if (es.status != SolveStatus::optimal) break;
        x0 = xe;
    }

    sol.x = res.x;
    sol.duals = bp.expand_duals(res.y);
    sol.iterations = iterations;
    sol.objective = problem.objective.value(sol.x);
    sol.max_kkt_residual = res.kkt_error;
    sol.primal_infeasibility = res.primal_inf;
    switch (res.outcome) {
        case Outcome::converged: sol.status = SolveStatus::optimal; break;
        case Outcome::iteration_limit:
            sol.status = SolveStatus::iteration_limit;
            sol.message = "iteration limit reached";
            break;
        case Outcome::line_search_failed:
            sol.status = SolveStatus::numerical_error;
            sol.message = "line search failed";
            break;
        case Outcome::kkt_failed:
            sol.status = SolveStatus::numerical_error;
            sol.message = "singular KKT system after maximum regularization";
            break;
    }
    return sol;
}

}  // namespace doe
