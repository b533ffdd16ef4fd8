#pragma once

// Primal-dual interior-point method for the at-most-quadratic envelope NLP.
//
// Fixed variables (lower == upper) are removed, inequality rows receive a
// bounded slack, and each Newton step solves the symmetric KKT system
//
//   [ W + Sigma + dw I    A^T  ] [dw]     [ grad phi + A^T y ]
//   [ A                 -dc I  ] [dy] = - [ c(w)             ]
//
// with an inertia-corrected sparse LDL^T factorization. The barrier parameter
// decreases monotonically; steps obey the fraction-to-boundary rule and a filter
// line search on (constraint violation, barrier objective).

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "doe/nlp.h"

namespace doe {

struct SolverOptions {
    double tol_kkt = 1e-8;
    int max_iter = 300;
    double mu_init = 0.1;
    double mu_shrink = 0.2;
    double step_fraction = 0.995;
    double regularization_min = 1e-10;
    double infeasibility_tol = 1e-6;  // l1 violation above which a restoration result means infeasible
    bool allow_restoration = true;
    std::ostream* trace = nullptr;  // one line per iteration when set

    /// Throws std::invalid_argument when an option is out of range.
    void check() const;
};

enum class SolveStatus { optimal, infeasible_local, iteration_limit, numerical_error };
std::string to_string(SolveStatus status);

struct Solution {
    std::vector<double> x;      // all NLP variables, fixed ones included
    std::vector<double> duals;  // one per row, sign convention of L = f + y^T c (f minimized)
    double objective = 0.0;     // in the problem's natural sense
    SolveStatus status = SolveStatus::numerical_error;
    int iterations = 0;
    double max_kkt_residual = 0.0;
    double primal_infeasibility = 0.0;
    std::string message;
};

/// Interior-point view of an NlpProblem: w = (free variables, inequality slacks).
class BarrierProblem {
  public:
    explicit BarrierProblem(const NlpProblem& problem);

    [[nodiscard]] int n_primal() const { return n_x_ + n_s_; }
    [[nodiscard]] int n_free() const { return n_x_; }
    [[nodiscard]] int n_dual() const { return int(rows_.size()); }

    [[nodiscard]] const std::vector<double>& lower() const { return wl_; }
    [[nodiscard]] const std::vector<double>& upper() const { return wu_; }

    /// Objective to minimize.
    [[nodiscard]] double objective(std::span<const double> w) const;
    void objective_gradient(std::span<const double> w, std::span<double> grad) const;
    /// c(w): equality rows minus their value, inequality rows minus their slack.
    void constraints(std::span<const double> w, std::span<double> c) const;
    /// Row-major Jacobian triplets (row, column, value) with a fixed sparsity pattern.
    void jacobian(std::span<const double> w, std::vector<Eigen::Triplet<double>>& out) const;
    /// Lower triangle of sum_r y_r H_r + H_f, fixed pattern.
    void hessian(std::span<const double> y, std::vector<Eigen::Triplet<double>>& out) const;

    /// Free variables and slacks from a full NLP vector.
    [[nodiscard]] std::vector<double> reduce(std::span<const double> x) const;
    /// Full NLP vector from w.
    [[nodiscard]] std::vector<double> expand(std::span<const double> w) const;
    /// Per-row duals of the NLP (zero for rows without free variables).
    [[nodiscard]] std::vector<double> expand_duals(std::span<const double> y) const;
    /// NLP rows that only involve fixed variables; they are not part of c(w).
    [[nodiscard]] const std::vector<int>& constant_rows() const { return constant_rows_; }

  private:
    const NlpProblem& problem_;
    int n_x_ = 0;
    int n_s_ = 0;
    std::vector<int> free_;       // reduced -> NLP index
    std::vector<int> reduced_;    // NLP -> reduced index or -1
    std::vector<double> fixed_x_;
    std::vector<double> wl_, wu_;
    std::vector<QuadraticExpr> rows_;
    std::vector<double> row_rhs_;  // equality value
    std::vector<int> row_slack_;   // slack position in w, -1 for equalities
    std::vector<int> row_map_;     // NLP row -> compiled row or -1
    std::vector<int> constant_rows_;
    QuadraticExpr objective_;      // minimized
    std::vector<std::vector<HessianEntry>> row_hessian_;
    std::vector<HessianEntry> objective_hessian_;
};

struct Iterate {
    std::vector<double> w;
    std::vector<double> y;
    std::vector<double> z_lower;
    std::vector<double> z_upper;
};

struct Inertia {
    int positive = 0;
    int negative = 0;
    int zero = 0;
    bool operator==(const Inertia&) const = default;
};

/// Regularized KKT matrix (full symmetric storage) with its factorization.
class KktSystem {
  public:
    KktSystem();
    ~KktSystem();
    KktSystem(KktSystem&&) noexcept;
    KktSystem& operator=(KktSystem&&) noexcept;

    [[nodiscard]] const Eigen::SparseMatrix<double>& matrix() const { return full_; }
    [[nodiscard]] Inertia inertia() const { return inertia_; }
    [[nodiscard]] double delta_w() const { return delta_w_; }
    [[nodiscard]] double delta_c() const { return delta_c_; }
    [[nodiscard]] bool ok() const { return ok_; }

    /// Solves the system without the -dc I term (GMRES preconditioned by the factorization).
    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs, double* residual = nullptr) const;

  private:
    friend class KktAssembler;
    struct Factor;
    std::unique_ptr<Factor> factor_;
    Eigen::SparseMatrix<double> lower_;
    Eigen::SparseMatrix<double> full_;
    int n_primal_ = 0;
    int n_dual_ = 0;
    Inertia inertia_;
    double delta_w_ = 0.0;
    double delta_c_ = 0.0;
    bool ok_ = false;
};

/// Builds and factorizes the KKT matrix at `it`, raising the primal
/// regularization until the inertia is (n_primal, n_dual, 0). `last_delta_w`
/// seeds the search. The result has ok() == false when no regularization up to
/// the budget gives the right inertia.
KktSystem kkt_assemble(const BarrierProblem& bp, const Iterate& it, double mu, const SolverOptions& options,
                       double last_delta_w = 0.0);

Solution solve(const NlpProblem& problem, const SolverOptions& options = {});

}  // namespace doe
