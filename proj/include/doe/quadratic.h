#pragma once

#include <span>
#include <vector>

namespace doe {

struct LinearTerm {
    int var;
    double coef;
};

/// coef * x[i] * x[j] with i <= j.
struct QuadraticTerm {
    int i;
    int j;
    double coef;
};

/// Lower-triangle Hessian entry (row >= col).
struct HessianEntry {
    int row;
    int col;
    double value;
};

/// constant + sum(linear) + sum(quadratic). Every constraint and objective of
/// the envelope NLP has this form, so Hessians are constant.
struct QuadraticExpr {
    double constant = 0.0;
    std::vector<LinearTerm> linear;
    std::vector<QuadraticTerm> quadratic;

    QuadraticExpr& add(int var, double coef);
    QuadraticExpr& add(int i, int j, double coef);
    QuadraticExpr& add_constant(double c);

    [[nodiscard]] bool is_affine() const { return quadratic.empty(); }
    [[nodiscard]] double value(std::span<const double> x) const;
    /// Appends (var, d/dx_var) pairs; a variable may appear more than once.
    void gradient(std::span<const double> x, std::vector<LinearTerm>& out) const;
    void add_gradient(std::span<const double> x, double scale, std::span<double> dense) const;
    /// Constant Hessian in lower-triangle form, duplicates allowed.
    [[nodiscard]] std::vector<HessianEntry> hessian() const;
    /// Largest variable index referenced, -1 for a constant.
    [[nodiscard]] int max_var() const;
};

}  // namespace doe
