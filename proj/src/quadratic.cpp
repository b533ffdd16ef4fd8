#include "doe/quadratic.h"

#include <algorithm>
#include <utility>

namespace doe {

QuadraticExpr& QuadraticExpr::add(int var, double coef) {
    linear.push_back({var, coef});
    return *this;
}

QuadraticExpr& QuadraticExpr::add(int i, int j, double coef) {
    if (i > j) std::swap(i, j);
    quadratic.push_back({i, j, coef});
    return *this;
}

QuadraticExpr& QuadraticExpr::add_constant(double c) {
    constant += c;
    return *this;
}

double QuadraticExpr::value(std::span<const double> x) const {
    double v = constant;
    for (const auto& t : linear) v += t.coef * x[std::size_t(t.var)];
    for (const auto& t : quadratic) v += t.coef * x[std::size_t(t.i)] * x[std::size_t(t.j)];
    return v;
}

void QuadraticExpr::gradient(std::span<const double> x, std::vector<LinearTerm>& out) const {
    for (const auto& t : linear) out.push_back(t);
    for (const auto& t : quadratic) {
        if (t.i == t.j) {
            out.push_back({t.i, 2.0 * t.coef * x[std::size_t(t.i)]});
        } else {
            out.push_back({t.i, t.coef * x[std::size_t(t.j)]});
            out.push_back({t.j, t.coef * x[std::size_t(t.i)]});
        }
    }
}

void QuadraticExpr::add_gradient(std::span<const double> x, double scale, std::span<double> dense) const {
    for (const auto& t : linear) dense[std::size_t(t.var)] += scale * t.coef;
    for (const auto& t : quadratic) {
        if (t.i == t.j) {
            dense[std::size_t(t.i)] += scale * 2.0 * t.coef * x[std::size_t(t.i)];
        } else {
            dense[std::size_t(t.i)] += scale * t.coef * x[std::size_t(t.j)];
            dense[std::size_t(t.j)] += scale * t.coef * x[std::size_t(t.i)];
        }
    }
}

std::vector<HessianEntry> QuadraticExpr::hessian() const {
    std::vector<HessianEntry> h;
    h.reserve(quadratic.size());
    for (const auto& t : quadratic) {
        if (t.i == t.j)
            h.push_back({t.i, t.i, 2.0 * t.coef});
        else
            h.push_back({t.j, t.i, t.coef});
    }
    return h;
}

int QuadraticExpr::max_var() const {
    int m = -1;
    for (const auto& t : linear) m = std::max(m, t.var);
    for (const auto& t : quadratic) m = std::max({m, t.i, t.j});
    return m;
}

}  // namespace doe
