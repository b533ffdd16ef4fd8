#pragma once

// Shared fixtures and independent reference computations for the tests.

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <string>

#include "doe/netmodel.h"
#include "doe/phasecalc.h"

namespace testsupport {

using doe::Complex;

inline std::filesystem::path data(const std::string& name) { return std::filesystem::path(DOE_DATA_DIR) / name; }

inline doe::NetworkCase fixture(const std::string& name) {
    const auto json = data(name + ".json");
    const auto csv = data(name + "_loads.csv");
    return doe::load_network(json, std::filesystem::exists(csv) ? csv : std::filesystem::path{});
}

inline const Complex kA = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);

// Complex symmetrical-component transform, written without any of the
// library's real-arithmetic shortcuts.
inline double fortescue_vuf(const doe::PhaseVec& u) {
    const Complex u1 = (u[0] + kA * u[1] + kA * kA * u[2]) / 3.0;
    const Complex u2 = (u[0] + kA * kA * u[1] + kA * u[2]) / 3.0;
    return std::abs(u2) / std::abs(u1);
}

// A diag(z0, z1, z1) A^-1 with explicit matrix products.
inline doe::ComplexMatrix3 fortescue_phase_matrix(Complex z0, Complex z1) {
    const Complex a = kA, a2 = kA * kA;
    const Complex A[3][3] = {{1.0, 1.0, 1.0}, {1.0, a2, a}, {1.0, a, a2}};
    const Complex Ainv[3][3] = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, {1.0 / 3.0, a / 3.0, a2 / 3.0},
                                {1.0 / 3.0, a2 / 3.0, a / 3.0}};
    const Complex d[3] = {z0, z1, z1};
    doe::ComplexMatrix3 z{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) z[i][j] += A[i][k] * d[k] * Ainv[k][j];
    return z;
}

// Single-phase line from a stiff 1 pu source to a bus with one injection at
// unity power factor. With U_n = V e^{jt} and I = (P / V) e^{jt} the source
// condition |U_n - Z I| = 1 reads (V - R P / V)^2 + (X P / V)^2 = 1.

// Injection at which |U_n| reaches v (smaller root of the quadratic in P).
inline double two_bus_voltage_limit(double r, double x, double v) {
    const double z2 = r * r + x * x;
    const double a = z2 / (v * v), b = -2.0 * r, c = v * v - 1.0;
    return (-b - std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
}

// Injection at which |I| reaches i_max: P = i_max V with V = R i_max + sqrt(1 - (X i_max)^2).
inline double two_bus_current_limit(double r, double x, double i_max) {
    const double v = r * i_max + std::sqrt(1.0 - x * x * i_max * i_max);
    return i_max * v;
}

}  // namespace testsupport
