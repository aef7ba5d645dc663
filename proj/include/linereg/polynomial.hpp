#pragma once

#include "linereg/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace linereg {

/// c4 s^4 + c3 s^3 + c2 s^2 + c1 s + c0.
struct Quartic {
    double c4 = 0.0, c3 = 0.0, c2 = 0.0, c1 = 0.0, c0 = 0.0;

    double operator()(double s) const { return (((c4 * s + c3) * s + c2) * s + c1) * s + c0; }
    double derivative(double s) const { return ((4.0 * c4 * s + 3.0 * c3) * s + 2.0 * c2) * s + c1; }

    double max_abs_coeff() const {
        return std::max({std::abs(c4), std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
    }
};

namespace detail {

template <int N>
void companion_real_roots(const std::array<double, 5> &monic_desc, std::vector<double> &out) {
    // monic_desc = [1, a_{N-1}, ..., a_0] (first N+1 entries used)
    Eigen::Matrix<double, N, N> C = Eigen::Matrix<double, N, N>::Zero();
    for (int j = 0; j < N; ++j)
        C(0, j) = -monic_desc[static_cast<std::size_t>(j + 1)];
    for (int i = 1; i < N; ++i)
        C(i, i - 1) = 1.0;
    Eigen::EigenSolver<Eigen::Matrix<double, N, N>> es(C, false);
    for (int i = 0; i < N; ++i) {
        const auto ev = es.eigenvalues()(i);
        if (std::abs(ev.imag()) <= 1e-8 * (1.0 + std::abs(ev.real())))
            out.push_back(ev.real());
    }
}

} // namespace detail

/// All real roots of a polynomial of degree <= 4. Vanishing leading
/// coefficients reduce the degree; each root gets one Newton step and roots
/// closer than 1e-10 are merged. Throws InvalidInput for the zero polynomial.
inline std::vector<double> solve_quartic(const Quartic &q) {
    const std::array<double, 5> c = {q.c4, q.c3, q.c2, q.c1, q.c0};
    const double scale = q.max_abs_coeff();
    if (!(scale > 0.0))
        throw InvalidInput("solve_quartic: zero polynomial");

    std::size_t lead = 0;
    while (lead < 4 && std::abs(c[lead]) <= 1e-13 * scale)
        ++lead;
    const int degree = 4 - static_cast<int>(lead);

    std::vector<double> roots;
    if (degree == 0)
        return roots;
    std::array<double, 5> monic{};
    for (int k = 0; k <= degree; ++k)
        monic[static_cast<std::size_t>(k)] = c[lead + static_cast<std::size_t>(k)] / c[lead];

    switch (degree) {
    case 1:
        roots.push_back(-monic[1]);
        break;
    case 2: {
        const double b = monic[1], cc = monic[2];
        const double disc = b * b - 4.0 * cc;
        if (disc >= 0.0) {
            // Numerically stable pair.
            const double sq = std::sqrt(disc);
            const double qq = -0.5 * (b + (b >= 0.0 ? sq : -sq));
            if (qq != 0.0) {
                roots.push_back(qq);
                roots.push_back(cc / qq);
            } else {
                roots.push_back(0.0);
            }
        }
        break;
    }
    case 3:
        detail::companion_real_roots<3>(monic, roots);
        break;
    default:
        detail::companion_real_roots<4>(monic, roots);
        break;
    }

    for (double &r : roots) {
        const double d = q.derivative(r);
        if (d != 0.0) {
            const double next = r - q(r) / d;
            if (std::isfinite(next) && std::abs(q(next)) <= std::abs(q(r)))
                r = next;
        }
    }
    std::sort(roots.begin(), roots.end());
    std::vector<double> merged;
    for (double r : roots)
        if (merged.empty() || std::abs(r - merged.back()) > 1e-10)
            merged.push_back(r);
    return merged;
}

} // namespace linereg
