#pragma once

#include "rbsde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <vector>

namespace rbsde::detail {

/// Solves y = (cont + dt * rhs(y)) / (1 + r dt) componentwise by Jacobi-Picard
/// iteration, starting from the values already in `y`. `rhs(y, out)` fills the
/// driver value for every component. Returns the iteration count.
template <class Rhs>
std::size_t implicit_step(std::span<const double> cont, Rhs&& rhs, double dt, double r,
                          std::span<double> y, double tol, std::size_t max_iters,
                          std::vector<double>& scratch) {
    const std::size_t m = y.size();
    scratch.resize(m);
    const double denom = 1.0 + r * dt;
    for (std::size_t it = 1; it <= max_iters; ++it) {
        rhs(std::span<const double>(y.data(), m), std::span<double>(scratch.data(), m));
        double diff = 0.0;
        double scale = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double next = (cont[i] + dt * scratch[i]) / denom;
            diff = std::max(diff, std::abs(next - y[i]));
            scale = std::max(scale, std::abs(next));
            y[i] = next;
        }
        if (!std::isfinite(diff)) {
            throw ConvergenceError("implicit step produced a non-finite value");
        }
        if (diff <= tol * scale) return it;
    }
    std::ostringstream os;
    os << "implicit step did not converge within " << max_iters << " iterations";
    throw ConvergenceError(os.str());
}

inline void check_step_size(double dt, double lipschitz, double r, std::size_t step) {
    if (!(dt * (lipschitz + r) < 1.0)) {
        std::ostringstream os;
        os << "dt = " << dt << " too large at step " << step << ": dt * (L + r) = "
           << dt * (lipschitz + r) << " must be below 1 (L = " << lipschitz << ")";
        throw StepSizeError(os.str());
    }
}

}  // namespace rbsde::detail
