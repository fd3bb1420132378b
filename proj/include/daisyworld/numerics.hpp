#pragma once

#include <cmath>
#include <utility>

#include "daisyworld/errors.hpp"

namespace daisyworld::numerics {

/// Bisection on a sign change of `f` over [lo, hi]. Stops when the bracket is
/// narrower than `x_tol` or cannot be split further in floating point.
template <class F>
double bisect_root(F&& f, double lo, double hi, double x_tol = 0.0) {
    double f_lo = f(lo);
    const double f_hi = f(hi);
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;
    if ((f_lo < 0.0) == (f_hi < 0.0)) {
        throw BracketError(BracketError::Reason::no_root, "bisect_root: endpoints have the same sign");
    }
    for (int i = 0; i < 400; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi || hi - lo <= x_tol) break;
        const double f_mid = f(mid);
        if (f_mid == 0.0) return mid;
        if ((f_mid < 0.0) == (f_lo < 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Bisection on a monotone predicate: `pred(lo)` false, `pred(hi)` true.
/// Returns the final bracket.
template <class P>
std::pair<double, double> bisect_predicate(P&& pred, double lo, double hi, double x_tol) {
    while (hi - lo > x_tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (pred(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return {lo, hi};
}

}  // namespace daisyworld::numerics
