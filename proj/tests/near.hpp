#pragma once

#include <cmath>
#include <ostream>

// Absolute-tolerance comparand for CHECK(x == Near(v, tol)). doctest's
// Approx only scales its epsilon relative to the operands, which cannot
// express "within 1e-12 of zero" or a fixed decimal tolerance.
struct Near {
    double value;
    double tol;

    Near(double value, double tol) : value(value), tol(tol) {}
};

inline bool operator==(double lhs, const Near& rhs) {
    return std::fabs(lhs - rhs.value) <= rhs.tol;
}
inline bool operator==(const Near& lhs, double rhs) { return rhs == lhs; }
inline bool operator!=(double lhs, const Near& rhs) { return !(lhs == rhs); }
inline bool operator!=(const Near& lhs, double rhs) { return !(rhs == lhs); }

inline std::ostream& operator<<(std::ostream& os, const Near& n) {
    return os << n.value << " +/- " << n.tol;
}
