#pragma once

#include "cceval/color.hpp"
#include "cceval/image.hpp"

namespace cceval {

enum class EstimatorMethod {
    GrayWorld,
    WhitePatch,
    ShadesOfGray,
    GrayEdge,
    WeightedGrayEdge,
};

const char* to_string(EstimatorMethod m);

// All five estimators are one parameterized family:
//
//   e_c = ( sum_x w(x) |D^n f_sigma,c(x)|^p )^(1/p)
//
// with D^n the Gaussian-derivative magnitude of order n at scale sigma
// (n = 0 is the smoothed channel itself), w(x) = 1 except for
// WeightedGrayEdge, and the result normalized to a unit direction.
struct EstimatorParams {
    EstimatorMethod method = EstimatorMethod::GrayWorld;
    int derivative_order = 0;
    double minkowski_p = 1.0; // >= 1; infinity means channel-wise maximum
    double smoothing_sigma = 0.0;
    double edge_weight_exponent = 1.0; // WeightedGrayEdge only

    // Canonical settings per method: GrayWorld (0, 1, 0), WhitePatch
    // (0, inf, 0), ShadesOfGray (0, 6, 0), GrayEdge (1, 1, 2),
    // WeightedGrayEdge (1, 1, 2, kappa = 1).
    static EstimatorParams defaults(EstimatorMethod m);

    // Throws InvariantViolation on out-of-range values or settings the
    // method does not admit (e.g. GrayWorld with p != 1).
    void validate() const;
};

struct IlluminantEstimate {
    LinearRgb direction; // unit Euclidean norm, all components >= 0
};

IlluminantEstimate estimate_illuminant(const Image& img,
                                       const EstimatorParams& params);

// Diagonal (von Kries) correction: output_c = input_c / (e_c * sqrt(3)).
// A pixel equal to the illuminant direction maps to equal channels.
Image von_kries_correct(const Image& img, const IlluminantEstimate& e);

// CIELAB position of the per-channel mean of a linear image.
LabColor mean_chromaticity(const Image& img, const WhitePoint& wp = kD65);

} // namespace cceval
