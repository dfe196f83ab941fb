#pragma once

#include <vector>

#include "cceval/image.hpp"

namespace cceval {

// Weights of the balanced color objective:
//   loss = lambda1 * mean(dE00_i)
//        + lambda2 * mean(w_i * ((da_i)^2 + (db_i)^2))
//        + lambda3 * mean((dL_i)^2)
// with w_i = 1 + beta * (c_i / 128)^gamma driven by the ground-truth
// chroma c_i, so rare saturated pixels are not washed out by the average.
struct PbcParams {
    double lambda1 = 1.0;
    double lambda2 = 0.5;
    double lambda3 = 0.2;
    double beta = 2.0;
    double gamma = 2.0;

    void validate() const; // all fields >= 0
};

double chroma_weight(double gt_chroma, const PbcParams& params = {});

// Scalar loss over two Lab images of equal shape.
double pbc_loss(const Image& pred, const Image& gt,
                const PbcParams& params = {});

// Per-pixel contributions (each pixel's weighted term sum; the scalar loss
// is their mean).
std::vector<double> pbc_loss_map(const Image& pred, const Image& gt,
                                 const PbcParams& params = {});

// Unweighted term means, for diagnostics and ablation.
struct PbcTerms {
    double de00 = 0.0;       // mean dE00
    double chromatic = 0.0;  // mean w*((da)^2+(db)^2)
    double lightness = 0.0;  // mean (dL)^2
};
PbcTerms pbc_loss_terms(const Image& pred, const Image& gt,
                        const PbcParams& params = {});

// d(loss)/d(pred) for the two quadratic terms only, closed form. Layout
// matches Image::data: three values (dL, da, db) per pixel.
std::vector<double> pbc_quadratic_gradient(const Image& pred, const Image& gt,
                                           const PbcParams& params = {});

// Full gradient: quadratic terms in closed form plus the dE00 term by
// per-pixel central finite differences with the given step.
std::vector<double> pbc_loss_gradient(const Image& pred, const Image& gt,
                                      const PbcParams& params = {},
                                      double step = 1e-4);

} // namespace cceval
