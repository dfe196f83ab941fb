#include "cceval/pbcloss.hpp"

#include <cmath>

#include "cceval/errors.hpp"
#include "cceval/numeric.hpp"

namespace cceval {

namespace {

void check_pair(const Image& pred, const Image& gt) {
    if (pred.width != gt.width || pred.height != gt.height)
        throw ShapeMismatch("prediction and ground truth differ in shape");
    if (pred.empty())
        throw ShapeMismatch("empty images");
    if (pred.space != PixelSpace::Lab || gt.space != PixelSpace::Lab)
        throw InvariantViolation("loss operates on Lab images");
}

LabColor pixel(const Image& img, std::size_t i) {
    return {img.data[i * 3], img.data[i * 3 + 1], img.data[i * 3 + 2]};
}

double& lab_channel(LabColor& c, int i) {
    return i == 0 ? c.L : (i == 1 ? c.a : c.b);
}

} // namespace

void PbcParams::validate() const {
    if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0 || beta < 0 || gamma < 0)
        throw InvariantViolation("loss parameters must be non-negative");
}

double chroma_weight(double gt_chroma, const PbcParams& params) {
    params.validate();
    return 1.0 + params.beta * std::pow(gt_chroma / 128.0, params.gamma);
}

PbcTerms pbc_loss_terms(const Image& pred, const Image& gt,
                        const PbcParams& params) {
    params.validate();
    check_pair(pred, gt);
    const std::size_t n = pred.pixel_count();
    CompensatedSum de, ab, ll;
    for (std::size_t i = 0; i < n; ++i) {
        const LabColor p = pixel(pred, i);
        const LabColor g = pixel(gt, i);
        de.add(ciede2000(p, g));
        const double da = p.a - g.a;
        const double db = p.b - g.b;
        ab.add(chroma_weight(chroma(g), params) * (da * da + db * db));
        const double dl = p.L - g.L;
        ll.add(dl * dl);
    }
    return {de.value() / n, ab.value() / n, ll.value() / n};
}

double pbc_loss(const Image& pred, const Image& gt, const PbcParams& params) {
    const PbcTerms t = pbc_loss_terms(pred, gt, params);
    return params.lambda1 * t.de00 + params.lambda2 * t.chromatic +
           params.lambda3 * t.lightness;
}

std::vector<double> pbc_loss_map(const Image& pred, const Image& gt,
                                 const PbcParams& params) {
    params.validate();
    check_pair(pred, gt);
    const std::size_t n = pred.pixel_count();
    std::vector<double> map(n);
    for (std::size_t i = 0; i < n; ++i) {
        const LabColor p = pixel(pred, i);
        const LabColor g = pixel(gt, i);
        const double da = p.a - g.a;
        const double db = p.b - g.b;
        const double dl = p.L - g.L;
        map[i] = params.lambda1 * ciede2000(p, g) +
                 params.lambda2 * chroma_weight(chroma(g), params) *
                     (da * da + db * db) +
                 params.lambda3 * dl * dl;
    }
    return map;
}

std::vector<double> pbc_quadratic_gradient(const Image& pred, const Image& gt,
                                           const PbcParams& params) {
    params.validate();
    check_pair(pred, gt);
    const std::size_t n = pred.pixel_count();
    std::vector<double> grad(n * 3);
    for (std::size_t i = 0; i < n; ++i) {
        const LabColor p = pixel(pred, i);
        const LabColor g = pixel(gt, i);
        const double w = chroma_weight(chroma(g), params);
        grad[i * 3] = params.lambda3 * 2.0 * (p.L - g.L) / n;
        grad[i * 3 + 1] = params.lambda2 * w * 2.0 * (p.a - g.a) / n;
        grad[i * 3 + 2] = params.lambda2 * w * 2.0 * (p.b - g.b) / n;
    }
    return grad;
}

std::vector<double> pbc_loss_gradient(const Image& pred, const Image& gt,
                                      const PbcParams& params, double step) {
    std::vector<double> grad = pbc_quadratic_gradient(pred, gt, params);
    if (params.lambda1 == 0.0)
        return grad;
    // The dE00 term couples each prediction pixel only to itself, so the
    // finite difference is per pixel and channel.
    const std::size_t n = pred.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        const LabColor g = pixel(gt, i);
        for (int c = 0; c < 3; ++c) {
            LabColor hi = pixel(pred, i);
            LabColor lo = hi;
            lab_channel(hi, c) += step;
            lab_channel(lo, c) -= step;
            const double d =
                (ciede2000(hi, g) - ciede2000(lo, g)) / (2.0 * step);
            grad[i * 3 + c] += params.lambda1 * d / n;
        }
    }
    return grad;
}

} // namespace cceval
