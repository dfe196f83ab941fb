#include "cceval/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cceval/errors.hpp"
#include "cceval/numeric.hpp"

namespace cceval {

namespace {

// Single-channel working buffer for the filtering below.
struct Channel {
    int width = 0;
    int height = 0;
    std::vector<double> v;

    double at(int x, int y) const {
        return v[static_cast<std::size_t>(y) * width + x];
    }
};

Channel extract_channel(const Image& img, int c) {
    Channel ch;
    ch.width = img.width;
    ch.height = img.height;
    ch.v.resize(img.pixel_count());
    for (std::size_t i = 0; i < ch.v.size(); ++i)
        ch.v[i] = img.data[i * 3 + c];
    return ch;
}

// Symmetric reflection (a b c | c b a) for any out-of-range index.
int reflect_index(int i, int n) {
    if (n == 1)
        return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0)
        i += period;
    if (i >= n)
        i = period - 1 - i;
    return i;
}

// Sampled Gaussian (derivative) kernel, truncated at radius ceil(3*sigma).
// Normalization fixes the discrete responses: order 0 preserves constants
// (sum 1), order 1 has zero sum and unit response to a unit ramp, order 2
// has zero sum and response 2 to t^2. Zero sums make constant-offset
// invariance of the derivative estimators exact.
std::vector<double> gaussian_kernel(double sigma, int order) {
    if (sigma == 0.0) {
        if (order == 0)
            return {1.0};
        if (order == 1)
            return {0.5, 0.0, -0.5};
        return {1.0, -2.0, 1.0};
    }
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    const int len = 2 * r + 1;
    std::vector<double> k(len);
    const double s2 = sigma * sigma;
    for (int t = 0; t <= r; ++t) {
        const double g = std::exp(-0.5 * t * t / s2);
        double a = g, b = g;
        if (order == 1) {
            a = t / s2 * g; // tap at -t
            b = -a;
        } else if (order == 2) {
            a = (t * t - s2) / (s2 * s2) * g;
            b = a;
        }
        k[r - t] = a;
        k[r + t] = b;
    }
    if (order == 1)
        k[r] = 0.0;

    if (order == 0) {
        double sum = 0.0;
        for (double x : k)
            sum += x;
        for (double& x : k)
            x /= sum;
    } else if (order == 1) {
        // Odd symmetry already gives zero sum; fix ramp response to 1.
        double resp = 0.0;
        for (int t = -r; t <= r; ++t)
            resp += -t * k[r + t];
        for (double& x : k)
            x /= resp;
    } else {
        double sum = 0.0;
        for (double x : k)
            sum += x;
        for (double& x : k)
            x -= sum / len;
        double resp = 0.0;
        for (int t = -r; t <= r; ++t)
            resp += t * t * k[r + t];
        for (double& x : k)
            x *= 2.0 / resp;
    }
    return k;
}

Channel convolve_x(const Channel& in, const std::vector<double>& k) {
    if (k.size() == 1 && k[0] == 1.0)
        return in;
    const int r = static_cast<int>(k.size()) / 2;
    Channel out;
    out.width = in.width;
    out.height = in.height;
    out.v.resize(in.v.size());
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            double acc = 0.0;
            for (int t = -r; t <= r; ++t)
                acc += k[r + t] * in.at(reflect_index(x - t, in.width), y);
            out.v[static_cast<std::size_t>(y) * in.width + x] = acc;
        }
    }
    return out;
}

Channel convolve_y(const Channel& in, const std::vector<double>& k) {
    if (k.size() == 1 && k[0] == 1.0)
        return in;
    const int r = static_cast<int>(k.size()) / 2;
    Channel out;
    out.width = in.width;
    out.height = in.height;
    out.v.resize(in.v.size());
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            double acc = 0.0;
            for (int t = -r; t <= r; ++t)
                acc += k[r + t] * in.at(x, reflect_index(y - t, in.height));
            out.v[static_cast<std::size_t>(y) * in.width + x] = acc;
        }
    }
    return out;
}

// |D^n f_sigma| per pixel. Order 1 is the gradient magnitude; order 2 the
// rotation-invariant combination of second derivatives.
Channel derivative_magnitude(const Channel& ch, double sigma, int order) {
    const std::vector<double> g0 = gaussian_kernel(sigma, 0);
    if (order == 0) {
        Channel out = convolve_y(convolve_x(ch, g0), g0);
        for (double& x : out.v)
            x = std::fabs(x);
        return out;
    }
    const std::vector<double> g1 = gaussian_kernel(sigma, 1);
    if (order == 1) {
        const Channel fx = convolve_y(convolve_x(ch, g1), g0);
        const Channel fy = convolve_x(convolve_y(ch, g1), g0);
        Channel out = fx;
        for (std::size_t i = 0; i < out.v.size(); ++i)
            out.v[i] = std::hypot(fx.v[i], fy.v[i]);
        return out;
    }
    const std::vector<double> g2 = gaussian_kernel(sigma, 2);
    const Channel fxx = convolve_y(convolve_x(ch, g2), g0);
    const Channel fyy = convolve_x(convolve_y(ch, g2), g0);
    const Channel fxy = convolve_y(convolve_x(ch, g1), g1);
    Channel out = fxx;
    for (std::size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = std::sqrt(fxx.v[i] * fxx.v[i] + 4.0 * fxy.v[i] * fxy.v[i] +
                             fyy.v[i] * fyy.v[i]);
    return out;
}

} // namespace

const char* to_string(EstimatorMethod m) {
    switch (m) {
    case EstimatorMethod::GrayWorld:
        return "gray-world";
    case EstimatorMethod::WhitePatch:
        return "white-patch";
    case EstimatorMethod::ShadesOfGray:
        return "shades-of-gray";
    case EstimatorMethod::GrayEdge:
        return "gray-edge";
    case EstimatorMethod::WeightedGrayEdge:
        return "weighted-gray-edge";
    }
    return "?";
}

EstimatorParams EstimatorParams::defaults(EstimatorMethod m) {
    const double inf = std::numeric_limits<double>::infinity();
    switch (m) {
    case EstimatorMethod::GrayWorld:
        return {m, 0, 1.0, 0.0, 1.0};
    case EstimatorMethod::WhitePatch:
        return {m, 0, inf, 0.0, 1.0};
    case EstimatorMethod::ShadesOfGray:
        return {m, 0, 6.0, 0.0, 1.0};
    case EstimatorMethod::GrayEdge:
        return {m, 1, 1.0, 2.0, 1.0};
    case EstimatorMethod::WeightedGrayEdge:
        return {m, 1, 1.0, 2.0, 1.0};
    }
    return {};
}

void EstimatorParams::validate() const {
    if (derivative_order < 0 || derivative_order > 2)
        throw InvariantViolation("derivative order must be 0, 1 or 2");
    if (!(minkowski_p >= 1.0))
        throw InvariantViolation("minkowski p must be >= 1");
    if (!(smoothing_sigma >= 0.0))
        throw InvariantViolation("smoothing sigma must be >= 0");
    if (!(edge_weight_exponent >= 0.0))
        throw InvariantViolation("edge weight exponent must be >= 0");

    switch (method) {
    case EstimatorMethod::GrayWorld:
        if (derivative_order != 0 || minkowski_p != 1.0 || smoothing_sigma != 0.0)
            throw InvariantViolation("gray-world requires n=0, p=1, sigma=0");
        break;
    case EstimatorMethod::WhitePatch:
        if (derivative_order != 0 || !std::isinf(minkowski_p) ||
            smoothing_sigma != 0.0)
            throw InvariantViolation("white-patch requires n=0, p=inf, sigma=0");
        break;
    case EstimatorMethod::ShadesOfGray:
        if (derivative_order != 0)
            throw InvariantViolation("shades-of-gray requires n=0");
        break;
    case EstimatorMethod::GrayEdge:
    case EstimatorMethod::WeightedGrayEdge:
        if (derivative_order < 1)
            throw InvariantViolation("edge methods require n >= 1");
        break;
    }
}

IlluminantEstimate estimate_illuminant(const Image& img,
                                       const EstimatorParams& params) {
    params.validate();
    if (img.empty())
        throw InvariantViolation("estimate needs a non-empty image");
    if (img.space != PixelSpace::Linear)
        throw InvariantViolation("estimate expects a linear image");

    bool any_nonzero = false;
    for (double v : img.data) {
        if (v != 0.0) {
            any_nonzero = true;
            break;
        }
    }
    if (!any_nonzero)
        throw AllZeroImage("every pixel is zero");

    Channel mag[3];
    for (int c = 0; c < 3; ++c) {
        mag[c] = derivative_magnitude(extract_channel(img, c),
                                      params.smoothing_sigma,
                                      params.derivative_order);
    }
    double mag_peak = 0.0;
    for (const Channel& ch : mag)
        for (double v : ch.v)
            mag_peak = std::max(mag_peak, v);

    // Convolving a constant image leaves rounding residue around 1e-16 of
    // the pixel scale rather than exact zeros, so edge-free input is
    // detected by a noise floor relative to the brightest pixel.
    if (params.derivative_order > 0) {
        double pixel_peak = 0.0;
        for (double v : img.data)
            pixel_peak = std::max(pixel_peak, std::fabs(v));
        if (mag_peak <= 1e-12 * pixel_peak)
            throw DegenerateEstimate("image has no edges");
    }

    // WeightedGrayEdge: spatial weights from the pooled gradient magnitude,
    // raised to kappa and renormalized to sum 1. Renormalization keeps the
    // estimate exposure invariant.
    std::vector<double> weights;
    if (params.method == EstimatorMethod::WeightedGrayEdge) {
        Channel grad[3];
        for (int c = 0; c < 3; ++c) {
            grad[c] = derivative_magnitude(extract_channel(img, c),
                                           params.smoothing_sigma, 1);
        }
        weights.resize(img.pixel_count());
        CompensatedSum wsum;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            const double pooled =
                std::sqrt(grad[0].v[i] * grad[0].v[i] +
                          grad[1].v[i] * grad[1].v[i] +
                          grad[2].v[i] * grad[2].v[i]);
            weights[i] = std::pow(pooled, params.edge_weight_exponent);
            wsum.add(weights[i]);
        }
        const double total = wsum.value();
        if (total <= 0.0)
            throw DegenerateEstimate("weight field is identically zero");
        for (double& w : weights)
            w /= total;
    }

    double e[3];
    if (std::isinf(params.minkowski_p)) {
        for (int c = 0; c < 3; ++c) {
            double mx = 0.0;
            for (std::size_t i = 0; i < mag[c].v.size(); ++i) {
                if (!weights.empty() && weights[i] <= 0.0)
                    continue;
                mx = std::max(mx, mag[c].v[i]);
            }
            e[c] = mx;
        }
    } else {
        // Factor out the peak magnitude so large p neither overflows nor
        // underflows into a zero sum; the shared factor cancels in the
        // direction.
        if (mag_peak == 0.0)
            throw DegenerateEstimate("derivative field is identically zero");
        for (int c = 0; c < 3; ++c) {
            CompensatedSum s;
            for (std::size_t i = 0; i < mag[c].v.size(); ++i) {
                const double term =
                    std::pow(mag[c].v[i] / mag_peak, params.minkowski_p);
                s.add(weights.empty() ? term : weights[i] * term);
            }
            e[c] = mag_peak * std::pow(s.value(), 1.0 / params.minkowski_p);
        }
    }

    const double norm = std::sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2]);
    if (!(norm > 0.0) || !std::isfinite(norm))
        throw DegenerateEstimate("estimate has no usable direction");
    return {LinearRgb{e[0] / norm, e[1] / norm, e[2] / norm}};
}

Image von_kries_correct(const Image& img, const IlluminantEstimate& e) {
    if (img.space != PixelSpace::Linear)
        throw InvariantViolation("correction expects a linear image");
    const double d[3] = {e.direction.r, e.direction.g, e.direction.b};
    for (double v : d) {
        if (!(v > 0.0))
            throw ZeroChannelIlluminant("illuminant channel is not positive");
    }
    const double root3 = std::sqrt(3.0);
    Image out = img;
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        out.data[i * 3] = img.data[i * 3] / (d[0] * root3);
        out.data[i * 3 + 1] = img.data[i * 3 + 1] / (d[1] * root3);
        out.data[i * 3 + 2] = img.data[i * 3 + 2] / (d[2] * root3);
    }
    return out;
}

LabColor mean_chromaticity(const Image& img, const WhitePoint& wp) {
    if (img.empty())
        throw InvariantViolation("mean of an empty image");
    if (img.space != PixelSpace::Linear)
        throw InvariantViolation("mean chromaticity expects a linear image");
    CompensatedSum sums[3];
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        sums[0].add(img.data[i * 3]);
        sums[1].add(img.data[i * 3 + 1]);
        sums[2].add(img.data[i * 3 + 2]);
    }
    const LinearRgb mean{sums[0].value() / n, sums[1].value() / n,
                         sums[2].value() / n};
    return linear_to_lab(mean, wp);
}

} // namespace cceval
