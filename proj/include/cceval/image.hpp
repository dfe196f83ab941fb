#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cceval/color.hpp"

namespace cceval {

// What the channel values of an Image mean.
enum class PixelSpace {
    SrgbEncoded, // sRGB transfer applied, nominal [0,1]
    Linear,      // linear intensity, nominal [0,1]
    Lab,         // CIELAB; channels are L, a, b
};

// Three-channel float image, row major, channels interleaved.
struct Image {
    int width = 0;
    int height = 0;
    PixelSpace space = PixelSpace::Linear;
    std::vector<double> data;

    static Image filled(int width, int height, PixelSpace space,
                        double c0 = 0.0, double c1 = 0.0, double c2 = 0.0);

    bool empty() const { return width == 0 || height == 0; }
    std::size_t pixel_count() const {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }

    double& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    double at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }

    void set_pixel(int x, int y, double c0, double c1, double c2) {
        double* p = &data[(static_cast<std::size_t>(y) * width + x) * 3];
        p[0] = c0;
        p[1] = c1;
        p[2] = c2;
    }
};

// Single-channel label image. 0 is background; small positive values name
// regions of interest.
struct MaskImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> labels;

    static MaskImage filled(int width, int height, std::uint8_t value = 0);

    std::uint8_t at(int x, int y) const {
        return labels[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t& at(int x, int y) {
        return labels[static_cast<std::size_t>(y) * width + x];
    }
};

// Space conversions over whole images. Each returns a new image tagged with
// the destination space; converting to the space the image is already in is
// a copy.
Image to_linear(const Image& src, const WhitePoint& wp = kD65);
Image to_srgb_encoded(const Image& src, const WhitePoint& wp = kD65);
Image to_lab(const Image& src, const WhitePoint& wp = kD65);

} // namespace cceval
