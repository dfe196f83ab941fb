#include "cceval/image.hpp"

#include "cceval/errors.hpp"

namespace cceval {

Image Image::filled(int width, int height, PixelSpace space, double c0,
                    double c1, double c2) {
    Image img;
    img.width = width;
    img.height = height;
    img.space = space;
    img.data.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < img.data.size(); i += 3) {
        img.data[i] = c0;
        img.data[i + 1] = c1;
        img.data[i + 2] = c2;
    }
    return img;
}

MaskImage MaskImage::filled(int width, int height, std::uint8_t value) {
    MaskImage m;
    m.width = width;
    m.height = height;
    m.labels.assign(static_cast<std::size_t>(width) * height, value);
    return m;
}

namespace {

Image convert(const Image& src, PixelSpace dst, const WhitePoint& wp) {
    if (src.space == dst)
        return src;
    Image out = src;
    out.space = dst;
    const ColorTransform xf(wp);
    const std::size_t n = src.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        const double* p = &src.data[i * 3];
        double v0 = p[0], v1 = p[1], v2 = p[2];
        // Route through linear.
        if (src.space == PixelSpace::SrgbEncoded) {
            v0 = srgb_decode_channel(v0);
            v1 = srgb_decode_channel(v1);
            v2 = srgb_decode_channel(v2);
        } else if (src.space == PixelSpace::Lab) {
            const LinearRgb c = xf.lab_to_linear({v0, v1, v2});
            v0 = c.r;
            v1 = c.g;
            v2 = c.b;
        }
        if (dst == PixelSpace::SrgbEncoded) {
            v0 = srgb_encode_channel(v0);
            v1 = srgb_encode_channel(v1);
            v2 = srgb_encode_channel(v2);
        } else if (dst == PixelSpace::Lab) {
            const LabColor c = xf.linear_to_lab({v0, v1, v2});
            v0 = c.L;
            v1 = c.a;
            v2 = c.b;
        }
        double* q = &out.data[i * 3];
        q[0] = v0;
        q[1] = v1;
        q[2] = v2;
    }
    return out;
}

} // namespace

Image to_linear(const Image& src, const WhitePoint& wp) {
    return convert(src, PixelSpace::Linear, wp);
}

Image to_srgb_encoded(const Image& src, const WhitePoint& wp) {
    return convert(src, PixelSpace::SrgbEncoded, wp);
}

Image to_lab(const Image& src, const WhitePoint& wp) {
    return convert(src, PixelSpace::Lab, wp);
}

} // namespace cceval
