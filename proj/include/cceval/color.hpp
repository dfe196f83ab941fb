#pragma once

namespace cceval {

// Plain color value types. Channels are doubles throughout; integer pixel
// formats are normalized at the I/O boundary.

struct EncodedRgb {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
};

struct LinearRgb {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
};

struct XyzColor {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

struct LabColor {
    double L = 0.0;
    double a = 0.0;
    double b = 0.0;
};

// Adopted white in XYZ with y normalized to 1.
struct WhitePoint {
    double x = 0.95047;
    double y = 1.0;
    double z = 1.08883;
};

// D65, 2 degree observer.
inline constexpr WhitePoint kD65{0.95047, 1.0, 1.08883};

// sRGB transfer function, one channel at a time.
double srgb_decode_channel(double v);
double srgb_encode_channel(double v);

LinearRgb decode_srgb(const EncodedRgb& c);
EncodedRgb encode_srgb(const LinearRgb& c);

// RGB <-> XYZ <-> Lab conversions for one white point. The RGB <-> XYZ
// matrix is derived from the IEC 61966-2-1 chromaticities with the adopted
// white as the RGB space's white, so equal-channel inputs land exactly on
// the neutral axis. Construct once and reuse when converting many pixels.
class ColorTransform {
public:
    explicit ColorTransform(const WhitePoint& wp = kD65);

    const WhitePoint& white() const { return wp_; }

    XyzColor linear_to_xyz(const LinearRgb& c) const;
    LinearRgb xyz_to_linear(const XyzColor& c) const;
    LabColor xyz_to_lab(const XyzColor& c) const;
    XyzColor lab_to_xyz(const LabColor& c) const;
    LabColor linear_to_lab(const LinearRgb& c) const;

    // Inverse of linear_to_lab. Out-of-gamut Lab inputs produce channels
    // outside [0,1]; the caller decides whether to clip or reject (see
    // in_unit_gamut).
    LinearRgb lab_to_linear(const LabColor& c) const;

private:
    WhitePoint wp_;
    double rgb_to_xyz_[3][3];
    double xyz_to_rgb_[3][3];
};

// One-shot convenience wrappers. Prefer ColorTransform in per-pixel loops.
XyzColor linear_to_xyz(const LinearRgb& c, const WhitePoint& wp = kD65);
LinearRgb xyz_to_linear(const XyzColor& c, const WhitePoint& wp = kD65);
LabColor xyz_to_lab(const XyzColor& c, const WhitePoint& wp = kD65);
XyzColor lab_to_xyz(const LabColor& c, const WhitePoint& wp = kD65);
LabColor linear_to_lab(const LinearRgb& c, const WhitePoint& wp = kD65);
LinearRgb lab_to_linear(const LabColor& c, const WhitePoint& wp = kD65);

double chroma(const LabColor& c);

bool in_unit_gamut(const LinearRgb& c, double eps = 0.0);

// CIEDE2000 color difference with the parametric factors kL = kC = kH = 1,
// including the Sharma, Cui and Dang (2005) hue handling corrections.
double ciede2000(const LabColor& lab1, const LabColor& lab2);

} // namespace cceval
