#include "cceval/color.hpp"

#include <cmath>
#include <numbers>

namespace cceval {

namespace {

// IEC 61966-2-1 primary chromaticities.
constexpr double kRedX = 0.64, kRedY = 0.33;
constexpr double kGreenX = 0.30, kGreenY = 0.60;
constexpr double kBlueX = 0.15, kBlueY = 0.06;

// CIELAB two-piece function threshold, (6/29)^3.
constexpr double kLabEps = 216.0 / 24389.0;
// Slope of the linear piece, (29/6)^2 / 3.
constexpr double kLabKappa = 841.0 / 108.0;

double lab_f(double t) {
    if (t > kLabEps)
        return std::cbrt(t);
    return kLabKappa * t + 4.0 / 29.0;
}

double lab_f_inv(double u) {
    const double u3 = u * u * u;
    if (u3 > kLabEps)
        return u3;
    return (u - 4.0 / 29.0) / kLabKappa;
}

// Analytic 3x3 inverse via the adjugate.
void invert3(const double m[3][3], double out[3][3]) {
    const double c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    const double c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    const double c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    const double det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    out[0][0] = c00 / det;
    out[1][0] = c01 / det;
    out[2][0] = c02 / det;
    out[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    out[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    out[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    out[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    out[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    out[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
}

double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }
double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }

} // namespace

double srgb_decode_channel(double v) {
    if (v <= 0.04045)
        return v / 12.92;
    return std::pow((v + 0.055) / 1.055, 2.4);
}

double srgb_encode_channel(double v) {
    if (v <= 0.0031308)
        return v * 12.92;
    return 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

LinearRgb decode_srgb(const EncodedRgb& c) {
    return {srgb_decode_channel(c.r), srgb_decode_channel(c.g),
            srgb_decode_channel(c.b)};
}

EncodedRgb encode_srgb(const LinearRgb& c) {
    return {srgb_encode_channel(c.r), srgb_encode_channel(c.g),
            srgb_encode_channel(c.b)};
}

ColorTransform::ColorTransform(const WhitePoint& wp) : wp_(wp) {
    // Columns are the primaries' XYZ at unit luminance; scale each so the
    // RGB unit cube maps (1,1,1) onto the adopted white.
    const double prim[3][3] = {
        {kRedX / kRedY, kGreenX / kGreenY, kBlueX / kBlueY},
        {1.0, 1.0, 1.0},
        {(1.0 - kRedX - kRedY) / kRedY, (1.0 - kGreenX - kGreenY) / kGreenY,
         (1.0 - kBlueX - kBlueY) / kBlueY}};
    double prim_inv[3][3];
    invert3(prim, prim_inv);
    double scale[3];
    for (int i = 0; i < 3; ++i) {
        scale[i] = prim_inv[i][0] * wp.x + prim_inv[i][1] * wp.y +
                   prim_inv[i][2] * wp.z;
    }
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            rgb_to_xyz_[r][c] = prim[r][c] * scale[c];
    invert3(rgb_to_xyz_, xyz_to_rgb_);
}

XyzColor ColorTransform::linear_to_xyz(const LinearRgb& c) const {
    const double* m0 = rgb_to_xyz_[0];
    const double* m1 = rgb_to_xyz_[1];
    const double* m2 = rgb_to_xyz_[2];
    return {m0[0] * c.r + m0[1] * c.g + m0[2] * c.b,
            m1[0] * c.r + m1[1] * c.g + m1[2] * c.b,
            m2[0] * c.r + m2[1] * c.g + m2[2] * c.b};
}

LinearRgb ColorTransform::xyz_to_linear(const XyzColor& c) const {
    const double* m0 = xyz_to_rgb_[0];
    const double* m1 = xyz_to_rgb_[1];
    const double* m2 = xyz_to_rgb_[2];
    return {m0[0] * c.x + m0[1] * c.y + m0[2] * c.z,
            m1[0] * c.x + m1[1] * c.y + m1[2] * c.z,
            m2[0] * c.x + m2[1] * c.y + m2[2] * c.z};
}

LabColor ColorTransform::xyz_to_lab(const XyzColor& c) const {
    const double fx = lab_f(c.x / wp_.x);
    const double fy = lab_f(c.y / wp_.y);
    const double fz = lab_f(c.z / wp_.z);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

XyzColor ColorTransform::lab_to_xyz(const LabColor& c) const {
    const double fy = (c.L + 16.0) / 116.0;
    const double fx = fy + c.a / 500.0;
    const double fz = fy - c.b / 200.0;
    return {lab_f_inv(fx) * wp_.x, lab_f_inv(fy) * wp_.y,
            lab_f_inv(fz) * wp_.z};
}

LabColor ColorTransform::linear_to_lab(const LinearRgb& c) const {
    return xyz_to_lab(linear_to_xyz(c));
}

LinearRgb ColorTransform::lab_to_linear(const LabColor& c) const {
    return xyz_to_linear(lab_to_xyz(c));
}

XyzColor linear_to_xyz(const LinearRgb& c, const WhitePoint& wp) {
    return ColorTransform(wp).linear_to_xyz(c);
}

LinearRgb xyz_to_linear(const XyzColor& c, const WhitePoint& wp) {
    return ColorTransform(wp).xyz_to_linear(c);
}

LabColor xyz_to_lab(const XyzColor& c, const WhitePoint& wp) {
    return ColorTransform(wp).xyz_to_lab(c);
}

XyzColor lab_to_xyz(const LabColor& c, const WhitePoint& wp) {
    return ColorTransform(wp).lab_to_xyz(c);
}

LabColor linear_to_lab(const LinearRgb& c, const WhitePoint& wp) {
    return ColorTransform(wp).linear_to_lab(c);
}

LinearRgb lab_to_linear(const LabColor& c, const WhitePoint& wp) {
    return ColorTransform(wp).lab_to_linear(c);
}

double chroma(const LabColor& c) { return std::hypot(c.a, c.b); }

bool in_unit_gamut(const LinearRgb& c, double eps) {
    return c.r >= -eps && c.r <= 1.0 + eps && c.g >= -eps &&
           c.g <= 1.0 + eps && c.b >= -eps && c.b <= 1.0 + eps;
}

double ciede2000(const LabColor& lab1, const LabColor& lab2) {
    const double c1 = chroma(lab1);
    const double c2 = chroma(lab2);
    const double c_mean = 0.5 * (c1 + c2);

    const double c_mean7 = std::pow(c_mean, 7.0);
    const double pow25_7 = 6103515625.0; // 25^7
    const double g = 0.5 * (1.0 - std::sqrt(c_mean7 / (c_mean7 + pow25_7)));

    const double ap1 = (1.0 + g) * lab1.a;
    const double ap2 = (1.0 + g) * lab2.a;
    const double cp1 = std::hypot(ap1, lab1.b);
    const double cp2 = std::hypot(ap2, lab2.b);

    auto hue_deg = [](double ap, double b) {
        if (ap == 0.0 && b == 0.0)
            return 0.0;
        double h = rad_to_deg(std::atan2(b, ap));
        if (h < 0.0)
            h += 360.0;
        return h;
    };
    const double hp1 = hue_deg(ap1, lab1.b);
    const double hp2 = hue_deg(ap2, lab2.b);

    const double dl = lab2.L - lab1.L;
    const double dc = cp2 - cp1;

    double dh = 0.0;
    if (cp1 * cp2 != 0.0) {
        dh = hp2 - hp1;
        if (dh > 180.0)
            dh -= 360.0;
        else if (dh < -180.0)
            dh += 360.0;
    }
    const double dH = 2.0 * std::sqrt(cp1 * cp2) * std::sin(deg_to_rad(dh) / 2.0);

    const double l_mean = 0.5 * (lab1.L + lab2.L);
    const double cp_mean = 0.5 * (cp1 + cp2);

    double hp_mean = hp1 + hp2;
    if (cp1 * cp2 != 0.0) {
        if (std::fabs(hp1 - hp2) <= 180.0)
            hp_mean = 0.5 * (hp1 + hp2);
        else if (hp1 + hp2 < 360.0)
            hp_mean = 0.5 * (hp1 + hp2 + 360.0);
        else
            hp_mean = 0.5 * (hp1 + hp2 - 360.0);
    }

    const double t = 1.0 - 0.17 * std::cos(deg_to_rad(hp_mean - 30.0)) +
                     0.24 * std::cos(deg_to_rad(2.0 * hp_mean)) +
                     0.32 * std::cos(deg_to_rad(3.0 * hp_mean + 6.0)) -
                     0.20 * std::cos(deg_to_rad(4.0 * hp_mean - 63.0));

    const double hp_off = (hp_mean - 275.0) / 25.0;
    const double dtheta = 30.0 * std::exp(-hp_off * hp_off);

    const double cp_mean7 = std::pow(cp_mean, 7.0);
    const double rc = 2.0 * std::sqrt(cp_mean7 / (cp_mean7 + pow25_7));
    const double rt = -std::sin(deg_to_rad(2.0 * dtheta)) * rc;

    const double l_off = l_mean - 50.0;
    const double sl = 1.0 + 0.015 * l_off * l_off / std::sqrt(20.0 + l_off * l_off);
    const double sc = 1.0 + 0.045 * cp_mean;
    const double sh = 1.0 + 0.015 * cp_mean * t;

    const double rl = dl / sl;
    const double rcq = dc / sc;
    const double rh = dH / sh;
    return std::sqrt(rl * rl + rcq * rcq + rh * rh + rt * rcq * rh);
}

} // namespace cceval
