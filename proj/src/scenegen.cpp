#include "cceval/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cceval/errors.hpp"
#include "cceval/numeric.hpp"

namespace cceval {

namespace {

const char* kChannelNames[3] = {"r", "g", "b"};

double channel(const LinearRgb& c, int i) {
    return i == 0 ? c.r : (i == 1 ? c.g : c.b);
}

void set_channel(LinearRgb& c, int i, double v) {
    (i == 0 ? c.r : (i == 1 ? c.g : c.b)) = v;
}

// Reflectance must land in [0,1]; tiny negative round-trip residue is
// clamped, anything real is an error.
LinearRgb checked_reflectance(LinearRgb refl, const char* what) {
    for (int c = 0; c < 3; ++c) {
        double v = channel(refl, c);
        if (v < 0.0 && v > -1e-9)
            v = 0.0;
        if (v < 0.0 || v > 1.0) {
            throw OutOfGamut(std::string(what) + " demands reflectance " +
                             std::to_string(v) + " in channel " +
                             kChannelNames[c]);
        }
        set_channel(refl, c, v);
    }
    return refl;
}

LinearRgb divide_by_light(const LinearRgb& rendered, const LinearRgb& light,
                          const char* what) {
    LinearRgb refl{rendered.r / light.r, rendered.g / light.g,
                   rendered.b / light.b};
    return checked_reflectance(refl, what);
}

// Unit a*b* direction opposite the illuminant's chromatic offset from
// neutral; zero for an achromatic light (the manipulations become vacuous).
struct AbDirection {
    double a = 0.0;
    double b = 0.0;
};

AbDirection opposing_direction(const IlluminantSpec& illum,
                               const WhitePoint& wp) {
    const LabColor lab = linear_to_lab(illum.color, wp);
    const double c = std::hypot(lab.a, lab.b);
    if (c < 1e-9)
        return {};
    return {-lab.a / c, -lab.b / c};
}

IlluminantSpec normalized_light(std::string name, double r, double g,
                                double b) {
    const double n = std::sqrt(r * r + g * g + b * b);
    return {std::move(name), {r / n, g / n, b / n}};
}

LinearRgb neutral_direction() {
    const double k = 1.0 / std::sqrt(3.0);
    return {k, k, k};
}

} // namespace

void SceneSpec::validate() const {
    if (rows <= 0 || cols <= 0 || patch_px <= 0)
        throw InvariantViolation("scene grid dimensions must be positive");
    if (rows * cols > 255)
        throw InvariantViolation("patch count exceeds the 8-bit mask range");
    if (static_cast<int>(reflectance.size()) != rows * cols)
        throw InvariantViolation("reflectance count does not match the grid");
    for (const LinearRgb& r : reflectance) {
        if (r.r < 0 || r.r > 1 || r.g < 0 || r.g > 1 || r.b < 0 || r.b > 1)
            throw InvariantViolation("patch reflectance outside [0,1]");
    }
    if (target_index < 0 || target_index >= patch_count())
        throw InvariantViolation("target index outside the grid");
    for (int idx : surround_indices) {
        if (idx < 0 || idx >= patch_count())
            throw InvariantViolation("surround index outside the grid");
    }
    if (bright_index != -1 && (bright_index < 0 || bright_index >= patch_count()))
        throw InvariantViolation("bright index outside the grid");
}

IlluminantSpec named_illuminant(std::string_view name) {
    if (name == "neutral")
        return {"neutral", neutral_direction()};
    if (name == "blue")
        return normalized_light("blue", 0.62, 0.88, 1.45);
    if (name == "yellow")
        return normalized_light("yellow", 1.35, 1.00, 0.52);
    if (name == "red")
        return normalized_light("red", 1.40, 0.85, 0.95);
    if (name == "green")
        return normalized_light("green", 0.70, 1.25, 0.85);
    throw ParseError("unknown illuminant name: " + std::string(name));
}

const std::vector<std::string>& illuminant_names() {
    static const std::vector<std::string> names{"neutral", "blue", "yellow",
                                                "red", "green"};
    return names;
}

const char* to_string(MechanismKind kind) {
    switch (kind) {
    case MechanismKind::Baseline:
        return "baseline";
    case MechanismKind::LocalSurround:
        return "local-surround";
    case MechanismKind::MaximumFlux:
        return "maximum-flux";
    case MechanismKind::SpatialMeanAddObjects:
        return "spatial-mean-add-objects";
    case MechanismKind::SpatialMeanChangeReflectances:
        return "spatial-mean-change-reflectances";
    }
    return "?";
}

std::optional<MechanismKind> parse_mechanism(std::string_view text) {
    for (MechanismKind k :
         {MechanismKind::Baseline, MechanismKind::LocalSurround,
          MechanismKind::MaximumFlux, MechanismKind::SpatialMeanAddObjects,
          MechanismKind::SpatialMeanChangeReflectances}) {
        if (text == to_string(k))
            return k;
    }
    return std::nullopt;
}

void MechanismSpec::validate() const {
    switch (kind) {
    case MechanismKind::Baseline:
        break;
    case MechanismKind::LocalSurround:
        if (!surround_color)
            throw InvariantViolation("local-surround needs a surround color");
        break;
    case MechanismKind::MaximumFlux:
        if (!bright_color)
            throw InvariantViolation("maximum-flux needs a bright color");
        break;
    case MechanismKind::SpatialMeanAddObjects:
        if (added_patches <= 0)
            throw InvariantViolation("add-objects needs a patch count");
        if (magnitude < 0)
            throw InvariantViolation("shift magnitude must be >= 0");
        break;
    case MechanismKind::SpatialMeanChangeReflectances:
        if (magnitude < 0)
            throw InvariantViolation("shift magnitude must be >= 0");
        break;
    }
}

RenderResult render(const SceneSpec& scene, const IlluminantSpec& illum) {
    scene.validate();
    const int w = scene.cols * scene.patch_px;
    const int h = scene.rows * scene.patch_px;
    RenderResult out;
    out.image = Image::filled(w, h, PixelSpace::Linear);
    out.gt_reflectance = Image::filled(w, h, PixelSpace::Linear);
    out.masks = MaskImage::filled(w, h, 0);
    for (int py = 0; py < h; ++py) {
        const int row = py / scene.patch_px;
        for (int px = 0; px < w; ++px) {
            const int col = px / scene.patch_px;
            const int idx = row * scene.cols + col;
            const LinearRgb& refl = scene.reflectance[idx];
            out.image.set_pixel(px, py, refl.r * illum.color.r,
                                refl.g * illum.color.g,
                                refl.b * illum.color.b);
            out.gt_reflectance.set_pixel(px, py, refl.r, refl.g, refl.b);
            out.masks.at(px, py) = static_cast<std::uint8_t>(idx + 1);
        }
    }
    return out;
}

SceneSpec apply_mechanism(const SceneSpec& scene, const MechanismSpec& mech,
                          const IlluminantSpec& illum, const WhitePoint& wp) {
    scene.validate();
    mech.validate();
    SceneSpec out = scene;

    switch (mech.kind) {
    case MechanismKind::Baseline:
        break;

    case MechanismKind::LocalSurround: {
        for (int idx : scene.surround_indices) {
            out.reflectance[idx] = divide_by_light(
                *mech.surround_color, illum.color, "surround constant");
        }
        break;
    }

    case MechanismKind::MaximumFlux: {
        if (scene.bright_index < 0)
            throw InvariantViolation("scene declares no bright patch");
        out.reflectance[scene.bright_index] = divide_by_light(
            *mech.bright_color, illum.color, "bright constant");
        break;
    }

    case MechanismKind::SpatialMeanAddObjects: {
        const AbDirection dir = opposing_direction(illum, wp);
        // Base the added colors on a mid gray as it appears under the
        // illuminant, pushed along the opposing direction; a little seeded
        // lightness jitter keeps the new patches from being one flat block.
        const LabColor base = linear_to_lab({0.4 * illum.color.r,
                                             0.4 * illum.color.g,
                                             0.4 * illum.color.b},
                                            wp);
        const int new_rows =
            (mech.added_patches + scene.cols - 1) / scene.cols;
        std::mt19937_64 rng(scene.seed ^ 0x5bd1e995u);
        std::uniform_real_distribution<double> jitter(-4.0, 4.0);
        for (int i = 0; i < new_rows * scene.cols; ++i) {
            const LabColor lab{base.L + jitter(rng),
                               base.a + mech.magnitude * dir.a,
                               base.b + mech.magnitude * dir.b};
            const LinearRgb rendered = lab_to_linear(lab, wp);
            out.reflectance.push_back(
                divide_by_light(rendered, illum.color, "added patch"));
        }
        out.rows += new_rows;
        break;
    }

    case MechanismKind::SpatialMeanChangeReflectances: {
        if (scene.patch_count() < 2)
            throw InvariantViolation("nothing but the target to rescale");
        const AbDirection dir = opposing_direction(illum, wp);
        // Patch areas are equal, so the rendered scene mean is the mean
        // over patches of reflectance * light.
        CompensatedSum sum[3];
        for (const LinearRgb& r : scene.reflectance) {
            sum[0].add(r.r * illum.color.r);
            sum[1].add(r.g * illum.color.g);
            sum[2].add(r.b * illum.color.b);
        }
        const int n = scene.patch_count();
        const LinearRgb mean{sum[0].value() / n, sum[1].value() / n,
                             sum[2].value() / n};
        const LabColor mean_lab = linear_to_lab(mean, wp);
        const LabColor wanted_lab{mean_lab.L,
                                  mean_lab.a + mech.magnitude * dir.a,
                                  mean_lab.b + mech.magnitude * dir.b};
        const LinearRgb wanted = lab_to_linear(wanted_lab, wp);
        // Per channel: target stays, every other patch scales by s_c so the
        // new rendered mean hits `wanted` exactly.
        const LinearRgb& tr = scene.reflectance[scene.target_index];
        for (int c = 0; c < 3; ++c) {
            const double light = channel(illum.color, c);
            const double target_part = channel(tr, c) * light;
            const double rest = sum[c].value() - target_part;
            if (rest <= 0.0)
                throw InvariantViolation("non-target patches reflect nothing");
            const double s = (channel(wanted, c) * n - target_part) / rest;
            for (int i = 0; i < n; ++i) {
                if (i == scene.target_index)
                    continue;
                LinearRgb& r = out.reflectance[i];
                set_channel(r, c, channel(scene.reflectance[i], c) * s);
            }
        }
        for (int i = 0; i < n; ++i) {
            if (i == scene.target_index)
                continue;
            out.reflectance[i] =
                checked_reflectance(out.reflectance[i], "rescaled patch");
        }
        break;
    }
    }
    return out;
}

CompetitorSet make_competitor_set(const SceneSpec& scene,
                                  const IlluminantSpec& illum,
                                  const WhitePoint& wp) {
    scene.validate();
    const LinearRgb neutral = neutral_direction();
    const LinearRgb& target = scene.reflectance[scene.target_index];

    // T reflects under `illum` the light the target reflects under neutral.
    const LinearRgb lit_neutral{target.r * neutral.r, target.g * neutral.g,
                                target.b * neutral.b};
    const LinearRgb refl_t =
        divide_by_light(lit_neutral, illum.color, "tristimulus match");

    // Positions are the competitors' appearances under the neutral light.
    const ColorTransform xf(wp);
    const LabColor pos_r = xf.linear_to_lab(
        {target.r * neutral.r, target.g * neutral.g, target.b * neutral.b});
    const LabColor pos_t = xf.linear_to_lab(
        {refl_t.r * neutral.r, refl_t.g * neutral.g, refl_t.b * neutral.b});

    auto lerp = [&](double u) {
        return LabColor{pos_r.L + u * (pos_t.L - pos_r.L),
                        pos_r.a + u * (pos_t.a - pos_r.a),
                        pos_r.b + u * (pos_t.b - pos_r.b)};
    };

    CompetitorSet comps;
    comps.illuminant_id = illum.name;
    comps.at(CompetitorLabel::R) = pos_r;
    comps.at(CompetitorLabel::S1) = lerp(1.0 / 3.0);
    comps.at(CompetitorLabel::S2) = lerp(2.0 / 3.0);
    comps.at(CompetitorLabel::T) = pos_t;
    comps.at(CompetitorLabel::O) = lerp(-1.0 / 3.0);
    return comps;
}

std::vector<CompetitorRender> competitor_scene_set(
    const SceneSpec& scene, const CompetitorSet& comps,
    const std::vector<int>& positions, const IlluminantSpec& illum,
    const WhitePoint& wp) {
    scene.validate();
    comps.validate();
    for (int pos : positions) {
        if (pos < 0 || pos >= scene.patch_count())
            throw InvariantViolation("competitor position outside the grid");
    }

    // Recover each competitor's reflectance from its neutral appearance.
    const ColorTransform xf(wp);
    const double root3 = std::sqrt(3.0);
    std::array<LinearRgb, 5> refl;
    for (std::size_t i = 0; i < 5; ++i) {
        const LinearRgb lit = xf.lab_to_linear(comps.positions[i]);
        refl[i] = checked_reflectance(
            {lit.r * root3, lit.g * root3, lit.b * root3},
            to_string(kCompetitorLabels[i]));
    }

    std::vector<CompetitorRender> out;
    out.reserve(5 * positions.size());
    for (std::size_t i = 0; i < 5; ++i) {
        for (int pos : positions) {
            SceneSpec variant = scene;
            variant.reflectance[pos] = refl[i];
            RenderResult r = render(variant, illum);
            CompetitorRender cr;
            cr.label = kCompetitorLabels[i];
            cr.position = pos;
            cr.image = std::move(r.image);
            // Only the competitor patch is labeled, with 1..5 = R..O.
            cr.masks = MaskImage::filled(cr.image.width, cr.image.height, 0);
            const int row = pos / scene.cols;
            const int col = pos % scene.cols;
            for (int y = row * scene.patch_px; y < (row + 1) * scene.patch_px; ++y)
                for (int x = col * scene.patch_px; x < (col + 1) * scene.patch_px; ++x)
                    cr.masks.at(x, y) = static_cast<std::uint8_t>(i + 1);
            out.push_back(std::move(cr));
        }
    }
    return out;
}

SceneSpec random_scene(int rows, int cols, int patch_px, std::uint64_t seed) {
    SceneSpec scene;
    scene.rows = rows;
    scene.cols = cols;
    scene.patch_px = patch_px;
    scene.seed = seed;
    scene.reflectance.resize(static_cast<std::size_t>(rows) * cols);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.05, 0.95);
    for (LinearRgb& r : scene.reflectance)
        r = {dist(rng), dist(rng), dist(rng)};
    scene.target_index = (rows / 2) * cols + cols / 2;
    return scene;
}

SceneSpec achromatic_mean_scene(int rows, int cols, int patch_px,
                                std::uint64_t seed,
                                const LinearRgb& target_reflectance) {
    if (rows < 3 || cols < 3)
        throw InvariantViolation("achromatic scene needs at least 3x3 patches");
    for (double v : {target_reflectance.r, target_reflectance.g,
                     target_reflectance.b}) {
        if (v < 0.0 || v > 0.7)
            throw InvariantViolation("target reflectance must sit in [0,0.7] "
                                     "so its complement stays in gamut");
    }

    SceneSpec scene;
    scene.rows = rows;
    scene.cols = cols;
    scene.patch_px = patch_px;
    scene.seed = seed;
    scene.reflectance.assign(static_cast<std::size_t>(rows) * cols,
                             {0.35, 0.35, 0.35});

    const int trow = rows / 2;
    const int tcol = cols / 2;
    scene.target_index = trow * cols + tcol;
    for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0)
                continue;
            const int r = trow + dr;
            const int c = tcol + dc;
            if (r >= 0 && r < rows && c >= 0 && c < cols)
                scene.surround_indices.push_back(r * cols + c);
        }
    }

    // Every chromatic patch enters with its complement about mid gray 0.35,
    // so the mean reflectance is achromatic by construction. The target and
    // its complement form one such pair.
    std::vector<int> free_cells;
    for (int i = 0; i < scene.patch_count(); ++i) {
        if (i != scene.target_index)
            free_cells.push_back(i);
    }
    scene.reflectance[scene.target_index] = target_reflectance;
    std::size_t next = 0;
    scene.reflectance[free_cells[next++]] = {0.7 - target_reflectance.r,
                                             0.7 - target_reflectance.g,
                                             0.7 - target_reflectance.b};

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.13, 0.57);
    while (next + 1 < free_cells.size()) {
        const LinearRgb a{dist(rng), dist(rng), dist(rng)};
        scene.reflectance[free_cells[next++]] = a;
        scene.reflectance[free_cells[next++]] = {0.7 - a.r, 0.7 - a.g,
                                                 0.7 - a.b};
    }
    // An odd leftover cell keeps the mid gray it was initialized with.
    return scene;
}

std::vector<BatteryEntry> standard_battery() {
    std::vector<BatteryEntry> battery;

    // Spatial-mean manipulation: quiet achromatic-mean scene, no patch
    // bright enough to leave gamut when the non-target field is rescaled.
    {
        BatteryEntry e;
        e.id = "battery-spatial-mean";
        e.scene = achromatic_mean_scene(6, 6, 16, 101);
        e.mechanism.kind = MechanismKind::SpatialMeanChangeReflectances;
        e.mechanism.magnitude = 18.0;
        battery.push_back(std::move(e));
    }

    // Local-surround manipulation: loud high-contrast surround ring around
    // the target over a quiet background, so edge statistics are dominated
    // by the ring the manipulation freezes.
    {
        BatteryEntry e;
        e.id = "battery-local-surround";
        e.scene = achromatic_mean_scene(6, 6, 16, 202);
        // Quiet background: squeeze every non-ring chromatic pair toward
        // mid gray.
        for (int i = 0; i < e.scene.patch_count(); ++i) {
            if (i == e.scene.target_index)
                continue;
            LinearRgb& r = e.scene.reflectance[i];
            r = {0.35 + 0.25 * (r.r - 0.35), 0.35 + 0.25 * (r.g - 0.35),
                 0.35 + 0.25 * (r.b - 0.35)};
        }
        // Ring: four strong complement pairs, self-balanced.
        const LinearRgb loud[4] = {{0.62, 0.20, 0.20},
                                   {0.20, 0.62, 0.20},
                                   {0.20, 0.20, 0.62},
                                   {0.56, 0.56, 0.14}};
        for (std::size_t i = 0; i < e.scene.surround_indices.size(); ++i) {
            const LinearRgb base = loud[i / 2];
            e.scene.reflectance[e.scene.surround_indices[i]] =
                (i % 2 == 0) ? base
                             : LinearRgb{0.7 - base.r, 0.7 - base.g,
                                         0.7 - base.b};
        }
        e.mechanism.kind = MechanismKind::LocalSurround;
        e.mechanism.surround_color = LinearRgb{0.26, 0.26, 0.26};
        battery.push_back(std::move(e));
    }

    // Max-flux manipulation: a designated patch gets pinned to a dim
    // achromatic constant while a brighter natural white patch survives in
    // the opposite corner.
    {
        BatteryEntry e;
        e.id = "battery-max-flux";
        e.scene = achromatic_mean_scene(6, 6, 16, 303);
        e.scene.reflectance[e.scene.patch_count() - 1] = {0.95, 0.95, 0.95};
        e.scene.bright_index = 0;
        e.scene.reflectance[0] = {0.5, 0.5, 0.5};
        e.mechanism.kind = MechanismKind::MaximumFlux;
        e.mechanism.bright_color = LinearRgb{0.24, 0.24, 0.24};
        battery.push_back(std::move(e));
    }

    return battery;
}

} // namespace cceval
