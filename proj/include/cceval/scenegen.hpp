#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cceval/color.hpp"
#include "cceval/image.hpp"
#include "cceval/psychophys.hpp"

namespace cceval {

// Flat patch-grid scene: each patch has one reflectance, rendered under a
// single global illuminant with pixel = reflectance * illuminant per
// channel. Deliberately minimal physics; it exists so every stage of the
// pipeline has exact ground truth.
struct SceneSpec {
    int rows = 0;
    int cols = 0;
    int patch_px = 0; // square patch edge in pixels
    std::vector<LinearRgb> reflectance; // rows*cols entries, row major
    int target_index = 0;
    std::vector<int> surround_indices; // patches treated as the local surround
    int bright_index = -1;             // patch the max-flux manipulation pins, -1 = none
    std::uint64_t seed = 0;

    int patch_count() const { return rows * cols; }
    void validate() const;
};

struct IlluminantSpec {
    std::string name;
    LinearRgb color; // unit Euclidean norm, all components > 0
};

// The five stock lights: neutral plus blue/yellow on the daylight-like axis
// and red/green roughly orthogonal to it. Throws ParseError for other names.
IlluminantSpec named_illuminant(std::string_view name);
const std::vector<std::string>& illuminant_names();

enum class MechanismKind {
    Baseline,
    LocalSurround,
    MaximumFlux,
    SpatialMeanAddObjects,
    SpatialMeanChangeReflectances,
};

const char* to_string(MechanismKind kind);
std::optional<MechanismKind> parse_mechanism(std::string_view text);

// Cue-suppression manipulations. Each one removes the illuminant's
// signature from one scene statistic while leaving the target untouched.
struct MechanismSpec {
    MechanismKind kind = MechanismKind::Baseline;
    // LocalSurround: rendered color the surround patches are pinned to.
    std::optional<LinearRgb> surround_color;
    // MaximumFlux: rendered color the bright patch is pinned to.
    std::optional<LinearRgb> bright_color;
    // SpatialMean*: a*b* shift magnitude in dE units.
    double magnitude = 0.0;
    // SpatialMeanAddObjects: patches to append (rounded up to whole rows).
    int added_patches = 0;

    void validate() const;
};

struct RenderResult {
    Image image;          // linear, reflectance * illuminant
    Image gt_reflectance; // linear, the reflectance field itself
    MaskImage masks;      // patch index + 1
};

RenderResult render(const SceneSpec& scene, const IlluminantSpec& illum);

// Returns the manipulated scene. Constant rendered colors are converted to
// reflectances by dividing out the illuminant; any channel forced outside
// [0,1] raises OutOfGamut rather than clipping.
SceneSpec apply_mechanism(const SceneSpec& scene, const MechanismSpec& mech,
                          const IlluminantSpec& illum,
                          const WhitePoint& wp = kD65);

// Competitor axis for the scene's target under `illum`, with positions
// expressed as Lab values of each competitor rendered under the neutral
// illuminant. R shares the target's reflectance; T reflects the same light
// under `illum` that the target reflects under neutral; S1, S2 sit at 1/3
// and 2/3 from R to T in CIELAB; O extrapolates 1/3 beyond R.
CompetitorSet make_competitor_set(const SceneSpec& scene,
                                  const IlluminantSpec& illum,
                                  const WhitePoint& wp = kD65);

struct CompetitorRender {
    CompetitorLabel label{};
    int position = 0; // patch index holding the competitor
    Image image;      // linear rendering
    MaskImage masks;  // competitor patch labeled 1..5 (R..O), rest 0
};

// One rendering per (competitor, position): the patch at `position` takes
// the competitor's reflectance and everything else stays as in `scene`.
std::vector<CompetitorRender> competitor_scene_set(
    const SceneSpec& scene, const CompetitorSet& comps,
    const std::vector<int>& positions, const IlluminantSpec& illum,
    const WhitePoint& wp = kD65);

// Seeded generators. random_scene draws independent reflectances;
// achromatic_mean_scene builds complement pairs around mid gray so the mean
// reflectance is exactly achromatic, with the target at the grid center,
// its 8-neighborhood as surround, and a near-white auxiliary patch.
SceneSpec random_scene(int rows, int cols, int patch_px, std::uint64_t seed);
SceneSpec achromatic_mean_scene(int rows, int cols, int patch_px,
                                std::uint64_t seed,
                                const LinearRgb& target_reflectance = {0.42, 0.38, 0.22});

// Fixed scenes used by the qualitative mechanism checks: one tuned per
// manipulation claim (spatial-mean, local-surround, max-flux).
struct BatteryEntry {
    std::string id;
    SceneSpec scene;
    MechanismSpec mechanism;
};
std::vector<BatteryEntry> standard_battery();

} // namespace cceval
