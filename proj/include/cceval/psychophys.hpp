#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "cceval/color.hpp"

namespace cceval {

// The five competitors of one asymmetric-matching axis. R is the
// reflectance match (perfect constancy), T the tristimulus match (zero
// constancy), S1 and S2 sit between them, O beyond R.
enum class CompetitorLabel { R, S1, S2, T, O };

inline constexpr std::array<CompetitorLabel, 5> kCompetitorLabels{
    CompetitorLabel::R, CompetitorLabel::S1, CompetitorLabel::S2,
    CompetitorLabel::T, CompetitorLabel::O};

const char* to_string(CompetitorLabel label);
std::optional<CompetitorLabel> parse_competitor_label(std::string_view text);

// Whether axis geometry uses all of (L, a, b) or only the a*-b* plane.
enum class ProjectionSpace { Lab3d, AbPlane };

struct CompetitorSet {
    std::string scene_id;
    std::string condition_id;
    std::string illuminant_id;
    std::array<LabColor, 5> positions; // indexed by kCompetitorLabels order

    const LabColor& at(CompetitorLabel label) const {
        return positions[static_cast<std::size_t>(label)];
    }
    LabColor& at(CompetitorLabel label) {
        return positions[static_cast<std::size_t>(label)];
    }

    // Enforces a usable axis: |T - R| >= 1e-9 (else DegenerateAxis), and
    // S1, S2, O within 1.0 dE of the R-T line with S1, S2 between the
    // endpoints (else InvariantViolation).
    void validate() const;
};

// Mean model output color per competitor plus the pixel count behind each
// mean; a zero count marks a competitor that never appeared.
struct ModelOutputs {
    std::array<LabColor, 5> color{};
    std::array<std::int64_t, 5> pixels{};
};

struct AxisProjection {
    LabColor projected; // closest point on the infinite R-T line
    double t = 0.0;     // 1 at R, 0 at T
};

// Orthogonal projection of p onto the R-T line. In AbPlane mode the
// projection coefficient uses only the a and b components.
AxisProjection project_onto_axis(const LabColor& p, const LabColor& r,
                                 const LabColor& t,
                                 ProjectionSpace space = ProjectionSpace::Lab3d);

struct MatchResult {
    LabColor match;
    double t_param = 0.0;          // axis position of match, 1 at R, 0 at T
    CompetitorLabel first{};       // nearest competitor (d1)
    CompetitorLabel second{};      // second nearest (d2)
    double d1 = 0.0;               // axis distances to R, d1 <= d2
    double d2 = 0.0;
    double cluster_spread = 0.0;   // max - min of the five axis positions
    bool cluster_warning = false;  // cluster_spread < 1.0
};

// Projects all five output colors onto the R-T axis, picks the two whose
// projections are nearest to R (ties broken in label order), and
// interpolates between the ORIGINAL competitor positions with inverse
// distance weights: match = (d2*C1 + d1*C2) / (d1 + d2); the midpoint when
// d1 = d2 = 0.
MatchResult derive_match(const ModelOutputs& outputs,
                         const CompetitorSet& comps,
                         ProjectionSpace space = ProjectionSpace::Lab3d);

// Signed color constancy index in percent: 100 at R, 0 at T, above 100 for
// over-constancy beyond R, below 0 past T. Off-axis matches are projected
// first.
double cci(const LabColor& match, const CompetitorSet& comps,
           ProjectionSpace space = ProjectionSpace::Lab3d);

struct CciRecord {
    std::string scene_id;
    std::string condition_id;
    std::string illuminant_id;
    std::string subject_id; // human observer id or model name
    double cci_percent = 0.0;
    bool cluster_warning = false;
};

// condition minus baseline; both records must agree on scene, illuminant
// and subject.
double delta_cci(const CciRecord& condition, const CciRecord& baseline);

} // namespace cceval
