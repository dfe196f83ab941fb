#include "cceval/psychophys.hpp"

#include <algorithm>
#include <cmath>

#include "cceval/errors.hpp"

namespace cceval {

namespace {

struct Vec3 {
    double x, y, z;
};

Vec3 sub(const LabColor& a, const LabColor& b) {
    return {a.L - b.L, a.a - b.a, a.b - b.b};
}

double dot(const Vec3& a, const Vec3& b, ProjectionSpace space) {
    double d = a.y * b.y + a.z * b.z;
    if (space == ProjectionSpace::Lab3d)
        d += a.x * b.x;
    return d;
}

// Projection coefficient s with p = R + s*(T - R); s = 0 at R, 1 at T.
double axis_coefficient(const LabColor& p, const LabColor& r,
                        const LabColor& t, ProjectionSpace space) {
    const Vec3 axis = sub(t, r);
    const double len2 = dot(axis, axis, space);
    if (len2 < 1e-18)
        throw DegenerateAxis("reflectance and tristimulus match coincide");
    return dot(axis, sub(p, r), space) / len2;
}

double axis_length(const CompetitorSet& comps, ProjectionSpace space) {
    const Vec3 axis =
        sub(comps.at(CompetitorLabel::T), comps.at(CompetitorLabel::R));
    return std::sqrt(dot(axis, axis, space));
}

double point_line_distance(const LabColor& p, const LabColor& r,
                           const LabColor& t) {
    const double s = axis_coefficient(p, r, t, ProjectionSpace::Lab3d);
    const LabColor foot{r.L + s * (t.L - r.L), r.a + s * (t.a - r.a),
                        r.b + s * (t.b - r.b)};
    const Vec3 d = sub(p, foot);
    return std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
}

} // namespace

const char* to_string(CompetitorLabel label) {
    switch (label) {
    case CompetitorLabel::R:
        return "R";
    case CompetitorLabel::S1:
        return "S1";
    case CompetitorLabel::S2:
        return "S2";
    case CompetitorLabel::T:
        return "T";
    case CompetitorLabel::O:
        return "O";
    }
    return "?";
}

std::optional<CompetitorLabel> parse_competitor_label(std::string_view text) {
    for (CompetitorLabel label : kCompetitorLabels) {
        if (text == to_string(label))
            return label;
    }
    return std::nullopt;
}

void CompetitorSet::validate() const {
    const LabColor& r = at(CompetitorLabel::R);
    const LabColor& t = at(CompetitorLabel::T);
    const Vec3 axis = sub(t, r);
    const double len =
        std::sqrt(axis.x * axis.x + axis.y * axis.y + axis.z * axis.z);
    if (len < 1e-9)
        throw DegenerateAxis("competitor axis has zero length");

    for (CompetitorLabel label :
         {CompetitorLabel::S1, CompetitorLabel::S2, CompetitorLabel::O}) {
        const double off = point_line_distance(at(label), r, t);
        if (off > 1.0) {
            throw InvariantViolation(std::string("competitor ") +
                                     to_string(label) +
                                     " is more than 1 dE off the axis");
        }
    }
    for (CompetitorLabel label : {CompetitorLabel::S1, CompetitorLabel::S2}) {
        const double s =
            axis_coefficient(at(label), r, t, ProjectionSpace::Lab3d);
        if (s < 0.0 || s > 1.0) {
            throw InvariantViolation(std::string("competitor ") +
                                     to_string(label) +
                                     " is not between the endpoints");
        }
    }
}

AxisProjection project_onto_axis(const LabColor& p, const LabColor& r,
                                 const LabColor& t, ProjectionSpace space) {
    const double s = axis_coefficient(p, r, t, space);
    AxisProjection out;
    out.projected = {r.L + s * (t.L - r.L), r.a + s * (t.a - r.a),
                     r.b + s * (t.b - r.b)};
    out.t = 1.0 - s;
    return out;
}

MatchResult derive_match(const ModelOutputs& outputs,
                         const CompetitorSet& comps, ProjectionSpace space) {
    comps.validate();
    for (std::size_t i = 0; i < outputs.pixels.size(); ++i) {
        if (outputs.pixels[i] <= 0) {
            throw MissingCompetitor(std::string("no pixels for competitor ") +
                                    to_string(kCompetitorLabels[i]));
        }
    }

    const LabColor& r = comps.at(CompetitorLabel::R);
    const LabColor& t = comps.at(CompetitorLabel::T);
    const double len = axis_length(comps, space);

    // Signed axis positions (dE units from R, positive toward T) and the
    // unsigned distances to R used for competitor selection.
    std::array<double, 5> pos;
    for (std::size_t i = 0; i < 5; ++i) {
        const double s = axis_coefficient(outputs.color[i], r, t, space);
        pos[i] = s * len;
    }

    std::array<std::size_t, 5> order{0, 1, 2, 3, 4};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         return std::fabs(pos[a]) < std::fabs(pos[b]);
                     });

    MatchResult res;
    res.first = kCompetitorLabels[order[0]];
    res.second = kCompetitorLabels[order[1]];
    res.d1 = std::fabs(pos[order[0]]);
    res.d2 = std::fabs(pos[order[1]]);

    const LabColor& c1 = comps.positions[order[0]];
    const LabColor& c2 = comps.positions[order[1]];
    if (res.d1 == 0.0 && res.d2 == 0.0) {
        res.match = {0.5 * (c1.L + c2.L), 0.5 * (c1.a + c2.a),
                     0.5 * (c1.b + c2.b)};
    } else {
        const double w1 = res.d2 / (res.d1 + res.d2);
        const double w2 = res.d1 / (res.d1 + res.d2);
        res.match = {w1 * c1.L + w2 * c2.L, w1 * c1.a + w2 * c2.a,
                     w1 * c1.b + w2 * c2.b};
    }

    res.t_param = project_onto_axis(res.match, r, t, space).t;
    const auto [mn, mx] = std::minmax_element(pos.begin(), pos.end());
    res.cluster_spread = *mx - *mn;
    res.cluster_warning = res.cluster_spread < 1.0;
    return res;
}

double cci(const LabColor& match, const CompetitorSet& comps,
           ProjectionSpace space) {
    const double s = axis_coefficient(match, comps.at(CompetitorLabel::R),
                                      comps.at(CompetitorLabel::T), space);
    return 100.0 * (1.0 - s);
}

double delta_cci(const CciRecord& condition, const CciRecord& baseline) {
    if (condition.scene_id != baseline.scene_id ||
        condition.illuminant_id != baseline.illuminant_id ||
        condition.subject_id != baseline.subject_id) {
        throw MismatchedKeys("delta requires matching scene, illuminant and "
                             "subject");
    }
    return condition.cci_percent - baseline.cci_percent;
}

} // namespace cceval
