#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cceval/agreement.hpp"
#include "cceval/estimators.hpp"
#include "cceval/image.hpp"
#include "cceval/psychophys.hpp"
#include "cceval/scenegen.hpp"

namespace cceval {

// ---------------------------------------------------------------------------
// Manifest: the JSON description of one evaluation grid (schema 1). All
// paths inside are resolved against the manifest's directory and checked at
// load time.

struct ManifestImage {
    std::filesystem::path image;
    std::filesystem::path mask;
    std::vector<CompetitorLabel> competitors; // competitors this image shows
    int position = -1;                        // optional patch metadata
    std::string trial;                        // optional grouping id
};

struct ManifestCell {
    std::string scene;
    std::string condition;
    std::string illuminant;
    std::vector<ManifestImage> images;
};

struct Manifest {
    int schema = 1;
    WhitePoint white_point = kD65;
    bool white_point_from_file = false; // false = defaulted, safe to override
    PixelSpace image_space = PixelSpace::SrgbEncoded;
    ProjectionSpace projection = ProjectionSpace::Lab3d;
    std::string baseline_condition = "baseline";
    std::map<std::string, std::string> scene_environment; // id -> indoor|outdoor
    std::vector<std::string> scene_ids;
    std::vector<std::string> condition_ids;
    std::vector<std::string> illuminant_ids;
    std::vector<CompetitorSet> competitor_tables;
    std::vector<ManifestCell> cells;
    std::filesystem::path base_dir;
    std::string source_text; // raw manifest bytes, hashed into the config id

    const CompetitorSet& competitors_for(const std::string& scene,
                                         const std::string& condition,
                                         const std::string& illuminant) const;
};

Manifest load_manifest(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Predictor source: what turns an input image into a predicted reflectance
// image in Lab (the scene as it would appear under the neutral light).

struct PredictorSource {
    std::optional<EstimatorParams> builtin;
    std::optional<std::filesystem::path> external_dir;
    PixelSpace external_space = PixelSpace::SrgbEncoded;
    std::string label; // subject id stamped on the records

    static PredictorSource builtin_estimator(const EstimatorParams& params);
    static PredictorSource external_images(
        std::filesystem::path dir,
        PixelSpace space = PixelSpace::SrgbEncoded);
};

// One loaded input image of a cell. `prediction` is preloaded for external
// sources; builtin sources compute it from `image`.
struct CellImage {
    Image image; // linear
    MaskImage mask;
    std::string trial;
    std::optional<Image> prediction; // Lab
};

// Predicted reflectance image in Lab for one input.
Image predict_reflectance(const CellImage& item, const PredictorSource& src,
                          const WhitePoint& wp);

// Mask-and-average: pixel-weighted mean predicted Lab per competitor over
// all images of one cell. Mask value k = competitor k-1 in R,S1,S2,T,O
// order; 0 = background.
ModelOutputs extract_outputs(const std::vector<CellImage>& items,
                             const PredictorSource& src, const WhitePoint& wp);

// ---------------------------------------------------------------------------
// Grid evaluation.

struct GridOptions {
    int jobs = 1;          // worker threads; results identical for any value
    bool per_trial = false; // one record per trial id instead of pooled
    std::uint64_t seed = 0;
};

struct CellError {
    std::string scene;
    std::string condition;
    std::string illuminant;
    std::string message;
};

struct EvaluatedRecord {
    CciRecord record;
    MatchResult match;
    double delta_cci = 0.0; // vs the baseline condition, same scene/illum/subject
    bool has_delta = false;
};

struct GridResult {
    std::vector<EvaluatedRecord> records; // manifest cell order
    std::vector<CellError> errors;        // cells that failed (collect-and-continue)
    std::uint64_t config_hash = 0;
};

GridResult run_grid(const Manifest& manifest, const PredictorSource& src,
                    const GridOptions& options = {});

// Appends records (header written only when the file starts empty).
void write_records_csv(const std::filesystem::path& path,
                       const std::vector<EvaluatedRecord>& records);

// Deterministic JSON run summary: config hash, record diagnostics, error
// roster.
void write_report_json(const std::filesystem::path& path,
                       const PredictorSource& src, const GridOptions& options,
                       const GridResult& result);

// ---------------------------------------------------------------------------
// Human data and model-human comparison.

struct HumanRecord {
    std::string scene;
    std::string condition;
    std::string illuminant;
    std::string subject;
    double cci = 0.0;
};

struct HumanDataTable {
    std::vector<HumanRecord> rows;
};

// CSV with header scene,condition,illuminant,subject,cci.
HumanDataTable load_human_csv(const std::filesystem::path& path);

// Results CSV written by write_records_csv.
std::vector<CciRecord> load_records_csv(const std::filesystem::path& path);

struct CompareOptions {
    std::string baseline_condition = "baseline";
    // scene id -> indoor|outdoor; scenes not listed count only toward All.
    std::map<std::string, std::string> scene_environment;
    // Correlate one mean per condition instead of per-cell values.
    bool condition_means = false;
};

// Model-human agreement per scope (All/Indoor/Outdoor) and basis
// (CCI/delta CCI). Duplicate model records for a key are averaged. Entries
// whose metrics are undefined on the data (too few points, zero variance)
// are omitted; no shared keys at all raises NoOverlap.
AgreementReport compare(const std::vector<CciRecord>& model,
                        const HumanDataTable& humans,
                        const CompareOptions& options = {});

// Per (condition, illuminant): subject-mean delta CCI with a percentile
// bootstrap interval over subjects. The per-summary generator seed is
// derived from `seed` and the key, so results do not depend on evaluation
// order.
struct DeltaCciSummary {
    std::string condition;
    std::string illuminant;
    int subjects = 0;
    BootstrapCi ci;
};
std::vector<DeltaCciSummary> human_delta_summaries(
    const HumanDataTable& humans, const std::string& baseline_condition,
    std::uint64_t seed = 0, int resamples = 10000);

std::string format_report_text(const AgreementReport& report);
std::string format_report_json(const AgreementReport& report);
std::string format_report_csv(const AgreementReport& report);

// ---------------------------------------------------------------------------
// Scene/illuminant JSON files and demo bundles (a ready-to-evaluate grid of
// synthetic scenes with competitor renderings, masks and manifest).

SceneSpec load_scene_spec(const std::filesystem::path& path);
void save_scene_spec(const std::filesystem::path& path, const SceneSpec& scene);

IlluminantSpec load_illuminant(const std::filesystem::path& path);
void save_illuminant(const std::filesystem::path& path,
                     const IlluminantSpec& illum);

struct BundleCondition {
    std::string id;
    MechanismSpec mechanism;
};

struct BundleScene {
    std::string id;
    std::string environment = "indoor"; // indoor|outdoor
    SceneSpec scene;
};

struct BundleSpec {
    std::vector<BundleScene> scenes;
    std::vector<BundleCondition> conditions{{"baseline", {}}};
    // Grid cells need a usable competitor axis, and under the neutral light
    // the reflectance and tristimulus matches coincide; hence chromatic
    // lights only.
    std::vector<std::string> illuminants{"blue", "yellow", "red", "green"};
    WhitePoint white_point = kD65;
    int bit_depth = 16;
    std::vector<int> positions;        // competitor placements; empty = target
    bool perfect_predictions = false;  // write pred_perfect/ (ground truth)
    bool identity_predictions = false; // write pred_identity/ (input copies)
};

// Writes images/, masks/, optional prediction directories and
// manifest.json under `dir`; returns the manifest path.
std::filesystem::path write_bundle(const std::filesystem::path& dir,
                                   const BundleSpec& spec);

std::uint64_t fnv1a64(std::string_view text,
                      std::uint64_t seed = 14695981039346656037ULL);

} // namespace cceval
