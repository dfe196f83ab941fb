#include "cceval/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>
#include <utility>

#include "json.hpp"

#include "cceval/errors.hpp"
#include "cceval/image_io.hpp"

namespace cceval {

namespace {

using nlohmann::ordered_json;

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingFile("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        throw InputError("read failed for " + path.string());
    }
    return buf.str();
}

bool valid_id(const std::string& id) {
    if (id.empty()) {
        return false;
    }
    for (char c : id) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                  (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
        if (!ok) {
            return false;
        }
    }
    return true;
}

void require_id(const std::string& id, const std::string& where) {
    if (!valid_id(id)) {
        throw InvariantViolation(where + ": id \"" + id +
                                 "\" must be nonempty [A-Za-z0-9_.-]");
    }
}

const ordered_json& field(const ordered_json& obj, const char* key,
                          const std::string& where) {
    if (!obj.is_object()) {
        throw InvariantViolation(where + ": expected an object");
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw InvariantViolation(where + ": missing field \"" + key + "\"");
    }
    return *it;
}

std::string string_field(const ordered_json& obj, const char* key,
                         const std::string& where) {
    const ordered_json& v = field(obj, key, where);
    if (!v.is_string()) {
        throw InvariantViolation(where + ": field \"" + key +
                                 "\" must be a string");
    }
    return v.get<std::string>();
}

double number_at(const ordered_json& v, const std::string& where) {
    if (!v.is_number()) {
        throw InvariantViolation(where + ": expected a number");
    }
    return v.get<double>();
}

std::string pixel_space_name(PixelSpace space) {
    switch (space) {
    case PixelSpace::SrgbEncoded: return "srgb";
    case PixelSpace::Linear: return "linear";
    case PixelSpace::Lab: return "lab";
    }
    return "?";
}

PixelSpace parse_storage_space(const std::string& text,
                               const std::string& where) {
    if (text == "srgb") {
        return PixelSpace::SrgbEncoded;
    }
    if (text == "linear") {
        return PixelSpace::Linear;
    }
    throw InvariantViolation(where + ": unknown color space \"" + text +
                             "\" (expected srgb or linear)");
}

std::string cell_name(const std::string& scene, const std::string& condition,
                      const std::string& illuminant) {
    return "(" + scene + ", " + condition + ", " + illuminant + ")";
}

std::string format_fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string predictor_description(const PredictorSource& src) {
    std::ostringstream out;
    if (src.builtin) {
        const EstimatorParams& p = *src.builtin;
        out << "builtin " << to_string(p.method)
            << " n=" << p.derivative_order << " p=" << format_fixed(p.minkowski_p)
            << " sigma=" << format_fixed(p.smoothing_sigma)
            << " kappa=" << format_fixed(p.edge_weight_exponent);
    } else {
        out << "external " << src.external_dir->string() << " space="
            << pixel_space_name(src.external_space);
    }
    return out.str();
}

} // namespace

std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

const CompetitorSet& Manifest::competitors_for(
    const std::string& scene, const std::string& condition,
    const std::string& illuminant) const {
    for (const CompetitorSet& set : competitor_tables) {
        if (set.scene_id == scene && set.condition_id == condition &&
            set.illuminant_id == illuminant) {
            return set;
        }
    }
    throw InvariantViolation("no competitor table for cell " +
                             cell_name(scene, condition, illuminant));
}

Manifest load_manifest(const std::filesystem::path& path) {
    Manifest m;
    m.source_text = read_text_file(path);
    m.base_dir = path.has_parent_path() ? path.parent_path()
                                        : std::filesystem::path(".");

    ordered_json root;
    try {
        root = ordered_json::parse(m.source_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("manifest " + path.string() + ": " + e.what());
    }
    const std::string where = "manifest " + path.string();
    if (!root.is_object()) {
        throw InvariantViolation(where + ": top level must be an object");
    }

    const ordered_json& schema = field(root, "schema", where);
    if (!schema.is_number_integer() || schema.get<int>() != 1) {
        throw InvariantViolation(where + ": schema must be 1");
    }

    if (root.contains("white_point")) {
        const ordered_json& wp = root["white_point"];
        if (!wp.is_array() || wp.size() != 3) {
            throw InvariantViolation(where +
                                     ": white_point must be [X, Y, Z]");
        }
        m.white_point.x = number_at(wp[0], where + ".white_point");
        m.white_point.y = number_at(wp[1], where + ".white_point");
        m.white_point.z = number_at(wp[2], where + ".white_point");
        if (m.white_point.x <= 0.0 || m.white_point.y <= 0.0 ||
            m.white_point.z <= 0.0) {
            throw InvariantViolation(where +
                                     ": white_point must be positive");
        }
        m.white_point_from_file = true;
    }
    if (root.contains("image_space")) {
        m.image_space = parse_storage_space(
            root["image_space"].is_string() ? root["image_space"].get<std::string>()
                                            : std::string(),
            where + ".image_space");
    }
    if (root.contains("projection")) {
        std::string p = root["projection"].is_string()
                            ? root["projection"].get<std::string>()
                            : std::string();
        if (p == "lab") {
            m.projection = ProjectionSpace::Lab3d;
        } else if (p == "ab") {
            m.projection = ProjectionSpace::AbPlane;
        } else {
            throw InvariantViolation(where +
                                     ": projection must be lab or ab");
        }
    }
    if (root.contains("baseline_condition")) {
        m.baseline_condition =
            string_field(root, "baseline_condition", where);
    }

    const ordered_json& scenes = field(root, "scenes", where);
    if (!scenes.is_array() || scenes.empty()) {
        throw InvariantViolation(where + ": scenes must be a nonempty array");
    }
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const std::string sw = where + ".scenes[" + std::to_string(i) + "]";
        std::string id = string_field(scenes[i], "id", sw);
        require_id(id, sw);
        if (std::find(m.scene_ids.begin(), m.scene_ids.end(), id) !=
            m.scene_ids.end()) {
            throw InvariantViolation(sw + ": duplicate scene id " + id);
        }
        m.scene_ids.push_back(id);
        if (scenes[i].contains("environment")) {
            std::string env = string_field(scenes[i], "environment", sw);
            if (env != "indoor" && env != "outdoor") {
                throw InvariantViolation(
                    sw + ": environment must be indoor or outdoor");
            }
            m.scene_environment[id] = env;
        }
    }

    auto load_id_list = [&](const char* key, std::vector<std::string>& out) {
        const ordered_json& arr = field(root, key, where);
        const std::string lw = where + "." + key;
        if (!arr.is_array() || arr.empty()) {
            throw InvariantViolation(lw + ": must be a nonempty array");
        }
        for (const ordered_json& v : arr) {
            if (!v.is_string()) {
                throw InvariantViolation(lw + ": entries must be strings");
            }
            std::string id = v.get<std::string>();
            require_id(id, lw);
            if (std::find(out.begin(), out.end(), id) != out.end()) {
                throw InvariantViolation(lw + ": duplicate id " + id);
            }
            out.push_back(id);
        }
    };
    load_id_list("conditions", m.condition_ids);
    load_id_list("illuminants", m.illuminant_ids);

    if (std::find(m.condition_ids.begin(), m.condition_ids.end(),
                  m.baseline_condition) == m.condition_ids.end()) {
        throw InvariantViolation(where + ": baseline_condition \"" +
                                 m.baseline_condition +
                                 "\" is not a listed condition");
    }

    auto known = [](const std::vector<std::string>& ids,
                    const std::string& id) {
        return std::find(ids.begin(), ids.end(), id) != ids.end();
    };

    const ordered_json& tables = field(root, "competitors", where);
    if (!tables.is_array()) {
        throw InvariantViolation(where + ": competitors must be an array");
    }
    for (std::size_t i = 0; i < tables.size(); ++i) {
        const std::string tw =
            where + ".competitors[" + std::to_string(i) + "]";
        const ordered_json& t = tables[i];
        CompetitorSet set;
        set.scene_id = string_field(t, "scene", tw);
        set.condition_id = string_field(t, "condition", tw);
        set.illuminant_id = string_field(t, "illuminant", tw);
        if (!known(m.scene_ids, set.scene_id) ||
            !known(m.condition_ids, set.condition_id) ||
            !known(m.illuminant_ids, set.illuminant_id)) {
            throw InvariantViolation(tw + ": unknown scene/condition/illuminant");
        }
        const ordered_json& pos = field(t, "positions", tw);
        for (CompetitorLabel label : kCompetitorLabels) {
            const char* name = to_string(label);
            const ordered_json& v = field(pos, name, tw + ".positions");
            if (!v.is_array() || v.size() != 3) {
                throw InvariantViolation(tw + ".positions." + name +
                                         ": expected [L, a, b]");
            }
            LabColor lab;
            lab.L = number_at(v[0], tw + ".positions." + name);
            lab.a = number_at(v[1], tw + ".positions." + name);
            lab.b = number_at(v[2], tw + ".positions." + name);
            set.at(label) = lab;
        }
        try {
            set.validate();
        } catch (const std::runtime_error& e) {
            throw InvariantViolation(tw + " " +
                                     cell_name(set.scene_id, set.condition_id,
                                               set.illuminant_id) +
                                     ": " + e.what());
        }
        for (const CompetitorSet& prev : m.competitor_tables) {
            if (prev.scene_id == set.scene_id &&
                prev.condition_id == set.condition_id &&
                prev.illuminant_id == set.illuminant_id) {
                throw InvariantViolation(tw + ": duplicate competitor table");
            }
        }
        m.competitor_tables.push_back(std::move(set));
    }

    const ordered_json& cells = field(root, "cells", where);
    if (!cells.is_array() || cells.empty()) {
        throw InvariantViolation(where + ": cells must be a nonempty array");
    }
    std::set<std::string> seen_cells;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const std::string cw = where + ".cells[" + std::to_string(i) + "]";
        const ordered_json& c = cells[i];
        ManifestCell cell;
        cell.scene = string_field(c, "scene", cw);
        cell.condition = string_field(c, "condition", cw);
        cell.illuminant = string_field(c, "illuminant", cw);
        if (!known(m.scene_ids, cell.scene) ||
            !known(m.condition_ids, cell.condition) ||
            !known(m.illuminant_ids, cell.illuminant)) {
            throw InvariantViolation(cw + ": unknown scene/condition/illuminant");
        }
        std::string key = cell.scene + "|" + cell.condition + "|" + cell.illuminant;
        if (!seen_cells.insert(key).second) {
            throw InvariantViolation(
                cw + ": duplicate cell " +
                cell_name(cell.scene, cell.condition, cell.illuminant));
        }
        m.competitors_for(cell.scene, cell.condition, cell.illuminant);

        const ordered_json& images = field(c, "images", cw);
        if (!images.is_array() || images.empty()) {
            throw InvariantViolation(cw + ": images must be a nonempty array");
        }
        std::set<CompetitorLabel> covered;
        for (std::size_t k = 0; k < images.size(); ++k) {
            const std::string iw = cw + ".images[" + std::to_string(k) + "]";
            const ordered_json& e = images[k];
            ManifestImage img;
            img.image = m.base_dir / string_field(e, "image", iw);
            img.mask = m.base_dir / string_field(e, "mask", iw);
            for (const std::filesystem::path* p : {&img.image, &img.mask}) {
                if (!std::filesystem::exists(*p)) {
                    throw MissingFile(iw + ": no such file " + p->string());
                }
            }
            const ordered_json& comp = field(e, "competitors", iw);
            if (!comp.is_array() || comp.empty()) {
                throw InvariantViolation(
                    iw + ": competitors must be a nonempty array");
            }
            for (const ordered_json& v : comp) {
                std::optional<CompetitorLabel> label;
                if (v.is_string()) {
                    label = parse_competitor_label(v.get<std::string>());
                }
                if (!label) {
                    throw InvariantViolation(iw +
                                             ": bad competitor label (expected "
                                             "R, S1, S2, T or O)");
                }
                img.competitors.push_back(*label);
                covered.insert(*label);
            }
            if (e.contains("position")) {
                const ordered_json& p = e["position"];
                if (!p.is_number_integer()) {
                    throw InvariantViolation(iw +
                                             ": position must be an integer");
                }
                img.position = p.get<int>();
            }
            if (e.contains("trial")) {
                img.trial = string_field(e, "trial", iw);
            }
            cell.images.push_back(std::move(img));
        }
        for (CompetitorLabel label : kCompetitorLabels) {
            if (covered.find(label) == covered.end()) {
                throw InvariantViolation(
                    cw + ": no image covers competitor " +
                    std::string(to_string(label)));
            }
        }
        m.cells.push_back(std::move(cell));
    }
    return m;
}

PredictorSource PredictorSource::builtin_estimator(
    const EstimatorParams& params) {
    params.validate();
    PredictorSource src;
    src.builtin = params;
    src.label = to_string(params.method);
    return src;
}

PredictorSource PredictorSource::external_images(std::filesystem::path dir,
                                                 PixelSpace space) {
    if (!std::filesystem::is_directory(dir)) {
        throw MissingFile("no such prediction directory: " + dir.string());
    }
    if (space == PixelSpace::Lab) {
        throw InvariantViolation(
            "prediction files hold encoded or linear RGB, not Lab");
    }
    PredictorSource src;
    src.external_dir = std::move(dir);
    src.external_space = space;
    src.label = "external";
    return src;
}

Image predict_reflectance(const CellImage& item, const PredictorSource& src,
                          const WhitePoint& wp) {
    if (src.builtin) {
        IlluminantEstimate e = estimate_illuminant(item.image, *src.builtin);
        return to_lab(von_kries_correct(item.image, e), wp);
    }
    if (!item.prediction) {
        throw InvariantViolation("external prediction image was not loaded");
    }
    return *item.prediction;
}

ModelOutputs extract_outputs(const std::vector<CellImage>& items,
                             const PredictorSource& src,
                             const WhitePoint& wp) {
    if (items.empty()) {
        throw InvariantViolation("cell has no images");
    }
    double sums[5][3] = {};
    std::int64_t counts[5] = {};
    for (const CellImage& item : items) {
        if (item.mask.width != item.image.width ||
            item.mask.height != item.image.height) {
            throw DimensionMismatch(
                "mask is " + std::to_string(item.mask.width) + "x" +
                std::to_string(item.mask.height) + " but image is " +
                std::to_string(item.image.width) + "x" +
                std::to_string(item.image.height));
        }
        Image predicted = predict_reflectance(item, src, wp);
        if (predicted.width != item.image.width ||
            predicted.height != item.image.height) {
            throw DimensionMismatch(
                "prediction is " + std::to_string(predicted.width) + "x" +
                std::to_string(predicted.height) + " but input is " +
                std::to_string(item.image.width) + "x" +
                std::to_string(item.image.height));
        }
        for (int y = 0; y < item.mask.height; ++y) {
            for (int x = 0; x < item.mask.width; ++x) {
                std::uint8_t label = item.mask.at(x, y);
                if (label == 0) {
                    continue;
                }
                if (label > 5) {
                    throw InvariantViolation("mask label " +
                                             std::to_string(int(label)) +
                                             " out of range (0..5)");
                }
                int idx = label - 1;
                for (int c = 0; c < 3; ++c) {
                    sums[idx][c] += predicted.at(x, y, c);
                }
                counts[idx] += 1;
            }
        }
    }
    ModelOutputs out;
    for (int i = 0; i < 5; ++i) {
        if (counts[i] == 0) {
            throw EmptyMask(
                "competitor " +
                std::string(to_string(kCompetitorLabels[i])) +
                " has no mask pixels in this cell");
        }
        out.pixels[i] = counts[i];
        out.color[i].L = sums[i][0] / double(counts[i]);
        out.color[i].a = sums[i][1] / double(counts[i]);
        out.color[i].b = sums[i][2] / double(counts[i]);
    }
    return out;
}

namespace {

struct CellOutcome {
    std::vector<EvaluatedRecord> records;
    std::optional<CellError> error;
};

CellOutcome evaluate_cell(const Manifest& manifest, const ManifestCell& cell,
                          const PredictorSource& src,
                          const GridOptions& options) {
    CellOutcome outcome;
    try {
        std::vector<CellImage> loaded;
        loaded.reserve(cell.images.size());
        for (const ManifestImage& entry : cell.images) {
            CellImage item;
            item.image = to_linear(read_image(entry.image, manifest.image_space),
                                   manifest.white_point);
            item.mask = read_mask(entry.mask);
            item.trial = entry.trial;
            if (src.external_dir) {
                std::filesystem::path pred =
                    *src.external_dir / entry.image.filename();
                if (!std::filesystem::exists(pred)) {
                    throw MissingFile("no prediction for " +
                                      entry.image.filename().string() +
                                      " under " + src.external_dir->string());
                }
                item.prediction = to_lab(read_image(pred, src.external_space),
                                         manifest.white_point);
            }
            loaded.push_back(std::move(item));
        }

        // Group name -> images. Pooled mode uses a single group; per-trial
        // mode groups by trial id, images without one standing alone.
        std::map<std::string, std::vector<CellImage>> groups;
        if (options.per_trial) {
            for (std::size_t i = 0; i < loaded.size(); ++i) {
                std::string key = loaded[i].trial.empty()
                                      ? "img" + std::to_string(i)
                                      : loaded[i].trial;
                groups[key].push_back(std::move(loaded[i]));
            }
        } else {
            groups.emplace("", std::move(loaded));
        }

        const CompetitorSet& comps =
            manifest.competitors_for(cell.scene, cell.condition, cell.illuminant);
        for (const auto& [group, members] : groups) {
            ModelOutputs outputs =
                extract_outputs(members, src, manifest.white_point);
            MatchResult match =
                derive_match(outputs, comps, manifest.projection);
            EvaluatedRecord rec;
            rec.match = match;
            rec.record.scene_id = cell.scene;
            rec.record.condition_id = cell.condition;
            rec.record.illuminant_id = cell.illuminant;
            rec.record.subject_id =
                group.empty() ? src.label : src.label + "/" + group;
            rec.record.cci_percent =
                cci(match.match, comps, manifest.projection);
            rec.record.cluster_warning = match.cluster_warning;
            outcome.records.push_back(std::move(rec));
        }
    } catch (const std::exception& e) {
        outcome.records.clear();
        outcome.error = CellError{cell.scene, cell.condition, cell.illuminant,
                                  e.what()};
    }
    return outcome;
}

} // namespace

GridResult run_grid(const Manifest& manifest, const PredictorSource& src,
                    const GridOptions& options) {
    if (options.jobs < 1) {
        throw InvariantViolation("jobs must be >= 1");
    }
    if (!src.builtin && !src.external_dir) {
        throw InvariantViolation("predictor source is empty");
    }

    std::uint64_t hash = fnv1a64(manifest.source_text);
    hash = fnv1a64(predictor_description(src), hash);
    hash = fnv1a64(" seed=" + std::to_string(options.seed) +
                       " per_trial=" + (options.per_trial ? "1" : "0") +
                       " wp=" + format_fixed(manifest.white_point.x) + "," +
                       format_fixed(manifest.white_point.y) + "," +
                       format_fixed(manifest.white_point.z),
                   hash);

    std::vector<CellOutcome> outcomes(manifest.cells.size());
    auto work = [&](std::size_t i) {
        outcomes[i] = evaluate_cell(manifest, manifest.cells[i], src, options);
    };

    std::size_t n = manifest.cells.size();
    int jobs = std::min<std::size_t>(options.jobs, n) > 0
                   ? int(std::min<std::size_t>(options.jobs, n))
                   : 1;
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            work(i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (int t = 0; t < jobs; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < n;
                     i = next.fetch_add(1)) {
                    work(i);
                }
            });
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }

    GridResult result;
    result.config_hash = hash;
    for (CellOutcome& outcome : outcomes) {
        if (outcome.error) {
            result.errors.push_back(std::move(*outcome.error));
        }
        for (EvaluatedRecord& rec : outcome.records) {
            result.records.push_back(std::move(rec));
        }
    }

    // Delta pass against the baseline condition, keyed by scene, illuminant
    // and subject. Baseline rows get 0; rows whose baseline failed stay
    // without a delta.
    std::map<std::string, const CciRecord*> baseline;
    for (const EvaluatedRecord& rec : result.records) {
        if (rec.record.condition_id == manifest.baseline_condition) {
            baseline[rec.record.scene_id + "|" + rec.record.illuminant_id +
                     "|" + rec.record.subject_id] = &rec.record;
        }
    }
    for (EvaluatedRecord& rec : result.records) {
        if (rec.record.condition_id == manifest.baseline_condition) {
            rec.delta_cci = 0.0;
            rec.has_delta = true;
            continue;
        }
        auto it = baseline.find(rec.record.scene_id + "|" +
                                rec.record.illuminant_id + "|" +
                                rec.record.subject_id);
        if (it != baseline.end()) {
            rec.delta_cci = delta_cci(rec.record, *it->second);
            rec.has_delta = true;
        }
    }
    return result;
}

namespace {

constexpr const char* kRecordsHeader =
    "scene,condition,illuminant,subject,cci,delta_cci,cluster_warning";
constexpr const char* kHumanHeader = "scene,condition,illuminant,subject,cci";

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double_field(const std::string& text, const std::string& where) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw ParseError(where + ": bad number \"" + text + "\"");
    }
    return value;
}

} // namespace

void write_records_csv(const std::filesystem::path& path,
                       const std::vector<EvaluatedRecord>& records) {
    bool need_header = !std::filesystem::exists(path) ||
                       std::filesystem::file_size(path) == 0;
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) {
        throw InputError("cannot open " + path.string() + " for writing");
    }
    if (need_header) {
        out << kRecordsHeader << '\n';
    }
    for (const EvaluatedRecord& rec : records) {
        out << rec.record.scene_id << ',' << rec.record.condition_id << ','
            << rec.record.illuminant_id << ',' << rec.record.subject_id << ','
            << format_fixed(rec.record.cci_percent) << ','
            << (rec.has_delta ? format_fixed(rec.delta_cci) : std::string())
            << ',' << (rec.record.cluster_warning ? '1' : '0') << '\n';
    }
    out.flush();
    if (!out) {
        throw InputError("write failed for " + path.string());
    }
}

std::vector<CciRecord> load_records_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingFile("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != kRecordsHeader) {
        throw ParseError(path.string() + ": expected header \"" +
                         kRecordsHeader + "\"");
    }
    std::vector<CciRecord> records;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const std::string where =
            path.string() + ":" + std::to_string(line_no);
        std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 7) {
            throw ParseError(where + ": expected 7 fields, got " +
                             std::to_string(f.size()));
        }
        CciRecord rec;
        rec.scene_id = f[0];
        rec.condition_id = f[1];
        rec.illuminant_id = f[2];
        rec.subject_id = f[3];
        for (int i = 0; i < 4; ++i) {
            if (f[i].empty() || f[i].find('|') != std::string::npos) {
                throw ParseError(where + ": bad id field \"" + f[i] + "\"");
            }
        }
        rec.cci_percent = parse_double_field(f[4], where);
        if (f[6] != "0" && f[6] != "1") {
            throw ParseError(where + ": cluster_warning must be 0 or 1");
        }
        rec.cluster_warning = f[6] == "1";
        records.push_back(std::move(rec));
    }
    return records;
}

HumanDataTable load_human_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingFile("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != kHumanHeader) {
        throw ParseError(path.string() + ": expected header \"" +
                         kHumanHeader + "\"");
    }
    HumanDataTable table;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const std::string where =
            path.string() + ":" + std::to_string(line_no);
        std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 5) {
            throw ParseError(where + ": expected 5 fields, got " +
                             std::to_string(f.size()));
        }
        HumanRecord rec;
        rec.scene = f[0];
        rec.condition = f[1];
        rec.illuminant = f[2];
        rec.subject = f[3];
        for (int i = 0; i < 4; ++i) {
            if (f[i].empty() || f[i].find('|') != std::string::npos) {
                throw ParseError(where + ": bad id field \"" + f[i] + "\"");
            }
        }
        rec.cci = parse_double_field(f[4], where);
        table.rows.push_back(std::move(rec));
    }
    return table;
}

void write_report_json(const std::filesystem::path& path,
                       const PredictorSource& src, const GridOptions& options,
                       const GridResult& result) {
    ordered_json root;
    root["schema"] = 1;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(result.config_hash));
    root["config_hash"] = hash;
    root["predictor"] = predictor_description(src);
    root["options"] = {{"per_trial", options.per_trial},
                       {"seed", options.seed}};
    root["summary"] = {{"records", result.records.size()},
                       {"errors", result.errors.size()}};

    ordered_json records = ordered_json::array();
    for (const EvaluatedRecord& rec : result.records) {
        ordered_json r;
        r["scene"] = rec.record.scene_id;
        r["condition"] = rec.record.condition_id;
        r["illuminant"] = rec.record.illuminant_id;
        r["subject"] = rec.record.subject_id;
        r["cci"] = rec.record.cci_percent;
        if (rec.has_delta) {
            r["delta_cci"] = rec.delta_cci;
        } else {
            r["delta_cci"] = nullptr;
        }
        r["match"] = {rec.match.match.L, rec.match.match.a, rec.match.match.b};
        r["t"] = rec.match.t_param;
        r["nearest"] = to_string(rec.match.first);
        r["second"] = to_string(rec.match.second);
        r["d1"] = rec.match.d1;
        r["d2"] = rec.match.d2;
        r["cluster_spread"] = rec.match.cluster_spread;
        r["cluster_warning"] = rec.match.cluster_warning;
        records.push_back(std::move(r));
    }
    root["records"] = std::move(records);

    ordered_json errors = ordered_json::array();
    for (const CellError& e : result.errors) {
        errors.push_back({{"scene", e.scene},
                          {"condition", e.condition},
                          {"illuminant", e.illuminant},
                          {"message", e.message}});
    }
    root["errors"] = std::move(errors);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot open " + path.string() + " for writing");
    }
    out << root.dump(2) << '\n';
    out.flush();
    if (!out) {
        throw InputError("write failed for " + path.string());
    }
}

} // namespace cceval
