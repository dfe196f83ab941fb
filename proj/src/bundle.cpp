#include "cceval/harness.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "cceval/errors.hpp"
#include "cceval/image_io.hpp"

namespace cceval {

namespace {

using nlohmann::ordered_json;

ordered_json parse_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingFile("cannot open " + path.string());
    }
    try {
        return ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void dump_json_file(const std::filesystem::path& path,
                    const ordered_json& root) {
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

double number_field(const ordered_json& obj, const char* key,
                    const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number()) {
        throw InvariantViolation(where + ": missing numeric field \"" + key +
                                 "\"");
    }
    return it->get<double>();
}

int int_field(const ordered_json& obj, const char* key,
              const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number_integer()) {
        throw InvariantViolation(where + ": missing integer field \"" + key +
                                 "\"");
    }
    return it->get<int>();
}

LinearRgb rgb_triple(const ordered_json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 3 || !v[0].is_number() ||
        !v[1].is_number() || !v[2].is_number()) {
        throw InvariantViolation(where + ": expected [r, g, b]");
    }
    return LinearRgb{v[0].get<double>(), v[1].get<double>(),
                     v[2].get<double>()};
}

} // namespace

SceneSpec load_scene_spec(const std::filesystem::path& path) {
    ordered_json root = parse_json_file(path);
    const std::string where = "scene " + path.string();
    if (!root.is_object()) {
        throw InvariantViolation(where + ": top level must be an object");
    }
    SceneSpec scene;
    scene.rows = int_field(root, "rows", where);
    scene.cols = int_field(root, "cols", where);
    scene.patch_px = int_field(root, "patch_px", where);
    scene.target_index = int_field(root, "target_index", where);
    if (root.contains("bright_index")) {
        scene.bright_index = int_field(root, "bright_index", where);
    }
    if (root.contains("seed")) {
        double s = number_field(root, "seed", where);
        scene.seed = static_cast<std::uint64_t>(s);
    }
    auto it = root.find("reflectance");
    if (it == root.end() || !it->is_array()) {
        throw InvariantViolation(where + ": missing reflectance array");
    }
    for (std::size_t i = 0; i < it->size(); ++i) {
        scene.reflectance.push_back(rgb_triple(
            (*it)[i], where + ".reflectance[" + std::to_string(i) + "]"));
    }
    if (root.contains("surround_indices")) {
        const ordered_json& s = root["surround_indices"];
        if (!s.is_array()) {
            throw InvariantViolation(where +
                                     ": surround_indices must be an array");
        }
        for (const ordered_json& v : s) {
            if (!v.is_number_integer()) {
                throw InvariantViolation(
                    where + ": surround_indices entries must be integers");
            }
            scene.surround_indices.push_back(v.get<int>());
        }
    }
    scene.validate();
    return scene;
}

void save_scene_spec(const std::filesystem::path& path,
                     const SceneSpec& scene) {
    scene.validate();
    ordered_json root;
    root["rows"] = scene.rows;
    root["cols"] = scene.cols;
    root["patch_px"] = scene.patch_px;
    root["target_index"] = scene.target_index;
    root["bright_index"] = scene.bright_index;
    root["seed"] = scene.seed;
    ordered_json refl = ordered_json::array();
    for (const LinearRgb& r : scene.reflectance) {
        refl.push_back({r.r, r.g, r.b});
    }
    root["reflectance"] = std::move(refl);
    root["surround_indices"] = scene.surround_indices;
    dump_json_file(path, root);
}

IlluminantSpec load_illuminant(const std::filesystem::path& path) {
    ordered_json root = parse_json_file(path);
    const std::string where = "illuminant " + path.string();
    if (!root.is_object()) {
        throw InvariantViolation(where + ": top level must be an object");
    }
    IlluminantSpec illum;
    illum.name = root.contains("name") && root["name"].is_string()
                     ? root["name"].get<std::string>()
                     : "custom";
    auto it = root.find("color");
    if (it == root.end()) {
        throw InvariantViolation(where + ": missing color field");
    }
    LinearRgb c = rgb_triple(*it, where + ".color");
    if (c.r <= 0.0 || c.g <= 0.0 || c.b <= 0.0) {
        throw InvariantViolation(where + ": color must be positive");
    }
    double norm = std::sqrt(c.r * c.r + c.g * c.g + c.b * c.b);
    illum.color = LinearRgb{c.r / norm, c.g / norm, c.b / norm};
    return illum;
}

void save_illuminant(const std::filesystem::path& path,
                     const IlluminantSpec& illum) {
    ordered_json root;
    root["name"] = illum.name;
    root["color"] = {illum.color.r, illum.color.g, illum.color.b};
    dump_json_file(path, root);
}

std::filesystem::path write_bundle(const std::filesystem::path& dir,
                                   const BundleSpec& spec) {
    if (spec.scenes.empty()) {
        throw InvariantViolation("bundle needs at least one scene");
    }
    if (spec.conditions.empty()) {
        throw InvariantViolation("bundle needs at least one condition");
    }
    if (spec.illuminants.empty()) {
        throw InvariantViolation("bundle needs at least one illuminant");
    }
    for (const BundleScene& s : spec.scenes) {
        s.scene.validate();
        if (s.environment != "indoor" && s.environment != "outdoor") {
            throw InvariantViolation("scene " + s.id +
                                     ": environment must be indoor or outdoor");
        }
    }
    for (const BundleCondition& c : spec.conditions) {
        c.mechanism.validate();
    }

    std::error_code ec;
    std::filesystem::create_directories(dir / "images", ec);
    std::filesystem::create_directories(dir / "masks", ec);
    if (spec.perfect_predictions) {
        std::filesystem::create_directories(dir / "pred_perfect", ec);
    }
    if (spec.identity_predictions) {
        std::filesystem::create_directories(dir / "pred_identity", ec);
    }
    if (ec) {
        throw InputError("cannot create bundle directories under " +
                         dir.string() + ": " + ec.message());
    }

    std::string baseline = spec.conditions.front().id;
    for (const BundleCondition& c : spec.conditions) {
        if (c.mechanism.kind == MechanismKind::Baseline) {
            baseline = c.id;
            break;
        }
    }

    ordered_json root;
    root["schema"] = 1;
    root["white_point"] = {spec.white_point.x, spec.white_point.y,
                           spec.white_point.z};
    root["image_space"] = "srgb";
    root["projection"] = "lab";
    root["baseline_condition"] = baseline;

    ordered_json scenes = ordered_json::array();
    for (const BundleScene& s : spec.scenes) {
        scenes.push_back({{"id", s.id}, {"environment", s.environment}});
    }
    root["scenes"] = std::move(scenes);

    ordered_json conditions = ordered_json::array();
    for (const BundleCondition& c : spec.conditions) {
        conditions.push_back(c.id);
    }
    root["conditions"] = std::move(conditions);
    root["illuminants"] = spec.illuminants;

    ordered_json tables = ordered_json::array();
    ordered_json cells = ordered_json::array();

    const IlluminantSpec neutral = named_illuminant("neutral");
    for (const BundleScene& s : spec.scenes) {
        std::vector<int> positions = spec.positions;
        if (positions.empty()) {
            positions.push_back(s.scene.target_index);
        }
        for (const BundleCondition& cond : spec.conditions) {
            for (const std::string& illum_name : spec.illuminants) {
                IlluminantSpec illum = named_illuminant(illum_name);
                SceneSpec variant = apply_mechanism(s.scene, cond.mechanism,
                                                    illum, spec.white_point);
                CompetitorSet comps =
                    make_competitor_set(s.scene, illum, spec.white_point);
                comps.scene_id = s.id;
                comps.condition_id = cond.id;
                comps.illuminant_id = illum_name;

                ordered_json positions_json;
                for (CompetitorLabel label : kCompetitorLabels) {
                    const LabColor& p = comps.at(label);
                    positions_json[to_string(label)] = {p.L, p.a, p.b};
                }
                tables.push_back({{"scene", s.id},
                                  {"condition", cond.id},
                                  {"illuminant", illum_name},
                                  {"positions", std::move(positions_json)}});

                std::vector<CompetitorRender> renders = competitor_scene_set(
                    variant, comps, positions, illum, spec.white_point);
                std::vector<CompetitorRender> neutral_renders;
                if (spec.perfect_predictions) {
                    neutral_renders = competitor_scene_set(
                        variant, comps, positions, neutral, spec.white_point);
                }

                ordered_json images = ordered_json::array();
                for (std::size_t i = 0; i < renders.size(); ++i) {
                    const CompetitorRender& r = renders[i];
                    std::string base = s.id + "_" + cond.id + "_" +
                                       illum_name + "_" + to_string(r.label) +
                                       "_p" + std::to_string(r.position);
                    std::string image_rel = "images/" + base + ".png";
                    std::string mask_rel = "masks/" + base + "_mask.png";
                    write_image(dir / image_rel,
                                to_srgb_encoded(r.image, spec.white_point),
                                spec.bit_depth);
                    write_mask(dir / mask_rel, r.masks);
                    if (spec.perfect_predictions) {
                        write_image(
                            dir / "pred_perfect" / (base + ".png"),
                            to_srgb_encoded(neutral_renders[i].image,
                                            spec.white_point),
                            spec.bit_depth);
                    }
                    if (spec.identity_predictions) {
                        std::filesystem::copy_file(
                            dir / image_rel,
                            dir / "pred_identity" / (base + ".png"),
                            std::filesystem::copy_options::overwrite_existing);
                    }
                    images.push_back(
                        {{"image", image_rel},
                         {"mask", mask_rel},
                         {"competitors",
                          ordered_json::array({to_string(r.label)})},
                         {"position", r.position},
                         {"trial", "p" + std::to_string(r.position)}});
                }
                cells.push_back({{"scene", s.id},
                                 {"condition", cond.id},
                                 {"illuminant", illum_name},
                                 {"images", std::move(images)}});
            }
        }
    }
    root["competitors"] = std::move(tables);
    root["cells"] = std::move(cells);

    std::filesystem::path manifest_path = dir / "manifest.json";
    dump_json_file(manifest_path, root);
    load_manifest(manifest_path); // round-trip check: bundles must always load
    return manifest_path;
}

} // namespace cceval
