#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cceval/color.hpp"
#include "cceval/errors.hpp"
#include "cceval/estimators.hpp"
#include "cceval/harness.hpp"
#include "cceval/image.hpp"
#include "cceval/image_io.hpp"
#include "cceval/psychophys.hpp"
#include "cceval/scenegen.hpp"

namespace {

using namespace cceval;

std::vector<double> parse_triple(const std::string& text,
                                 const std::string& what) {
    std::vector<double> out;
    std::string cur;
    auto flush = [&] {
        double v = 0.0;
        const char* begin = cur.data();
        const char* end = begin + cur.size();
        auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
            throw ParseError(what + ": bad number \"" + cur + "\"");
        }
        out.push_back(v);
        cur.clear();
    };
    for (char c : text) {
        if (c == ',') {
            flush();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur.push_back(c);
        }
    }
    flush();
    if (out.size() != 3) {
        throw ParseError(what + ": expected three comma-separated numbers");
    }
    return out;
}

PixelSpace parse_space(const std::string& text) {
    if (text == "srgb") {
        return PixelSpace::SrgbEncoded;
    }
    if (text == "linear") {
        return PixelSpace::Linear;
    }
    throw ParseError("unknown color space \"" + text +
                     "\" (expected srgb or linear)");
}

std::optional<EstimatorMethod> parse_method(const std::string& text) {
    for (EstimatorMethod m :
         {EstimatorMethod::GrayWorld, EstimatorMethod::WhitePatch,
          EstimatorMethod::ShadesOfGray, EstimatorMethod::GrayEdge,
          EstimatorMethod::WeightedGrayEdge}) {
        if (text == to_string(m)) {
            return m;
        }
    }
    return std::nullopt;
}

// Estimator selection shared by estimate, correct and evaluate. Flags left
// unset fall back to the method's canonical settings.
struct EstimatorFlags {
    std::string method;
    int order = 0;
    double p = 0.0;
    double sigma = 0.0;
    double kappa = 0.0;
    CLI::Option* method_opt = nullptr;
    CLI::Option* order_opt = nullptr;
    CLI::Option* p_opt = nullptr;
    CLI::Option* sigma_opt = nullptr;
    CLI::Option* kappa_opt = nullptr;

    void add(CLI::App& cmd, bool required) {
        method_opt = cmd.add_option(
            "--method", method,
            "gray-world, white-patch, shades-of-gray, gray-edge or "
            "weighted-gray-edge");
        if (required) {
            method_opt->required();
        }
        order_opt = cmd.add_option("--order", order,
                                   "derivative order override (0, 1 or 2)");
        p_opt = cmd.add_option("--p", p,
                               "Minkowski norm override (inf for maximum)");
        sigma_opt =
            cmd.add_option("--sigma", sigma, "Gaussian scale override");
        kappa_opt = cmd.add_option("--kappa", kappa,
                                   "edge weight exponent override");
    }

    EstimatorParams params() const {
        std::optional<EstimatorMethod> m = parse_method(method);
        if (!m) {
            throw ParseError("unknown method \"" + method + "\"");
        }
        EstimatorParams out = EstimatorParams::defaults(*m);
        if (order_opt->count() > 0) {
            out.derivative_order = order;
        }
        if (p_opt->count() > 0) {
            out.minkowski_p = p;
        }
        if (sigma_opt->count() > 0) {
            out.smoothing_sigma = sigma;
        }
        if (kappa_opt->count() > 0) {
            out.edge_weight_exponent = kappa;
        }
        out.validate();
        return out;
    }
};

// Default white point: --white-point flag, else CCEVAL_WHITE_POINT, else
// D65.
struct RunConfig {
    WhitePoint white_point = kD65;
    bool white_point_set = false;
    std::string flag_value;

    void resolve() {
        std::string text = flag_value;
        if (text.empty()) {
            if (const char* env = std::getenv("CCEVAL_WHITE_POINT")) {
                text = env;
            }
        }
        if (text.empty()) {
            return;
        }
        std::vector<double> v = parse_triple(text, "white point");
        if (v[0] <= 0.0 || v[1] <= 0.0 || v[2] <= 0.0) {
            throw ParseError("white point must be positive");
        }
        white_point = WhitePoint{v[0], v[1], v[2]};
        white_point_set = true;
    }
};

// A name from the stock list, an r,g,b triple, or a JSON file path.
IlluminantSpec resolve_illuminant(const std::string& text) {
    for (const std::string& name : illuminant_names()) {
        if (text == name) {
            return named_illuminant(text);
        }
    }
    if (text.find(',') != std::string::npos) {
        std::vector<double> v = parse_triple(text, "illuminant");
        if (v[0] <= 0.0 || v[1] <= 0.0 || v[2] <= 0.0) {
            throw ZeroChannelIlluminant("illuminant channels must be positive");
        }
        double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        return IlluminantSpec{"custom",
                              LinearRgb{v[0] / norm, v[1] / norm, v[2] / norm}};
    }
    return load_illuminant(text);
}

std::string sanitize_id(const std::string& text) {
    std::string out;
    for (char c : text) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                  (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
        out.push_back(ok ? c : '-');
    }
    return out.empty() ? "scene" : out;
}

int default_jobs() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

// ---------------------------------------------------------------------------

struct EstimateArgs {
    std::string image;
    std::string space = "srgb";
    bool as_json = false;
    EstimatorFlags estimator;
};

int run_estimate(const EstimateArgs& args) {
    Image img = read_image(args.image, parse_space(args.space));
    IlluminantEstimate e =
        estimate_illuminant(to_linear(img), args.estimator.params());
    if (args.as_json) {
        nlohmann::ordered_json out;
        out["method"] = args.estimator.method;
        out["direction"] = {e.direction.r, e.direction.g, e.direction.b};
        std::printf("%s\n", out.dump().c_str());
    } else {
        std::printf("%.6f %.6f %.6f\n", e.direction.r, e.direction.g,
                    e.direction.b);
    }
    return 0;
}

struct CorrectArgs {
    std::string image;
    std::string out;
    std::string illuminant;
    std::string truth;
    std::string space = "srgb";
    int bits = 0; // 0 = preserve input depth
    EstimatorFlags estimator;
};

int run_correct(const CorrectArgs& args) {
    bool has_illum = !args.illuminant.empty();
    bool has_method = args.estimator.method_opt->count() > 0;
    if (has_illum == has_method) {
        throw ParseError("pass exactly one of --illuminant or --method");
    }
    bool oracle = has_method && args.estimator.method == "oracle";
    if (oracle && args.truth.empty()) {
        throw ParseError("--method oracle needs --truth pointing at the "
                         "illuminant JSON");
    }
    if (!oracle && !args.truth.empty()) {
        throw ParseError("--truth only applies to --method oracle");
    }

    PixelSpace space = parse_space(args.space);
    int depth = args.bits != 0 ? args.bits : read_image_depth(args.image);
    Image img = read_image(args.image, space);
    Image linear = to_linear(img);

    IlluminantEstimate estimate;
    if (has_illum) {
        estimate.direction = resolve_illuminant(args.illuminant).color;
    } else if (oracle) {
        estimate.direction = load_illuminant(args.truth).color;
    } else {
        estimate = estimate_illuminant(linear, args.estimator.params());
    }

    Image corrected = von_kries_correct(linear, estimate);
    write_image(args.out,
                space == PixelSpace::SrgbEncoded ? to_srgb_encoded(corrected)
                                                 : corrected,
                depth);
    return 0;
}

struct SynthArgs {
    std::string scene;
    std::string illuminant = "neutral";
    std::string mechanism = "baseline";
    std::string surround_color;
    std::string bright_color;
    double magnitude = 0.0;
    int added_patches = 0;
    std::string out;
    std::string masks;
    std::string reflectance;
    std::string bundle;
    std::string environment = "indoor";
    bool perfect_predictions = false;
    bool identity_predictions = false;
    int bits = 16;
    RunConfig* config = nullptr;
};

MechanismSpec mechanism_from_args(const SynthArgs& args) {
    std::optional<MechanismKind> kind = parse_mechanism(args.mechanism);
    if (!kind) {
        throw ParseError("unknown mechanism \"" + args.mechanism + "\"");
    }
    MechanismSpec mech;
    mech.kind = *kind;
    if (!args.surround_color.empty()) {
        std::vector<double> v = parse_triple(args.surround_color, "surround color");
        mech.surround_color = LinearRgb{v[0], v[1], v[2]};
    }
    if (!args.bright_color.empty()) {
        std::vector<double> v = parse_triple(args.bright_color, "bright color");
        mech.bright_color = LinearRgb{v[0], v[1], v[2]};
    }
    mech.magnitude = args.magnitude;
    mech.added_patches = args.added_patches;
    mech.validate();
    return mech;
}

int run_synth(const SynthArgs& args) {
    SceneSpec scene = load_scene_spec(args.scene);
    MechanismSpec mech = mechanism_from_args(args);
    const WhitePoint& wp = args.config->white_point;

    if (!args.bundle.empty()) {
        BundleSpec spec;
        spec.scenes.push_back(
            {sanitize_id(std::filesystem::path(args.scene).stem().string()),
             args.environment, scene});
        if (mech.kind != MechanismKind::Baseline) {
            spec.conditions.push_back({args.mechanism, mech});
        }
        spec.white_point = wp;
        spec.bit_depth = args.bits;
        spec.perfect_predictions = args.perfect_predictions;
        spec.identity_predictions = args.identity_predictions;
        std::filesystem::path manifest = write_bundle(args.bundle, spec);
        std::printf("%s\n", manifest.string().c_str());
        return 0;
    }

    if (args.out.empty()) {
        throw ParseError("pass --out for a single render or --bundle for a "
                         "full grid");
    }
    IlluminantSpec illum = resolve_illuminant(args.illuminant);
    SceneSpec variant = apply_mechanism(scene, mech, illum, wp);
    RenderResult rr = render(variant, illum);
    write_image(args.out, to_srgb_encoded(rr.image, wp), args.bits);
    if (!args.masks.empty()) {
        write_mask(args.masks, rr.masks);
    }
    if (!args.reflectance.empty()) {
        write_image(args.reflectance, rr.gt_reflectance, 16);
    }
    return 0;
}

struct EvaluateArgs {
    std::string manifest;
    std::string external_dir;
    std::string external_space = "srgb";
    std::string out_dir = ".";
    int jobs = default_jobs();
    std::uint64_t seed = 0;
    bool per_trial = false;
    EstimatorFlags estimator;
    RunConfig* config = nullptr;
};

int run_evaluate(const EvaluateArgs& args) {
    bool has_method = args.estimator.method_opt->count() > 0;
    bool has_external = !args.external_dir.empty();
    if (has_method == has_external) {
        throw ParseError("pass exactly one of --method or --external-dir");
    }

    Manifest manifest = load_manifest(args.manifest);
    if (!manifest.white_point_from_file && args.config->white_point_set) {
        manifest.white_point = args.config->white_point;
    }

    PredictorSource src =
        has_method
            ? PredictorSource::builtin_estimator(args.estimator.params())
            : PredictorSource::external_images(
                  args.external_dir, parse_space(args.external_space));

    GridOptions options;
    options.jobs = args.jobs;
    options.per_trial = args.per_trial;
    options.seed = args.seed;
    GridResult result = run_grid(manifest, src, options);

    std::filesystem::path out_dir = args.out_dir;
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    write_records_csv(out_dir / "records.csv", result.records);
    write_report_json(out_dir / "report.json", src, options, result);

    std::fprintf(stderr, "%zu records, %zu cell errors -> %s\n",
                 result.records.size(), result.errors.size(),
                 out_dir.string().c_str());
    for (const CellError& e : result.errors) {
        std::fprintf(stderr, "cell (%s, %s, %s): %s\n", e.scene.c_str(),
                     e.condition.c_str(), e.illuminant.c_str(),
                     e.message.c_str());
    }
    return result.errors.empty() ? 0 : 5;
}

struct CompareArgs {
    std::string records;
    std::string humans;
    std::string baseline = "baseline";
    std::string manifest;
    std::string indoor;
    std::string outdoor;
    std::string format = "text-table";
    std::string deltas;
    std::uint64_t seed = 0;
    int resamples = 10000;
    bool condition_means = false;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) {
        out.push_back(cur);
    }
    return out;
}

int run_compare(const CompareArgs& args) {
    std::vector<CciRecord> records = load_records_csv(args.records);
    HumanDataTable humans = load_human_csv(args.humans);

    CompareOptions options;
    options.baseline_condition = args.baseline;
    options.condition_means = args.condition_means;
    if (!args.manifest.empty()) {
        options.scene_environment = load_manifest(args.manifest).scene_environment;
    }
    for (const std::string& id : split_list(args.indoor)) {
        options.scene_environment[id] = "indoor";
    }
    for (const std::string& id : split_list(args.outdoor)) {
        options.scene_environment[id] = "outdoor";
    }

    AgreementReport report = compare(records, humans, options);
    if (args.format == "json") {
        std::fputs(format_report_json(report).c_str(), stdout);
    } else if (args.format == "csv") {
        std::fputs(format_report_csv(report).c_str(), stdout);
    } else if (args.format == "text-table") {
        std::fputs(format_report_text(report).c_str(), stdout);
    } else {
        throw ParseError("unknown format \"" + args.format +
                         "\" (expected text-table, json or csv)");
    }

    if (!args.deltas.empty()) {
        std::vector<DeltaCciSummary> summaries = human_delta_summaries(
            humans, args.baseline, args.seed, args.resamples);
        std::ofstream out(args.deltas, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw InputError("cannot open " + args.deltas + " for writing");
        }
        out << "condition,illuminant,subjects,mean,ci_lo,ci_hi\n";
        char buf[160];
        for (const DeltaCciSummary& s : summaries) {
            std::snprintf(buf, sizeof(buf), "%s,%s,%d,%.6f,%.6f,%.6f\n",
                          s.condition.c_str(), s.illuminant.c_str(),
                          s.subjects, s.ci.mean, s.ci.lo, s.ci.hi);
            out << buf;
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Color constancy evaluation pipeline"};
    app.require_subcommand(1);

    RunConfig config;
    app.add_option("--white-point", config.flag_value,
                   "reference white as X,Y,Z (default: CCEVAL_WHITE_POINT "
                   "or D65)");

    EstimateArgs estimate_args;
    CLI::App* estimate_cmd =
        app.add_subcommand("estimate", "Estimate the illuminant of an image");
    estimate_cmd->add_option("image", estimate_args.image, "input image")
        ->required();
    estimate_args.estimator.add(*estimate_cmd, true);
    estimate_cmd->add_option("--space", estimate_args.space,
                             "input encoding: srgb or linear");
    estimate_cmd->add_flag("--json", estimate_args.as_json,
                           "emit JSON instead of a bare triplet");

    CorrectArgs correct_args;
    CLI::App* correct_cmd = app.add_subcommand(
        "correct", "Divide out an illuminant (von Kries white balance)");
    correct_cmd->add_option("image", correct_args.image, "input image")
        ->required();
    correct_cmd->add_option("--out", correct_args.out, "output image path")
        ->required();
    correct_cmd->add_option("--illuminant", correct_args.illuminant,
                            "known illuminant as r,g,b or a name");
    correct_args.estimator.add(*correct_cmd, false);
    correct_cmd->add_option("--truth", correct_args.truth,
                            "illuminant JSON for --method oracle");
    correct_cmd->add_option("--space", correct_args.space,
                            "input encoding: srgb or linear");
    correct_cmd->add_option("--bits", correct_args.bits,
                            "output bit depth (default: same as input)")
        ->check(CLI::IsMember({0, 8, 16}));

    SynthArgs synth_args;
    synth_args.config = &config;
    CLI::App* synth_cmd = app.add_subcommand(
        "synth", "Render a patch-grid scene, optionally manipulated");
    synth_cmd->add_option("--scene", synth_args.scene, "scene JSON")
        ->required();
    synth_cmd->add_option("--illuminant", synth_args.illuminant,
                          "name, r,g,b triple or JSON path");
    synth_cmd->add_option("--mechanism", synth_args.mechanism,
                          "baseline, local-surround, maximum-flux, "
                          "spatial-mean-add-objects or "
                          "spatial-mean-change-reflectances");
    synth_cmd->add_option("--surround-color", synth_args.surround_color,
                          "rendered surround color r,g,b (local-surround)");
    synth_cmd->add_option("--bright-color", synth_args.bright_color,
                          "rendered bright patch color r,g,b (maximum-flux)");
    synth_cmd->add_option("--magnitude", synth_args.magnitude,
                          "spatial-mean shift in dE");
    synth_cmd->add_option("--added-patches", synth_args.added_patches,
                          "patch count for spatial-mean-add-objects");
    synth_cmd->add_option("--out", synth_args.out, "rendered image path");
    synth_cmd->add_option("--masks", synth_args.masks, "patch mask PNG path");
    synth_cmd->add_option("--reflectance", synth_args.reflectance,
                          "ground-truth reflectance image path (16-bit)");
    synth_cmd->add_option("--bundle", synth_args.bundle,
                          "write a full evaluation grid into this directory");
    synth_cmd->add_option("--environment", synth_args.environment,
                          "bundle scene environment: indoor or outdoor");
    synth_cmd->add_flag("--perfect-predictions",
                        synth_args.perfect_predictions,
                        "bundle: also write ground-truth predictions");
    synth_cmd->add_flag("--identity-predictions",
                        synth_args.identity_predictions,
                        "bundle: also write pass-through predictions");
    synth_cmd->add_option("--bits", synth_args.bits, "output bit depth")
        ->check(CLI::IsMember({8, 16}));

    EvaluateArgs evaluate_args;
    evaluate_args.config = &config;
    CLI::App* evaluate_cmd = app.add_subcommand(
        "evaluate", "Run a predictor over a manifest grid");
    evaluate_cmd->add_option("--manifest", evaluate_args.manifest,
                             "grid manifest JSON")
        ->required();
    evaluate_args.estimator.add(*evaluate_cmd, false);
    evaluate_cmd->add_option("--external-dir", evaluate_args.external_dir,
                             "directory of predicted reflectance images");
    evaluate_cmd->add_option("--external-space",
                             evaluate_args.external_space,
                             "prediction encoding: srgb or linear");
    evaluate_cmd->add_option("--out-dir", evaluate_args.out_dir,
                             "where records.csv and report.json go");
    evaluate_cmd->add_option("--jobs", evaluate_args.jobs,
                             "worker threads (results independent of this)");
    evaluate_cmd->add_option("--seed", evaluate_args.seed, "run seed");
    evaluate_cmd->add_flag("--per-trial", evaluate_args.per_trial,
                           "one record per trial instead of pooled");

    CompareArgs compare_args;
    CLI::App* compare_cmd = app.add_subcommand(
        "compare", "Score model records against human data");
    compare_cmd->add_option("--records", compare_args.records,
                            "model records CSV")
        ->required();
    compare_cmd->add_option("--humans", compare_args.humans,
                            "human data CSV")
        ->required();
    compare_cmd->add_option("--baseline", compare_args.baseline,
                            "baseline condition id");
    compare_cmd->add_option("--manifest", compare_args.manifest,
                            "manifest supplying scene environments");
    compare_cmd->add_option("--indoor", compare_args.indoor,
                            "comma-separated indoor scene ids");
    compare_cmd->add_option("--outdoor", compare_args.outdoor,
                            "comma-separated outdoor scene ids");
    compare_cmd->add_option("--format", compare_args.format,
                            "text-table, json or csv");
    compare_cmd->add_option("--deltas", compare_args.deltas,
                            "write per-condition delta summaries CSV here");
    compare_cmd->add_flag("--condition-means", compare_args.condition_means,
                          "correlate one mean per condition instead of "
                          "per-cell values");
    compare_cmd->add_option("--seed", compare_args.seed, "bootstrap seed");
    compare_cmd->add_option("--resamples", compare_args.resamples,
                            "bootstrap resample count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        config.resolve();
        if (estimate_cmd->parsed()) {
            return run_estimate(estimate_args);
        }
        if (correct_cmd->parsed()) {
            return run_correct(correct_args);
        }
        if (synth_cmd->parsed()) {
            return run_synth(synth_args);
        }
        if (evaluate_cmd->parsed()) {
            return run_evaluate(evaluate_args);
        }
        if (compare_cmd->parsed()) {
            return run_compare(compare_args);
        }
    } catch (const GamutError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const DegenerateError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
