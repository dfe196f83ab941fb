#include "cceval/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "cceval/errors.hpp"

namespace cceval {

namespace {

using nlohmann::ordered_json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// (scene, condition, illuminant) -> one value, subject by subject. Keys are
// sorted, so everything downstream is order independent.
using ValueMap = std::map<std::string, double>;
using SubjectMap = std::map<std::string, ValueMap>;

std::string join_key(const std::string& scene, const std::string& condition,
                     const std::string& illuminant) {
    return scene + "|" + condition + "|" + illuminant;
}

std::string key_scene(const std::string& key) {
    return key.substr(0, key.find('|'));
}

std::string key_condition(const std::string& key) {
    std::size_t a = key.find('|');
    std::size_t b = key.find('|', a + 1);
    return key.substr(a + 1, b - a - 1);
}

// Averages duplicate observations of the same key.
ValueMap average_values(const std::map<std::string, std::pair<double, int>>& acc) {
    ValueMap out;
    for (const auto& [key, sum_count] : acc) {
        out[key] = sum_count.first / sum_count.second;
    }
    return out;
}

SubjectMap humans_by_subject(const HumanDataTable& humans) {
    std::map<std::string, std::map<std::string, std::pair<double, int>>> acc;
    for (const HumanRecord& row : humans.rows) {
        auto& cell = acc[row.subject][join_key(row.scene, row.condition,
                                               row.illuminant)];
        cell.first += row.cci;
        cell.second += 1;
    }
    SubjectMap out;
    for (const auto& [subject, values] : acc) {
        out[subject] = average_values(values);
    }
    return out;
}

ValueMap model_by_key(const std::vector<CciRecord>& model) {
    std::map<std::string, std::pair<double, int>> acc;
    for (const CciRecord& rec : model) {
        auto& cell = acc[join_key(rec.scene_id, rec.condition_id,
                                  rec.illuminant_id)];
        cell.first += rec.cci_percent;
        cell.second += 1;
    }
    return average_values(acc);
}

// condition minus baseline within each (scene, illuminant), dropping
// baseline keys and keys without a baseline partner.
ValueMap to_deltas(const ValueMap& values, const std::string& baseline) {
    ValueMap base;
    for (const auto& [key, value] : values) {
        std::string scene = key_scene(key);
        std::string condition = key_condition(key);
        if (condition == baseline) {
            std::string illum = key.substr(key.rfind('|') + 1);
            base[scene + "|" + illum] = value;
        }
    }
    ValueMap out;
    for (const auto& [key, value] : values) {
        std::string condition = key_condition(key);
        if (condition == baseline) {
            continue;
        }
        std::string scene = key_scene(key);
        std::string illum = key.substr(key.rfind('|') + 1);
        auto it = base.find(scene + "|" + illum);
        if (it != base.end()) {
            out[key] = value - it->second;
        }
    }
    return out;
}

bool in_scope(MetricScope scope, const std::string& scene,
              const std::map<std::string, std::string>& envs) {
    if (scope == MetricScope::All) {
        return true;
    }
    auto it = envs.find(scene);
    if (it == envs.end()) {
        return false;
    }
    return it->second == (scope == MetricScope::Indoor ? "indoor" : "outdoor");
}

ValueMap filter_scope(const ValueMap& values, MetricScope scope,
                      const std::map<std::string, std::string>& envs) {
    ValueMap out;
    for (const auto& [key, value] : values) {
        if (in_scope(scope, key_scene(key), envs)) {
            out[key] = value;
        }
    }
    return out;
}

// Mean per condition over scenes and illuminants, so each condition
// contributes a single point to the agreement vectors.
ValueMap condition_mean_values(const ValueMap& values) {
    std::map<std::string, std::pair<double, int>> acc;
    for (const auto& [key, value] : values) {
        auto& cell = acc[key_condition(key)];
        cell.first += value;
        cell.second += 1;
    }
    return average_values(acc);
}

ConditionVector to_vector(const ValueMap& values) {
    ConditionVector v;
    for (const auto& [key, value] : values) {
        v.push(key, value);
    }
    return v;
}

// Subjects with no data and conditions nobody scored are dropped so the
// leave-one-out machinery never sees an all-missing row or column.
ObserverMatrix build_matrix(const SubjectMap& humans) {
    std::set<std::string> keys;
    for (const auto& [subject, values] : humans) {
        for (const auto& [key, value] : values) {
            keys.insert(key);
        }
    }
    ObserverMatrix m;
    m.conditions.assign(keys.begin(), keys.end());
    for (const auto& [subject, values] : humans) {
        if (!values.empty()) {
            m.subjects.push_back(subject);
        }
    }
    m.values.assign(m.subjects.size() * m.conditions.size(), kNan);
    for (std::size_t s = 0; s < m.subjects.size(); ++s) {
        const ValueMap& values = humans.at(m.subjects[s]);
        for (std::size_t c = 0; c < m.conditions.size(); ++c) {
            auto it = values.find(m.conditions[c]);
            if (it != values.end()) {
                m.at(s, c) = it->second;
            }
        }
    }
    return m;
}

template <typename F>
double metric_or_nan(F&& f) {
    try {
        return f();
    } catch (const std::runtime_error&) {
        return kNan;
    }
}

std::string format_metric(double v, const char* spec) {
    if (std::isnan(v)) {
        return "-";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

} // namespace

AgreementReport compare(const std::vector<CciRecord>& model,
                        const HumanDataTable& humans,
                        const CompareOptions& options) {
    if (model.empty()) {
        throw InsufficientData("no model records");
    }
    if (humans.rows.empty()) {
        throw InsufficientData("no human records");
    }

    ValueMap model_cci = model_by_key(model);
    SubjectMap human_cci = humans_by_subject(humans);

    ValueMap model_delta = to_deltas(model_cci, options.baseline_condition);
    SubjectMap human_delta;
    for (const auto& [subject, values] : human_cci) {
        ValueMap d = to_deltas(values, options.baseline_condition);
        if (!d.empty()) {
            human_delta[subject] = d;
        }
    }

    AgreementReport report;
    bool any_overlap = false;
    for (MetricScope scope :
         {MetricScope::All, MetricScope::Indoor, MetricScope::Outdoor}) {
        if (scope != MetricScope::All && options.scene_environment.empty()) {
            continue;
        }
        for (MetricBasis basis : {MetricBasis::Cci, MetricBasis::DeltaCci}) {
            const ValueMap& model_full =
                basis == MetricBasis::Cci ? model_cci : model_delta;
            const SubjectMap& human_full =
                basis == MetricBasis::Cci ? human_cci : human_delta;

            ValueMap model_scope =
                filter_scope(model_full, scope, options.scene_environment);
            SubjectMap human_scope;
            for (const auto& [subject, values] : human_full) {
                ValueMap f =
                    filter_scope(values, scope, options.scene_environment);
                if (!f.empty()) {
                    human_scope[subject] = f;
                }
            }
            if (model_scope.empty() || human_scope.empty()) {
                continue;
            }
            if (options.condition_means) {
                model_scope = condition_mean_values(model_scope);
                for (auto& [subject, values] : human_scope) {
                    values = condition_mean_values(values);
                }
            }

            ObserverMatrix matrix = build_matrix(human_scope);
            ConditionVector human_mean = matrix.mean_vector();
            ConditionVector model_vec = to_vector(model_scope);

            int matched = 0;
            std::set<std::string> human_keys(matrix.conditions.begin(),
                                             matrix.conditions.end());
            for (const std::string& key : model_vec.keys) {
                if (human_keys.count(key)) {
                    ++matched;
                }
            }
            if (matched == 0) {
                continue;
            }
            any_overlap = true;

            std::vector<double> pooled;
            for (double v : matrix.values) {
                if (!std::isnan(v)) {
                    pooled.push_back(v);
                }
            }

            AgreementReport::Entry entry;
            entry.scope = scope;
            entry.basis = basis;
            entry.scores.n = matched;
            entry.scores.accuracy =
                metric_or_nan([&] { return pearson(model_vec, human_mean); });
            entry.scores.bias =
                metric_or_nan([&] { return bias(model_vec, human_mean); });
            entry.scores.normalized_error = metric_or_nan([&] {
                return normalized_error(model_vec, human_mean,
                                        sample_sd(pooled));
            });
            entry.scores.ccc =
                metric_or_nan([&] { return lin_ccc(model_vec, human_mean); });
            entry.ceiling = metric_or_nan([&] { return loo_ceiling(matrix); });
            entry.scores.nccc =
                metric_or_nan([&] { return nccc(model_vec, matrix); });
            report.entries.push_back(std::move(entry));
        }
    }
    if (!any_overlap) {
        throw NoOverlap(
            "model records and human data share no (scene, condition, "
            "illuminant) keys");
    }
    return report;
}

std::vector<DeltaCciSummary> human_delta_summaries(
    const HumanDataTable& humans, const std::string& baseline_condition,
    std::uint64_t seed, int resamples) {
    SubjectMap by_subject = humans_by_subject(humans);

    // (condition, illuminant) -> subject -> mean delta over scenes.
    std::map<std::pair<std::string, std::string>,
             std::map<std::string, std::pair<double, int>>>
        groups;
    for (const auto& [subject, values] : by_subject) {
        ValueMap deltas = to_deltas(values, baseline_condition);
        for (const auto& [key, value] : deltas) {
            std::string condition = key_condition(key);
            std::string illum = key.substr(key.rfind('|') + 1);
            auto& cell = groups[{condition, illum}][subject];
            cell.first += value;
            cell.second += 1;
        }
    }

    std::vector<DeltaCciSummary> out;
    for (const auto& [key, subjects] : groups) {
        DeltaCciSummary s;
        s.condition = key.first;
        s.illuminant = key.second;
        std::vector<double> values;
        for (const auto& [subject, sum_count] : subjects) {
            values.push_back(sum_count.first / sum_count.second);
        }
        s.subjects = int(values.size());
        std::uint64_t summary_seed =
            fnv1a64(key.first + "|" + key.second) ^ seed;
        s.ci = bootstrap_mean_ci(values, resamples, summary_seed);
        out.push_back(std::move(s));
    }
    return out;
}

std::string format_report_text(const AgreementReport& report) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-8s %-10s %4s %9s %9s %9s %9s %9s %9s\n",
                  "scope", "basis", "n", "accuracy", "bias", "norm_err",
                  "ccc", "ceiling", "nccc");
    out << line;
    for (const AgreementReport::Entry& e : report.entries) {
        std::snprintf(line, sizeof(line),
                      "%-8s %-10s %4d %9s %9s %9s %9s %9s %9s\n",
                      to_string(e.scope), to_string(e.basis), e.scores.n,
                      format_metric(e.scores.accuracy, "%.4f").c_str(),
                      format_metric(e.scores.bias, "%.3f").c_str(),
                      format_metric(e.scores.normalized_error, "%.4f").c_str(),
                      format_metric(e.scores.ccc, "%.4f").c_str(),
                      format_metric(e.ceiling, "%.4f").c_str(),
                      format_metric(e.scores.nccc, "%.4f").c_str());
        out << line;
    }
    return out.str();
}

std::string format_report_json(const AgreementReport& report) {
    ordered_json root;
    ordered_json entries = ordered_json::array();
    for (const AgreementReport::Entry& e : report.entries) {
        ordered_json j;
        j["scope"] = to_string(e.scope);
        j["basis"] = to_string(e.basis);
        j["n"] = e.scores.n;
        j["accuracy"] = e.scores.accuracy;
        j["bias"] = e.scores.bias;
        j["normalized_error"] = e.scores.normalized_error;
        j["ccc"] = e.scores.ccc;
        j["ceiling"] = e.ceiling;
        j["nccc"] = e.scores.nccc;
        entries.push_back(std::move(j));
    }
    root["entries"] = std::move(entries);
    return root.dump(2) + "\n";
}

std::string format_report_csv(const AgreementReport& report) {
    std::ostringstream out;
    out << "scope,basis,n,accuracy,bias,normalized_error,ccc,ceiling,nccc\n";
    auto cell = [](double v) {
        if (std::isnan(v)) {
            return std::string();
        }
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        return std::string(buf);
    };
    for (const AgreementReport::Entry& e : report.entries) {
        out << to_string(e.scope) << ',' << to_string(e.basis) << ','
            << e.scores.n << ',' << cell(e.scores.accuracy) << ','
            << cell(e.scores.bias) << ',' << cell(e.scores.normalized_error)
            << ',' << cell(e.scores.ccc) << ',' << cell(e.ceiling) << ','
            << cell(e.scores.nccc) << '\n';
    }
    return out.str();
}

} // namespace cceval
