#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cceval {

// One series of per-condition scores (CCI or delta CCI) for one subject or
// one model. Keys identify conditions and must be unique; alignment between
// two vectors is by key, dropping keys the other side lacks.
struct ConditionVector {
    std::vector<std::string> keys;
    std::vector<double> values;

    void push(std::string key, double value) {
        keys.push_back(std::move(key));
        values.push_back(value);
    }
    std::size_t size() const { return keys.size(); }
    void validate() const; // unique keys, finite values, keys/values aligned
};

// subjects x conditions grid of scores; NaN marks a missing cell. All
// statistics use pairwise-complete deletion, so a matrix with missing cells
// scores exactly like the complete sub-matrix.
struct ObserverMatrix {
    std::vector<std::string> subjects;
    std::vector<std::string> conditions;
    std::vector<double> values; // subjects*conditions, row major, NaN = missing

    double at(std::size_t subject, std::size_t condition) const {
        return values[subject * conditions.size() + condition];
    }
    double& at(std::size_t subject, std::size_t condition) {
        return values[subject * conditions.size() + condition];
    }
    bool has(std::size_t subject, std::size_t condition) const;

    ConditionVector subject_vector(std::size_t subject) const;
    // Per-condition mean over every subject; `excluding` leaves one out.
    ConditionVector mean_vector() const;
    ConditionVector mean_vector_excluding(std::size_t excluded) const;

    void validate() const;
};

// Sample Pearson correlation over key-matched pairs.
double pearson(const ConditionVector& x, const ConditionVector& y);

// Mean of (model - human_mean) over matched keys.
double bias(const ConditionVector& model, const ConditionVector& human_mean);

// RMSE of (model - human_mean) divided by the supplied human sd (the caller
// computes it over the pooled human values in scope, n-1 divisor).
double normalized_error(const ConditionVector& model,
                        const ConditionVector& human_mean, double human_sd);

// Lin's concordance correlation: 2*cov / (var_x + var_y + (mean_x-mean_y)^2)
// with population (n divisor) moments.
double lin_ccc(const ConditionVector& x, const ConditionVector& y);

// Mean over subjects of lin_ccc(subject, mean of the other subjects),
// restricted per subject to conditions where both sides are defined.
double loo_ceiling(const ObserverMatrix& humans);

// lin_ccc(model, human mean) normalized by the leave-one-out ceiling.
double nccc(const ConditionVector& model, const ObserverMatrix& humans);

struct SubjectVariability {
    std::string subject;
    double mean_pairwise_pearson = 0.0;
    double coefficient_of_variation = 0.0; // population sd / mean
};
std::vector<SubjectVariability> observer_variability(const ObserverMatrix& humans);

// Percentile bootstrap over subject values (resampling subjects with
// replacement); deterministic for a fixed seed.
struct BootstrapCi {
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};
BootstrapCi bootstrap_mean_ci(const std::vector<double>& subject_values,
                              int resamples = 10000, std::uint64_t seed = 0);

double sample_sd(const std::vector<double>& v);     // n-1 divisor
double population_sd(const std::vector<double>& v); // n divisor

// Assembled model-vs-human summary, one entry per scope and score basis.
enum class MetricScope { All, Indoor, Outdoor };
enum class MetricBasis { Cci, DeltaCci };
const char* to_string(MetricScope scope);
const char* to_string(MetricBasis basis);

struct AgreementScores {
    double accuracy = 0.0;         // Pearson r
    double bias = 0.0;
    double normalized_error = 0.0; // RMSE / human sd
    double ccc = 0.0;
    double nccc = 0.0;
    int n = 0; // matched condition count
};

struct AgreementReport {
    struct Entry {
        MetricScope scope{};
        MetricBasis basis{};
        AgreementScores scores;
        double ceiling = 0.0; // LOO human ceiling for this scope/basis
    };
    std::vector<Entry> entries;
};

} // namespace cceval
