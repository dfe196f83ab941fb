#include "cceval/agreement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "cceval/errors.hpp"
#include "cceval/numeric.hpp"

namespace cceval {

namespace {

struct AlignedPairs {
    std::vector<double> x;
    std::vector<double> y;
};

// Key-matched values in x's key order; keys only one side has are dropped.
AlignedPairs align(const ConditionVector& x, const ConditionVector& y) {
    x.validate();
    y.validate();
    std::unordered_map<std::string, double> lookup;
    lookup.reserve(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        lookup.emplace(y.keys[i], y.values[i]);
    AlignedPairs out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto it = lookup.find(x.keys[i]);
        if (it != lookup.end()) {
            out.x.push_back(x.values[i]);
            out.y.push_back(it->second);
        }
    }
    return out;
}

double mean_of(const std::vector<double>& v) {
    CompensatedSum s;
    for (double x : v)
        s.add(x);
    return s.value() / v.size();
}

// Population (n divisor) central moments.
struct Moments {
    double mean_x = 0.0, mean_y = 0.0;
    double var_x = 0.0, var_y = 0.0;
    double cov = 0.0;
};

Moments central_moments(const AlignedPairs& p) {
    Moments m;
    m.mean_x = mean_of(p.x);
    m.mean_y = mean_of(p.y);
    CompensatedSum sxx, syy, sxy;
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        const double dx = p.x[i] - m.mean_x;
        const double dy = p.y[i] - m.mean_y;
        sxx.add(dx * dx);
        syy.add(dy * dy);
        sxy.add(dx * dy);
    }
    const double n = static_cast<double>(p.x.size());
    m.var_x = sxx.value() / n;
    m.var_y = syy.value() / n;
    m.cov = sxy.value() / n;
    return m;
}

} // namespace

void ConditionVector::validate() const {
    if (keys.size() != values.size())
        throw InvariantViolation("condition keys and values out of step");
    std::unordered_set<std::string> seen;
    for (const std::string& k : keys) {
        if (!seen.insert(k).second)
            throw InvariantViolation("duplicate condition key: " + k);
    }
    for (double v : values) {
        if (!std::isfinite(v))
            throw InvariantViolation("non-finite condition value");
    }
}

bool ObserverMatrix::has(std::size_t subject, std::size_t condition) const {
    return !std::isnan(at(subject, condition));
}

ConditionVector ObserverMatrix::subject_vector(std::size_t subject) const {
    ConditionVector v;
    for (std::size_t c = 0; c < conditions.size(); ++c) {
        if (has(subject, c))
            v.push(conditions[c], at(subject, c));
    }
    return v;
}

ConditionVector ObserverMatrix::mean_vector() const {
    return mean_vector_excluding(subjects.size());
}

ConditionVector ObserverMatrix::mean_vector_excluding(
    std::size_t excluded) const {
    ConditionVector v;
    for (std::size_t c = 0; c < conditions.size(); ++c) {
        CompensatedSum sum;
        int n = 0;
        for (std::size_t s = 0; s < subjects.size(); ++s) {
            if (s == excluded || !has(s, c))
                continue;
            sum.add(at(s, c));
            ++n;
        }
        if (n > 0)
            v.push(conditions[c], sum.value() / n);
    }
    return v;
}

void ObserverMatrix::validate() const {
    if (values.size() != subjects.size() * conditions.size())
        throw InvariantViolation("observer matrix shape mismatch");
    std::unordered_set<std::string> seen;
    for (const std::string& s : subjects) {
        if (!seen.insert(s).second)
            throw InvariantViolation("duplicate subject id: " + s);
    }
    seen.clear();
    for (const std::string& c : conditions) {
        if (!seen.insert(c).second)
            throw InvariantViolation("duplicate condition key: " + c);
    }
}

double pearson(const ConditionVector& x, const ConditionVector& y) {
    const AlignedPairs p = align(x, y);
    if (p.x.size() < 2)
        throw InsufficientData("pearson needs at least 2 matched pairs");
    const Moments m = central_moments(p);
    if (m.var_x <= 0.0 || m.var_y <= 0.0)
        throw ZeroVariance("pearson undefined for a constant series");
    return m.cov / std::sqrt(m.var_x * m.var_y);
}

double bias(const ConditionVector& model, const ConditionVector& human_mean) {
    const AlignedPairs p = align(model, human_mean);
    if (p.x.empty())
        throw MismatchedKeys("no shared conditions between model and humans");
    CompensatedSum diff;
    for (std::size_t i = 0; i < p.x.size(); ++i)
        diff.add(p.x[i] - p.y[i]);
    return diff.value() / p.x.size();
}

double normalized_error(const ConditionVector& model,
                        const ConditionVector& human_mean, double human_sd) {
    if (!(human_sd > 0.0))
        throw ZeroSd("human sd must be positive");
    const AlignedPairs p = align(model, human_mean);
    if (p.x.empty())
        throw MismatchedKeys("no shared conditions between model and humans");
    CompensatedSum sq;
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        const double d = p.x[i] - p.y[i];
        sq.add(d * d);
    }
    return std::sqrt(sq.value() / p.x.size()) / human_sd;
}

double lin_ccc(const ConditionVector& x, const ConditionVector& y) {
    const AlignedPairs p = align(x, y);
    if (p.x.size() < 2)
        throw InsufficientData("ccc needs at least 2 matched pairs");
    const Moments m = central_moments(p);
    const double gap = m.mean_x - m.mean_y;
    const double denom = m.var_x + m.var_y + gap * gap;
    if (denom <= 0.0)
        throw DegenerateInputs("both series constant and identical in mean");
    return 2.0 * m.cov / denom;
}

double loo_ceiling(const ObserverMatrix& humans) {
    humans.validate();
    if (humans.subjects.size() < 2)
        throw InsufficientData("ceiling needs at least 2 subjects");
    CompensatedSum sum;
    for (std::size_t s = 0; s < humans.subjects.size(); ++s)
        sum.add(lin_ccc(humans.subject_vector(s),
                        humans.mean_vector_excluding(s)));
    return sum.value() / humans.subjects.size();
}

double nccc(const ConditionVector& model, const ObserverMatrix& humans) {
    const double ceiling = loo_ceiling(humans);
    if (!(ceiling > 0.0))
        throw ZeroCeiling("human ceiling is not positive");
    return lin_ccc(model, humans.mean_vector()) / ceiling;
}

std::vector<SubjectVariability> observer_variability(
    const ObserverMatrix& humans) {
    humans.validate();
    if (humans.subjects.size() < 2)
        throw InsufficientData("variability needs at least 2 subjects");
    if (humans.conditions.size() < 2)
        throw InsufficientData("variability needs at least 2 conditions");

    std::vector<SubjectVariability> out;
    out.reserve(humans.subjects.size());
    for (std::size_t s = 0; s < humans.subjects.size(); ++s) {
        SubjectVariability row;
        row.subject = humans.subjects[s];

        CompensatedSum rsum;
        int pairs = 0;
        for (std::size_t t = 0; t < humans.subjects.size(); ++t) {
            if (t == s)
                continue;
            rsum.add(pearson(humans.subject_vector(s),
                             humans.subject_vector(t)));
            ++pairs;
        }
        row.mean_pairwise_pearson = rsum.value() / pairs;

        const ConditionVector own = humans.subject_vector(s);
        const double mean = mean_of(own.values);
        if (mean == 0.0)
            throw ZeroMean("coefficient of variation undefined at zero mean");
        row.coefficient_of_variation = population_sd(own.values) / mean;
        out.push_back(std::move(row));
    }
    return out;
}

BootstrapCi bootstrap_mean_ci(const std::vector<double>& subject_values,
                              int resamples, std::uint64_t seed) {
    if (subject_values.empty())
        throw InsufficientData("bootstrap over an empty sample");
    if (resamples < 1)
        throw InvariantViolation("bootstrap needs at least 1 resample");

    BootstrapCi ci;
    ci.mean = mean_of(subject_values);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0,
                                                    subject_values.size() - 1);
    std::vector<double> means(resamples);
    for (int b = 0; b < resamples; ++b) {
        CompensatedSum s;
        for (std::size_t i = 0; i < subject_values.size(); ++i)
            s.add(subject_values[pick(rng)]);
        means[b] = s.value() / subject_values.size();
    }
    std::sort(means.begin(), means.end());

    auto quantile = [&](double q) {
        const double idx = q * (means.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(idx);
        const std::size_t hi = std::min(lo + 1, means.size() - 1);
        const double frac = idx - lo;
        return means[lo] * (1.0 - frac) + means[hi] * frac;
    };
    ci.lo = quantile(0.025);
    ci.hi = quantile(0.975);
    return ci;
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2)
        throw InsufficientData("sd needs at least 2 values");
    const double mean = mean_of(v);
    CompensatedSum sq;
    for (double x : v) {
        const double d = x - mean;
        sq.add(d * d);
    }
    return std::sqrt(sq.value() / (v.size() - 1));
}

double population_sd(const std::vector<double>& v) {
    if (v.empty())
        throw InsufficientData("sd of an empty sample");
    const double mean = mean_of(v);
    CompensatedSum sq;
    for (double x : v) {
        const double d = x - mean;
        sq.add(d * d);
    }
    return std::sqrt(sq.value() / v.size());
}

const char* to_string(MetricScope scope) {
    switch (scope) {
    case MetricScope::All:
        return "all";
    case MetricScope::Indoor:
        return "indoor";
    case MetricScope::Outdoor:
        return "outdoor";
    }
    return "?";
}

const char* to_string(MetricBasis basis) {
    switch (basis) {
    case MetricBasis::Cci:
        return "cci";
    case MetricBasis::DeltaCci:
        return "delta_cci";
    }
    return "?";
}

} // namespace cceval
