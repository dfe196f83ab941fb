#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"

#include "near.hpp"

#include "cceval/agreement.hpp"
#include "cceval/errors.hpp"

using namespace cceval;

namespace {

const double kNan = std::numeric_limits<double>::quiet_NaN();

ConditionVector vec(std::vector<std::string> keys, std::vector<double> values) {
    ConditionVector v;
    for (std::size_t i = 0; i < keys.size(); ++i)
        v.push(keys[i], values[i]);
    return v;
}

ObserverMatrix matrix(std::vector<std::string> subjects,
                      std::vector<std::string> conditions,
                      std::vector<double> values) {
    ObserverMatrix m;
    m.subjects = std::move(subjects);
    m.conditions = std::move(conditions);
    m.values = std::move(values);
    m.validate();
    return m;
}

} // namespace

TEST_SUITE("agreement") {

TEST_CASE("condition vector validation") {
    CHECK_NOTHROW(vec({"a", "b"}, {1.0, 2.0}).validate());
    CHECK_THROWS_AS(vec({"a", "a"}, {1.0, 2.0}).validate(),
                    InvariantViolation);
    CHECK_THROWS_AS(vec({"a", "b"}, {1.0, kNan}).validate(),
                    InvariantViolation);
    ConditionVector ragged = vec({"a", "b"}, {1.0, 2.0});
    ragged.values.push_back(3.0);
    CHECK_THROWS_AS(ragged.validate(), InvariantViolation);
}

TEST_CASE("concordance on the three-point example") {
    // Population moments: cov 1, variances 2/3 and 14/9, mean gap 1/3, so
    // 2*1 / (2/3 + 14/9 + 1/9) = 6/7.
    ConditionVector x = vec({"a", "b", "c"}, {1.0, 2.0, 3.0});
    ConditionVector y = vec({"a", "b", "c"}, {1.0, 2.0, 4.0});
    CHECK(lin_ccc(x, y) == Near(6.0 / 7.0, 1e-12));
    CHECK(lin_ccc(y, x) == Near(6.0 / 7.0, 1e-12));
}

TEST_CASE("concordance of a vector with itself is one") {
    ConditionVector x = vec({"a", "b", "c", "d"}, {3.0, -1.0, 7.0, 2.5});
    CHECK(lin_ccc(x, x) == 1.0);
}

TEST_CASE("concordance never exceeds the correlation in magnitude") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> val(0.0, 10.0);
    std::uniform_int_distribution<int> len(3, 25);
    std::uniform_real_distribution<double> scale(0.2, 3.0);
    std::uniform_real_distribution<double> shift(-20.0, 20.0);
    for (int trial = 0; trial < 500; ++trial) {
        CAPTURE(trial);
        const int n = len(rng);
        const double k = scale(rng);
        const double c = shift(rng);
        ConditionVector x, y;
        for (int i = 0; i < n; ++i) {
            const double v = val(rng);
            x.push("k" + std::to_string(i), v);
            // Half the pairs are noisy affine images, half independent.
            y.push("k" + std::to_string(i),
                   trial % 2 == 0 ? k * v + c + val(rng) * 0.3 : val(rng));
        }
        const double r = pearson(x, y);
        CHECK(std::fabs(lin_ccc(x, y)) <= std::fabs(r) + 1e-12);
    }
}

TEST_CASE("pearson on the three-point example") {
    ConditionVector x = vec({"a", "b", "c"}, {1.0, 2.0, 3.0});
    ConditionVector y = vec({"a", "b", "c"}, {1.0, 2.0, 4.0});
    CHECK(pearson(x, y) ==
          Near(1.5 / std::sqrt(7.0 / 3.0), 1e-12));
}

TEST_CASE("metrics align series by key") {
    ConditionVector x = vec({"a", "b", "c", "d"}, {1.0, 2.0, 3.0, 9.0});
    ConditionVector y = vec({"d", "b", "e", "a"}, {12.0, 2.0, 100.0, 1.0});
    // Shared keys a, b, d carry (1,2,9) vs (1,2,12).
    ConditionVector xs = vec({"a", "b", "d"}, {1.0, 2.0, 9.0});
    ConditionVector ys = vec({"a", "b", "d"}, {1.0, 2.0, 12.0});
    CHECK(pearson(x, y) == Near(pearson(xs, ys), 1e-12));
    CHECK(lin_ccc(x, y) == Near(lin_ccc(xs, ys), 1e-12));
    CHECK(bias(x, y) == Near(-1.0, 1e-12));
}

TEST_CASE("pearson degenerate inputs") {
    ConditionVector x = vec({"a"}, {1.0});
    CHECK_THROWS_AS(pearson(x, x), InsufficientData);
    ConditionVector flat = vec({"a", "b"}, {2.0, 2.0});
    ConditionVector rise = vec({"a", "b"}, {1.0, 2.0});
    CHECK_THROWS_AS(pearson(flat, rise), ZeroVariance);
}

TEST_CASE("concordance of distinct constants is zero") {
    ConditionVector x = vec({"a", "b"}, {2.0, 2.0});
    ConditionVector y = vec({"a", "b"}, {3.0, 3.0});
    CHECK(lin_ccc(x, y) == 0.0);
    CHECK_THROWS_AS(lin_ccc(x, x), DegenerateInputs);
}

TEST_CASE("bias and normalized error") {
    ConditionVector model = vec({"a", "b"}, {5.0, 7.0});
    ConditionVector humans = vec({"a", "b"}, {4.0, 5.0});
    CHECK(bias(model, humans) == Near(1.5, 1e-12));
    // Differences 1 and 2: RMSE sqrt(2.5), scaled by sd 2.
    CHECK(normalized_error(model, humans, 2.0) ==
          Near(std::sqrt(2.5) / 2.0, 1e-12));

    ConditionVector off = vec({"a", "b"}, {1.0, 2.0});
    ConditionVector ref = vec({"a", "b"}, {2.0, 2.0});
    CHECK(normalized_error(off, ref, 1.0) ==
          Near(std::sqrt(0.5), 1e-6));
    CHECK(normalized_error(off, ref, 1.0) ==
          Near(0.7071, 1e-4));
    CHECK_THROWS_AS(normalized_error(model, humans, 0.0), ZeroSd);

    ConditionVector disjoint = vec({"x"}, {1.0});
    CHECK_THROWS_AS(bias(model, disjoint), MismatchedKeys);
}

TEST_CASE("identical observers reach a ceiling of exactly one") {
    ObserverMatrix humans = matrix(
        {"h1", "h2", "h3"}, {"c1", "c2", "c3", "c4"},
        {10.0, 20.0, 30.0, 25.0,
         10.0, 20.0, 30.0, 25.0,
         10.0, 20.0, 30.0, 25.0});
    CHECK(loo_ceiling(humans) == 1.0);

    ConditionVector model =
        vec({"c1", "c2", "c3", "c4"}, {10.0, 20.0, 30.0, 25.0});
    CHECK(nccc(model, humans) == 1.0);
}

TEST_CASE("anti-correlated observers have no usable ceiling") {
    ObserverMatrix humans = matrix({"h1", "h2"}, {"c1", "c2", "c3"},
                                   {1.0, 2.0, 3.0,
                                    3.0, 2.0, 1.0});
    CHECK(loo_ceiling(humans) == Near(-1.0, 1e-12));
    ConditionVector model = vec({"c1", "c2", "c3"}, {1.0, 2.0, 3.0});
    CHECK_THROWS_AS(nccc(model, humans), ZeroCeiling);
}

TEST_CASE("missing cells behave like the complete sub-matrix") {
    ObserverMatrix full = matrix({"h1", "h2", "h3"}, {"c1", "c2", "c3"},
                                 {1.0, 5.0, 3.0,
                                  2.0, 4.0, 3.5,
                                  1.5, 5.5, 2.5});
    ObserverMatrix padded = matrix({"h1", "h2", "h3"},
                                   {"c1", "c2", "c3", "c4"},
                                   {1.0, 5.0, 3.0, kNan,
                                    2.0, 4.0, 3.5, kNan,
                                    1.5, 5.5, 2.5, kNan});
    CHECK(loo_ceiling(padded) == loo_ceiling(full));

    CHECK(padded.subject_vector(0).size() == 3);
    CHECK_FALSE(padded.has(0, 3));

    // A single missing cell only removes that condition from the pairs the
    // affected subject contributes to.
    ObserverMatrix holed = full;
    holed.at(1, 2) = kNan;
    CHECK(holed.subject_vector(1).size() == 2);
    ConditionVector mean_wo_h2 = holed.mean_vector_excluding(1);
    CHECK(mean_wo_h2.size() == 3);
    CHECK_NOTHROW(loo_ceiling(holed));
}

TEST_CASE("observer variability coefficients") {
    ObserverMatrix humans = matrix({"h1", "h2"}, {"c1", "c2", "c3"},
                                   {1.0, 2.0, 3.0,
                                    2.0, 4.0, 6.0});
    std::vector<SubjectVariability> var = observer_variability(humans);
    REQUIRE(var.size() == 2);
    CHECK(var[0].subject == "h1");
    CHECK(var[0].mean_pairwise_pearson == Near(1.0, 1e-12));
    // Population sd over mean: sqrt(2/3) / 2 for both rows.
    const double expected_cv = std::sqrt(2.0 / 3.0) / 2.0;
    CHECK(var[0].coefficient_of_variation ==
          Near(expected_cv, 1e-12));
    CHECK(var[0].coefficient_of_variation ==
          Near(0.408, 5e-4));
    CHECK(var[1].coefficient_of_variation ==
          Near(expected_cv, 1e-12));

    ObserverMatrix zero_mean = matrix({"h1", "h2"}, {"c1", "c2", "c3"},
                                      {-1.0, 0.0, 1.0,
                                       1.0, 2.0, 3.0});
    CHECK_THROWS_AS(observer_variability(zero_mean), ZeroMean);
}

TEST_CASE("bootstrap intervals are seed-deterministic") {
    const std::vector<double> values{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    BootstrapCi a = bootstrap_mean_ci(values, 2000, 7);
    BootstrapCi b = bootstrap_mean_ci(values, 2000, 7);
    CHECK(a.mean == b.mean);
    CHECK(a.lo == b.lo);
    CHECK(a.hi == b.hi);

    BootstrapCi c = bootstrap_mean_ci(values, 2000, 8);
    CHECK((a.lo != c.lo || a.hi != c.hi));

    CHECK(a.lo < a.hi);
    CHECK(a.lo >= 1.0);
    CHECK(a.hi <= 10.0);
    CHECK(a.mean == Near(5.5, 0.5));

    BootstrapCi single = bootstrap_mean_ci({4.25}, 50, 3);
    CHECK(single.mean == 4.25);
    CHECK(single.lo == 4.25);
    CHECK(single.hi == 4.25);

    CHECK_THROWS_AS(bootstrap_mean_ci({}, 10, 0), InsufficientData);
    CHECK_THROWS_AS(bootstrap_mean_ci(values, 0, 0), InvariantViolation);
}

TEST_CASE("standard deviations") {
    const std::vector<double> v{1.0, 2.0, 3.0};
    CHECK(sample_sd(v) == Near(1.0, 1e-12));
    CHECK(population_sd(v) == Near(std::sqrt(2.0 / 3.0), 1e-12));
    CHECK_THROWS_AS(sample_sd({5.0}), InsufficientData);
    CHECK_THROWS_AS(population_sd({}), InsufficientData);
}

} // TEST_SUITE
