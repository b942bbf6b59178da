#include "fixtures.hpp"

#include "fsl/classifier.hpp"
#include "fsl/error.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include <cmath>

using namespace fsl;

namespace {

DistanceVector dv(std::initializer_list<double> v, const std::string& id = "q") {
    DistanceVector out;
    out.query_id = id;
    out.d.resize(static_cast<Eigen::Index>(v.size()));
    std::copy(v.begin(), v.end(), out.d.data());
    return out;
}

DistanceVector dv(const Vector& v) {
    DistanceVector out;
    out.d = v;
    return out;
}

struct Training {
    std::vector<DistanceVector> features;
    std::vector<int> labels;
};

Training blobs(int classes, int per_class, int dim, double separation, std::uint64_t seed) {
    Training t;
    for (int c = 0; c < classes; ++c) {
        const Matrix m = fixture::gaussian_matrix(per_class, dim, seed * 31 + static_cast<std::uint64_t>(c));
        for (int i = 0; i < per_class; ++i) {
            Vector row = m.row(i).transpose();
            row(c % dim) += separation;
            t.features.push_back(dv(row));
            t.labels.push_back(c);
        }
    }
    return t;
}

oracle::Mat rows_of(const Training& t, int label) {
    oracle::Mat out;
    for (std::size_t i = 0; i < t.labels.size(); ++i) {
        if (t.labels[i] == label) out.push_back(fixture::to_vec(t.features[i].d));
    }
    return out;
}

}  // namespace

TEST_CASE("two-class direction matches the hand-written 2-D Fisher solution") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const Training t = blobs(2, 6, 2, 1.5, seed);
        LdaOptions o;
        o.reg = 0.0;
        const LdaModel m = fit_lda(t.features, t.labels, o);
        oracle::Vec w = oracle::fisher_direction_2d(rows_of(t, 0), rows_of(t, 1));
        const double norm = std::hypot(w[0], w[1]);
        CHECK(std::abs(m.weights(0, 0) - w[0] / norm) < 1e-10);
        CHECK(std::abs(m.weights(0, 1) - w[1] / norm) < 1e-10);
    }
}

TEST_CASE("class index 1 projects higher and score sign follows the label") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Training t = blobs(2, 10, 4, 2.0, seed + 100);
        const LdaModel m = fit_lda(t.features, t.labels);
        const Matrix pm = m.projected_means();
        CHECK(pm(1, 0) > pm(0, 0));
        for (std::uint64_t q = 0; q < 20; ++q) {
            const Prediction p = classify(dv(fixture::gaussian_matrix(4, 1, q + 1000, 2.0)), m);
            CHECK((p.score > 0.0) == (p.predicted_label == 1));
        }
    }
}

TEST_CASE("classification agrees with a nearest projected mean oracle") {
    const Training t = blobs(2, 12, 2, 1.0, 7);
    LdaOptions o;
    o.reg = 0.0;
    const LdaModel m = fit_lda(t.features, t.labels, o);
    const oracle::Vec w = oracle::fisher_direction_2d(rows_of(t, 0), rows_of(t, 1));
    const oracle::Mat means = {oracle::column_mean(rows_of(t, 0)), oracle::column_mean(rows_of(t, 1))};
    int agreements = 0;
    for (std::uint64_t q = 0; q < 200; ++q) {
        const Vector x = fixture::gaussian_matrix(2, 1, q + 5000, 2.0);
        const int expected = oracle::nearest_projected_mean(fixture::to_vec(x), w, means);
        agreements += classify(dv(x), m).predicted_label == expected ? 1 : 0;
    }
    CHECK(agreements == 200);
}

TEST_CASE("an exact tie goes to the lower label") {
    // Symmetric classes around x = 0 with isotropic scatter: direction (1,0), midpoint 0.
    Training t;
    for (const auto& p : {std::pair{-2.0, 0.0}, {0.0, 0.0}, {-1.0, 1.0}, {-1.0, -1.0}}) {
        t.features.push_back(dv({p.first, p.second}));
        t.labels.push_back(3);
        t.features.push_back(dv({p.first + 2.0, p.second}));
        t.labels.push_back(8);
    }
    const LdaModel m = fit_lda(t.features, t.labels);
    REQUIRE(m.class_labels == std::vector<int>{3, 8});
    const Prediction p = classify(dv({0.0, 5.0}), m);
    CHECK(p.score == 0.0);
    CHECK(p.predicted_label == 3);
    CHECK(classify(dv({0.5, 0.0}), m).predicted_label == 8);
}

TEST_CASE("three classes: generalized eigenvector property and accuracy") {
    const Training t = blobs(3, 30, 6, 4.0, 11);
    const LdaModel m = fit_lda(t.features, t.labels);
    REQUIRE(m.weights.rows() == 2);
    REQUIRE(m.weights.cols() == 6);

    // Recompute scatters independently and check S_B w = l S_W w.
    Matrix sw = Matrix::Zero(6, 6);
    Matrix means = Matrix::Zero(3, 6);
    std::vector<int> counts(3, 0);
    for (std::size_t i = 0; i < t.labels.size(); ++i) {
        means.row(t.labels[i]) += t.features[i].d.transpose();
        ++counts[static_cast<std::size_t>(t.labels[i])];
    }
    for (int c = 0; c < 3; ++c) means.row(c) /= counts[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < t.labels.size(); ++i) {
        const Vector diff = t.features[i].d - means.row(t.labels[i]).transpose();
        sw += diff * diff.transpose();
    }
    sw += m.within_scatter_reg * Matrix::Identity(6, 6);
    const Vector grand = means.colwise().mean().transpose();
    Matrix sb = Matrix::Zero(6, 6);
    for (int c = 0; c < 3; ++c) {
        const Vector diff = means.row(c).transpose() - grand;
        sb += diff * diff.transpose();
    }
    for (int j = 0; j < 2; ++j) {
        const Vector w = m.weights.row(j).transpose();
        const double lambda = w.dot(sb * w) / w.dot(sw * w);
        CHECK((sb * w - lambda * sw * w).norm() < 1e-9 * (sb * w).norm() + 1e-12);
        CHECK(std::abs(w.norm() - 1.0) < 1e-12);
    }

    const Training test = blobs(3, 50, 6, 4.0, 12);
    int correct = 0;
    for (std::size_t i = 0; i < test.labels.size(); ++i) {
        correct += classify(test.features[i], m).predicted_label == test.labels[i] ? 1 : 0;
    }
    CHECK(correct >= 140);
}

TEST_CASE("posterior rule") {
    const Training t = blobs(2, 15, 3, 2.0, 21);
    LdaOptions o;
    o.rule = LdaRule::posterior;
    const LdaModel m = fit_lda(t.features, t.labels, o);
    LdaOptions plain;
    const LdaModel nm = fit_lda(t.features, t.labels, plain);
    for (std::uint64_t q = 0; q < 50; ++q) {
        const DistanceVector x = dv(fixture::gaussian_matrix(3, 1, q + 9000, 2.0));
        const Prediction p = classify(x, m);
        REQUIRE(p.posterior.size() == 2);
        CHECK(p.posterior[0] + p.posterior[1] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(p.posterior[0] >= 0.0);
        // Equal priors and a shared variance: the posterior argmax is the nearest mean.
        if (std::abs(p.score) > 1e-9) CHECK(p.predicted_label == classify(x, nm).predicted_label);
    }
    CHECK(parse_lda_rule("posterior") == LdaRule::posterior);
    CHECK(parse_lda_rule("nearest_mean") == LdaRule::nearest_mean);
    CHECK(to_string(LdaRule::posterior) == "posterior");
    CHECK_THROWS_AS(parse_lda_rule("svm"), UsageError);
}

TEST_CASE("fit_lda and classify preconditions") {
    const Training one = blobs(1, 5, 2, 0.0, 1);
    CHECK_THROWS_AS(fit_lda(one.features, one.labels), DataError);

    Training lonely = blobs(2, 4, 2, 1.0, 2);
    lonely.features.push_back(dv({1.0, 1.0}));
    lonely.labels.push_back(5);
    CHECK_THROWS_AS(fit_lda(lonely.features, lonely.labels), DataError);

    // Constant features: S_W is zero and no regularisation is allowed.
    Training flat;
    for (int i = 0; i < 4; ++i) {
        flat.features.push_back(dv({1.0, 1.0}));
        flat.labels.push_back(i % 2);
    }
    LdaOptions none;
    none.reg = 0.0;
    CHECK_THROWS_AS(fit_lda(flat.features, flat.labels, none), NumericalError);

    const Training t = blobs(2, 5, 3, 1.0, 3);
    const LdaModel m = fit_lda(t.features, t.labels);
    CHECK_THROWS_AS(classify(dv({1.0, 2.0}), m), UsageError);
    CHECK_THROWS_AS((void)m.index_of(9), UsageError);
    CHECK(m.index_of(1) == 1);
}
