#include "fixtures.hpp"

#include "fsl/binary_io.hpp"
#include "fsl/error.hpp"
#include "fsl/evaluation.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <set>

using namespace fsl;

namespace {

TrialConfig small_trials(const LabeledCorpus& corpus, int shots = 8, int trials = 3) {
    TrialConfig c;
    c.scenario = parse_scenario(corpus.class_names()[0] + ":" + corpus.class_names()[1], corpus);
    c.shots_k = shots;
    c.n_trials = trials;
    c.base_seed = 40;
    c.pipeline.d_pca = 6;
    c.pipeline.n_words = 12;
    c.pipeline.pca_subsample = 300;
    return c;
}

RocCurve curve_with_auc(double auc_numerator_of_4) {
    // Two positives, two negatives; AUC = numerator / 4.
    std::vector<ScoredLabel> s;
    if (auc_numerator_of_4 == 4) s = {{2, true}, {3, true}, {0, false}, {1, false}};
    else s = {{0, true}, {3, true}, {1, false}, {2, false}};
    return roc(s);
}

}  // namespace

TEST_CASE("parse_scenario") {
    const LabeledCorpus corpus = fixture::gaussian_corpus(3, 4, 2, 3, 1.0, 1);
    const Scenario s = parse_scenario("c2:c0", corpus);
    CHECK(s.class_a == 2);
    CHECK(s.class_b == 0);
    CHECK(s.name == "c2:c0");
    CHECK_THROWS_AS(parse_scenario("c0", corpus), UsageError);
    CHECK_THROWS_AS(parse_scenario("c0:", corpus), UsageError);
    CHECK_THROWS_AS(parse_scenario("c0:c0", corpus), UsageError);
    CHECK_THROWS_AS(parse_scenario("c0:nope", corpus), UsageError);
}

TEST_CASE("trials: seeds, query scoring and ROC consistency") {
    const LabeledCorpus corpus = fixture::gaussian_corpus(2, 40, 4, 8, 0.6, 2);
    const TrialReport r = run_trials(corpus, small_trials(corpus));
    REQUIRE(r.trials.size() == 3);
    std::vector<double> aucs;
    for (int t = 0; t < 3; ++t) {
        const TrialResult& tr = r.trials[static_cast<std::size_t>(t)];
        CHECK(tr.trial == t);
        CHECK(tr.seed == 40u + static_cast<std::uint64_t>(t));
        CHECK(tr.queries.size() == 16);  // floor(0.2 * 40) per class
        std::vector<double> pos, neg;
        std::size_t correct = 0;
        for (const auto& q : tr.queries) {
            (q.true_label == 1 ? pos : neg).push_back(q.score);
            correct += q.true_label == q.predicted_label ? 1 : 0;
            CHECK((q.score > 0.0) == (q.predicted_label == 1));
        }
        CHECK(std::abs(tr.roc.auc - oracle::mann_whitney_auc(pos, neg)) < 1e-12);
        CHECK(tr.accuracy == doctest::Approx(static_cast<double>(correct) / 16.0));
        aucs.push_back(tr.roc.auc);
    }
    const double mean = (aucs[0] + aucs[1] + aucs[2]) / 3.0;
    double var = 0.0;
    for (double a : aucs) var += (a - mean) * (a - mean);
    CHECK(r.mean_auc == doctest::Approx(mean).epsilon(1e-12));
    CHECK(r.std_auc == doctest::Approx(std::sqrt(var / 2.0)).epsilon(1e-12));
    CHECK(r.mean_roc.size() == 101);
    CHECK(r.mean_auc > 0.8);
}

TEST_CASE("scenario orientation: scores grow towards class_b") {
    const LabeledCorpus corpus = fixture::gaussian_corpus(2, 40, 4, 8, 0.6, 3);
    TrialConfig c = small_trials(corpus, 8, 1);
    c.scenario = parse_scenario("c1:c0", corpus);
    const TrialReport r = run_trials(corpus, c);
    CHECK(r.mean_auc > 0.8);
    for (const auto& q : r.trials[0].queries) CHECK((q.score > 0.0) == (q.predicted_label == 0));
}

TEST_CASE("thread count does not change the results") {
    const LabeledCorpus corpus = fixture::gaussian_corpus(2, 30, 4, 8, 0.3, 4);
    TrialConfig one = small_trials(corpus, 8, 4);
    TrialConfig many = one;
    many.threads = 3;
    const SweepReport a = sweep(corpus, {one.scenario}, {4, 8}, one);
    const SweepReport b = sweep(corpus, {one.scenario}, {4, 8}, many);
    ReportOptions o;
    o.deterministic = true;
    CHECK(report_json(a, o) == report_json(b, o));
    CHECK(summary_csv(a, o) == summary_csv(b, o));
    CHECK(roc_grid_svg(a, o) == roc_grid_svg(b, o));
}

TEST_CASE("aggregate over known curves") {
    TrialReport r;
    for (double num : {4.0, 2.0}) {
        TrialResult t;
        t.roc = curve_with_auc(num);
        t.operating_point = youden_point(t.roc);
        t.fit_time_s = num;
        r.trials.push_back(t);
    }
    aggregate(r);
    CHECK(r.trials[1].roc.auc == 0.5);
    CHECK(r.mean_auc == 0.75);
    CHECK(r.std_auc == doctest::Approx(std::sqrt(0.125)));
    CHECK(r.mean_fit_time_s == 3.0);
    CHECK(r.mean_roc.front().second == doctest::Approx(0.5 * (1.0 + r.trials[1].roc.tpr_at(0.0))));
    TrialReport empty;
    CHECK_THROWS_AS(aggregate(empty), UsageError);
}

TEST_CASE("sweep keeps going past a failing cell") {
    const LabeledCorpus corpus = fixture::gaussian_corpus(2, 20, 4, 8, 0.3, 5);
    const TrialConfig base = small_trials(corpus, 4, 2);
    const SweepReport r = sweep(corpus, {base.scenario}, {4, 100}, base);
    REQUIRE(r.cells.size() == 2);
    CHECK(r.cell(0, 0).report.has_value());
    CHECK_FALSE(r.cell(0, 1).report.has_value());
    CHECK_FALSE(r.cell(0, 1).error.empty());
    const std::string csv = summary_csv(r, {});
    CHECK(csv.rfind("scenario,k,mean_auc,std_auc,sens,spec,fit_time_s\n", 0) == 0);
    CHECK(csv.find("c0:c1,100,nan,nan,nan,nan,nan") != std::string::npos);
    CHECK_THROWS_AS(sweep(corpus, {}, {4}, base), UsageError);
}

TEST_CASE("report files") {
    const LabeledCorpus corpus = fixture::gaussian_corpus(2, 20, 4, 8, 0.3, 6);
    const TrialConfig base = small_trials(corpus, 4, 2);
    const SweepReport r = sweep(corpus, {base.scenario}, {4}, base);
    ReportOptions o;
    o.deterministic = true;
    o.config_json = R"({"eval":{"trials":2}})";
    const auto j = nlohmann::json::parse(report_json(r, o));
    CHECK(j["format"] == "fsl-sweep-report");
    CHECK(j["generated_at"] == "");
    CHECK(j["config"]["eval"]["trials"] == 2);
    CHECK(j["cells"].size() == 1);
    CHECK(j["cells"][0]["report"]["trials"][0]["fit_time_s"] == 0.0);
    CHECK(j["cells"][0]["report"]["trials"][0]["predictions"].size() == 8);

    o.include_predictions = false;
    CHECK_FALSE(nlohmann::json::parse(report_json(r, o))["cells"][0]["report"]["trials"][0].contains("predictions"));

    const fixture::TempDir dir("evaluation");
    write_sweep_outputs(dir / "out", r, o);
    for (const char* name : {"report.json", "summary.csv", "roc_grid.svg"}) CHECK(std::filesystem::exists(dir / "out" / name));
    const Bytes svg = read_file(dir / "out" / "roc_grid.svg");
    CHECK(std::string(svg.begin(), svg.end()).find("c0:c1") != std::string::npos);

    o.config_json = "{oops";
    CHECK_THROWS_AS(report_json(r, o), UsageError);
}

TEST_CASE("run_trials preconditions") {
    const LabeledCorpus corpus = fixture::gaussian_corpus(2, 20, 4, 8, 0.3, 7);
    TrialConfig c = small_trials(corpus);
    c.n_trials = 0;
    CHECK_THROWS_AS(run_trials(corpus, c), UsageError);
    c = small_trials(corpus);
    c.shots_k = 1;
    CHECK_THROWS_AS(run_trials(corpus, c), UsageError);
}
