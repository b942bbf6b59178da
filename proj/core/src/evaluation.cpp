#include "fsl/evaluation.hpp"

#include "fsl/error.hpp"
#include "fsl/parallel.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

namespace fsl {

Scenario parse_scenario(const std::string& text, const LabeledCorpus& corpus) {
    const auto colon = text.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
        throw UsageError("scenario '" + text + "' must look like classA:classB");
    }
    Scenario s;
    s.class_a = corpus.label_of(text.substr(0, colon));
    s.class_b = corpus.label_of(text.substr(colon + 1));
    if (s.class_a == s.class_b) throw UsageError("scenario '" + text + "' uses the same class twice");
    s.name = corpus.class_names()[static_cast<std::size_t>(s.class_a)] + ":" +
             corpus.class_names()[static_cast<std::size_t>(s.class_b)];
    return s;
}

namespace {

TrialResult run_one(const LabeledCorpus& corpus, const TrialConfig& config, int t) {
    TrialResult result;
    result.trial = t;
    result.seed = config.base_seed + static_cast<std::uint64_t>(t);

    SplitOptions so;
    so.test_fraction = config.test_fraction;
    so.group_aware = config.group_aware_split;
    const EpisodeSplit split =
        make_split(corpus, {config.scenario.class_a, config.scenario.class_b}, config.shots_k, result.seed, so);

    PipelineConfig pc = config.pipeline;
    pc.seed = result.seed;
    const FittedModel model = fit_pipeline(corpus, split, pc);
    result.fit_time_s = model.fit_time_s;

    // LDA scores are positive towards the larger label; orient towards class_b.
    const double orientation = config.scenario.class_b > config.scenario.class_a ? 1.0 : -1.0;
    std::vector<ScoredLabel> scored;
    std::size_t correct = 0;
    for (const auto& id : split.query) {
        const auto& item = corpus.item(id);
        const Prediction pred = predict(model, std::get<EmbeddingSet>(item.payload));
        QueryResult q{id, item.label, pred.predicted_label, orientation * pred.score};
        scored.push_back({q.score, item.label == config.scenario.class_b});
        correct += q.predicted_label == q.true_label ? 1 : 0;
        result.queries.push_back(std::move(q));
    }
    result.roc = roc(scored);
    result.operating_point = youden_point(result.roc);
    result.accuracy = static_cast<double>(correct) / static_cast<double>(split.query.size());
    return result;
}

}  // namespace

void aggregate(TrialReport& report) {
    const auto n = report.trials.size();
    if (n == 0) throw UsageError("aggregate: no trials");
    std::vector<RocCurve> curves;
    double auc_sum = 0.0, sens = 0.0, spec = 0.0, fit = 0.0;
    for (const auto& t : report.trials) {
        curves.push_back(t.roc);
        auc_sum += t.roc.auc;
        sens += t.operating_point.sensitivity;
        spec += t.operating_point.specificity;
        fit += t.fit_time_s;
    }
    const double dn = static_cast<double>(n);
    report.mean_auc = auc_sum / dn;
    double var = 0.0;
    for (const auto& t : report.trials) var += (t.roc.auc - report.mean_auc) * (t.roc.auc - report.mean_auc);
    report.std_auc = n > 1 ? std::sqrt(var / (dn - 1.0)) : 0.0;
    report.mean_sensitivity = sens / dn;
    report.mean_specificity = spec / dn;
    report.mean_fit_time_s = fit / dn;
    report.mean_roc = vertical_average(curves, 101);
}

TrialReport run_trials(const LabeledCorpus& corpus, const TrialConfig& config) {
    if (config.n_trials < 1) throw UsageError("n_trials must be >= 1");
    if (config.shots_k < 2) throw UsageError("shots_k must be >= 2");
    if (!corpus.has_embeddings()) throw DataError("run_trials: corpus payloads must be embeddings");

    TrialReport report;
    report.config = config;
    report.trials.resize(static_cast<std::size_t>(config.n_trials));
    parallel_for(report.trials.size(), config.threads,
                 [&](std::size_t t) { report.trials[t] = run_one(corpus, config, static_cast<int>(t)); });
    aggregate(report);
    spdlog::info("{} k={}: mean AUC {:.4f} +/- {:.4f} over {} trials", config.scenario.name, config.shots_k,
                 report.mean_auc, report.std_auc, config.n_trials);
    return report;
}

SweepReport sweep(const LabeledCorpus& corpus, const std::vector<Scenario>& scenarios, const std::vector<int>& shot_list,
                  const TrialConfig& base) {
    if (scenarios.empty() || shot_list.empty()) throw UsageError("sweep: need at least one scenario and one shot count");
    SweepReport out;
    out.scenarios = scenarios;
    out.shots = shot_list;
    for (const auto& scenario : scenarios) {
        for (int k : shot_list) {
            SweepCell cell;
            cell.scenario = scenario;
            cell.shots_k = k;
            TrialConfig cfg = base;
            cfg.scenario = scenario;
            cfg.shots_k = k;
            try {
                cell.report = run_trials(corpus, cfg);
            } catch (const Error& e) {
                spdlog::error("{} k={}: {}", scenario.name, k, e.what());
                cell.error = e.what();
            }
            out.cells.push_back(std::move(cell));
        }
    }
    return out;
}

}  // namespace fsl
