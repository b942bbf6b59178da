#include "fsl/evaluation.hpp"

#include "fsl/binary_io.hpp"
#include "fsl/error.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>

namespace fsl {

namespace {

using nlohmann::ordered_json;

std::string format_number(double v, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return buf;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ordered_json roc_json(const RocCurve& curve) {
    ordered_json pts = ordered_json::array();
    for (const auto& p : curve.points) {
        pts.push_back({p.fpr, p.tpr, std::isfinite(p.threshold) ? ordered_json(p.threshold) : ordered_json("inf")});
    }
    return {{"auc", curve.auc}, {"points", pts}};
}

ordered_json trial_report_json(const TrialReport& r, const ReportOptions& options) {
    ordered_json trials = ordered_json::array();
    for (const auto& t : r.trials) {
        ordered_json tj{
            {"trial", t.trial},
            {"seed", t.seed},
            {"auc", t.roc.auc},
            {"accuracy", t.accuracy},
            {"operating_point",
             {{"threshold", t.operating_point.threshold},
              {"sensitivity", t.operating_point.sensitivity},
              {"specificity", t.operating_point.specificity}}},
            {"fit_time_s", options.deterministic ? 0.0 : t.fit_time_s},
            {"roc", roc_json(t.roc)},
        };
        if (options.include_predictions) {
            ordered_json preds = ordered_json::array();
            for (const auto& q : t.queries) {
                preds.push_back({{"id", q.id}, {"label", q.true_label}, {"predicted", q.predicted_label}, {"score", q.score}});
            }
            tj["predictions"] = std::move(preds);
        }
        trials.push_back(std::move(tj));
    }
    ordered_json mean_roc = ordered_json::array();
    for (const auto& [fpr, tpr] : r.mean_roc) mean_roc.push_back({fpr, tpr});
    return {
        {"n_trials", r.config.n_trials},
        {"test_fraction", r.config.test_fraction},
        {"base_seed", r.config.base_seed},
        {"mean_auc", r.mean_auc},
        {"std_auc", r.std_auc},
        {"mean_sensitivity", r.mean_sensitivity},
        {"mean_specificity", r.mean_specificity},
        {"mean_fit_time_s", options.deterministic ? 0.0 : r.mean_fit_time_s},
        {"mean_roc", std::move(mean_roc)},
        {"trials", std::move(trials)},
    };
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

std::string report_json(const SweepReport& report, const ReportOptions& options) {
    ordered_json cells = ordered_json::array();
    for (const auto& cell : report.cells) {
        ordered_json cj{{"scenario", cell.scenario.name},
                        {"class_a", cell.scenario.class_a},
                        {"class_b", cell.scenario.class_b},
                        {"shots", cell.shots_k}};
        if (cell.report) {
            cj["report"] = trial_report_json(*cell.report, options);
        } else {
            cj["error"] = cell.error;
        }
        cells.push_back(std::move(cj));
    }
    ordered_json config;
    try {
        config = ordered_json::parse(options.config_json);
    } catch (const ordered_json::exception&) {
        throw UsageError("report_json: config_json is not valid JSON");
    }
    ordered_json out{
        {"format", "fsl-sweep-report"},
        {"version", 1},
        {"generated_at", options.deterministic ? std::string() : utc_timestamp()},
        {"split", {{"stratified_per_class", true}, {"query_rounding", "floor, min 1"}}},
        {"mean_roc_averaging", "vertical, 101-point FPR grid"},
        {"operating_point", "Youden J maximum"},
        {"config", std::move(config)},
        {"shots", report.shots},
        {"cells", std::move(cells)},
    };
    return out.dump(2) + "\n";
}

std::string summary_csv(const SweepReport& report, const ReportOptions& options) {
    std::ostringstream out;
    out << "scenario,k,mean_auc,std_auc,sens,spec,fit_time_s\n";
    for (const auto& cell : report.cells) {
        out << cell.scenario.name << ',' << cell.shots_k << ',';
        if (!cell.report) {
            out << "nan,nan,nan,nan,nan\n";
            continue;
        }
        const auto& r = *cell.report;
        out << format_number(r.mean_auc) << ',' << format_number(r.std_auc) << ',' << format_number(r.mean_sensitivity)
            << ',' << format_number(r.mean_specificity) << ','
            << format_number(options.deterministic ? 0.0 : r.mean_fit_time_s) << '\n';
    }
    return out.str();
}

std::string roc_grid_svg(const SweepReport& report, const ReportOptions& options) {
    constexpr int panel = 260;
    constexpr int margin = 50;
    constexpr int plot = panel - margin - 15;
    const int n_panels = static_cast<int>(report.scenarios.size());
    const int width = n_panels * panel;
    const int height = panel + 40;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
    svg << "<!-- generated " << (options.deterministic ? std::string("0") : utc_timestamp()) << " -->\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (int s = 0; s < n_panels; ++s) {
        const int x0 = s * panel + margin;
        const int y0 = 25;
        auto px = [&](double fpr) { return format_number(x0 + fpr * plot, 2); };
        auto py = [&](double tpr) { return format_number(y0 + (1.0 - tpr) * plot, 2); };
        svg << "<g>\n";
        svg << "<text x=\"" << x0 + plot / 2 << "\" y=\"15\" text-anchor=\"middle\" font-size=\"12\">"
            << report.scenarios[static_cast<std::size_t>(s)].name << "</text>\n";
        svg << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << plot << "\" height=\"" << plot
            << "\" fill=\"none\" stroke=\"black\"/>\n";
        svg << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1)
            << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4,3\"/>\n";
        for (int t = 0; t <= 4; ++t) {
            const double v = t / 4.0;
            svg << "<text x=\"" << px(v) << "\" y=\"" << y0 + plot + 12 << "\" text-anchor=\"middle\">"
                << format_number(v, 2) << "</text>\n";
            svg << "<text x=\"" << x0 - 4 << "\" y=\"" << py(v) << "\" text-anchor=\"end\">" << format_number(v, 2)
                << "</text>\n";
        }
        svg << "<text x=\"" << x0 + plot / 2 << "\" y=\"" << y0 + plot + 26
            << "\" text-anchor=\"middle\">1 - Specificity</text>\n";
        svg << "<text transform=\"translate(" << x0 - 32 << "," << y0 + plot / 2
            << ") rotate(-90)\" text-anchor=\"middle\">Sensitivity</text>\n";
        for (std::size_t k = 0; k < report.shots.size(); ++k) {
            const auto& cell = report.cell(static_cast<std::size_t>(s), k);
            const char* colour = kPalette[k % std::size(kPalette)];
            svg << "<text x=\"" << x0 + plot - 4 << "\" y=\"" << y0 + plot - 6 - 12 * static_cast<int>(report.shots.size() - 1 - k)
                << "\" text-anchor=\"end\" fill=\"" << colour << "\">k=" << cell.shots_k;
            if (cell.report) svg << " AUC " << format_number(cell.report->mean_auc, 3);
            svg << "</text>\n";
            if (!cell.report) continue;
            svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
            for (const auto& [fpr, tpr] : cell.report->mean_roc) svg << px(fpr) << ',' << py(tpr) << ' ';
            svg << "\"/>\n";
        }
        svg << "</g>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_sweep_outputs(const std::filesystem::path& dir, const SweepReport& report, const ReportOptions& options) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create report directory '" + dir.string() + "': " + ec.message());
    write_text_file(dir / "report.json", report_json(report, options));
    write_text_file(dir / "summary.csv", summary_csv(report, options));
    write_text_file(dir / "roc_grid.svg", roc_grid_svg(report, options));
}

}  // namespace fsl
