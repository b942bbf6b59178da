#include "fsl/config.hpp"

#include "fsl/error.hpp"

#include <json.hpp>
#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace fsl {

namespace {

class TableReader {
public:
    TableReader(const toml::table& table, std::string name, std::string source)
        : table_(table), name_(std::move(name)), source_(std::move(source)) {}

    ~TableReader() = default;

    template <typename T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        const toml::node* node = table_.get(key);
        if (!node) return;
        if constexpr (std::is_same_v<T, bool>) {
            out = require(node->value<bool>(), key, "a boolean");
        } else if constexpr (std::is_same_v<T, std::string>) {
            out = require(node->value<std::string>(), key, "a string");
        } else if constexpr (std::is_same_v<T, double>) {
            out = require(node->value<double>(), key, "a number");
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            const auto v = require(node->value<std::int64_t>(), key, "an integer");
            if (v < 0) fail(key, "must be non-negative");
            out = static_cast<std::uint64_t>(v);
        } else if constexpr (std::is_integral_v<T>) {
            out = static_cast<T>(require(node->value<std::int64_t>(), key, "an integer"));
        }
    }

    void read_optional(const char* key, std::optional<double>& out) {
        seen_.insert(key);
        const toml::node* node = table_.get(key);
        if (node) out = require(node->value<double>(), key, "a number");
    }

    template <typename T>
    void read_array(const char* key, std::vector<T>& out) {
        seen_.insert(key);
        const toml::node* node = table_.get(key);
        if (!node) return;
        const toml::array* arr = node->as_array();
        if (!arr) fail(key, "must be an array");
        out.clear();
        for (const auto& el : *arr) {
            if constexpr (std::is_same_v<T, std::string>) {
                out.push_back(require(el.value<std::string>(), key, "an array of strings"));
            } else {
                out.push_back(static_cast<T>(require(el.value<std::int64_t>(), key, "an array of integers")));
            }
        }
    }

    void reject_unknown() const {
        for (const auto& [k, v] : table_) {
            if (!seen_.contains(std::string(k.str()))) {
                throw UsageError(source_ + ": unknown key '" + std::string(k.str()) + "' in [" + name_ + "]");
            }
        }
    }

private:
    template <typename T>
    T require(std::optional<T> v, const char* key, const char* what) {
        if (!v) fail(key, std::string("must be ") + what);
        return *v;
    }

    [[noreturn]] void fail(const char* key, const std::string& msg) const {
        throw UsageError(source_ + ": [" + name_ + "]." + key + " " + msg);
    }

    const toml::table& table_;
    std::string name_;
    std::string source_;
    std::set<std::string> seen_;
};

const toml::table& sub_table(const toml::table& root, const char* name, const std::string& source) {
    static const toml::table empty;
    const toml::node* node = root.get(name);
    if (!node) return empty;
    const toml::table* t = node->as_table();
    if (!t) throw UsageError(source + ": '" + name + "' must be a table");
    return *t;
}

}  // namespace

RunConfig parse_run_config(const std::string& toml_text, const std::string& source) {
    toml::table root;
    try {
        root = toml::parse(toml_text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << source << ": " << e.description() << " at line " << e.source().begin.line;
        throw UsageError(msg.str());
    }
    for (const auto& [k, v] : root) {
        static const std::set<std::string> known{"pipeline", "eval", "embedding", "heatmap", "run"};
        if (!known.contains(std::string(k.str()))) throw UsageError(source + ": unknown table '" + std::string(k.str()) + "'");
    }

    RunConfig cfg;
    {
        TableReader t(sub_table(root, "pipeline", source), "pipeline", source);
        auto& p = cfg.pipeline;
        std::string mode = to_string(p.encode_mode);
        std::string rule = to_string(p.lda_rule);
        t.read("d_pca", p.d_pca);
        t.read("n_words", p.n_words);
        t.read("kmeans_max_iters", p.kmeans_max_iters);
        t.read("kmeans_restarts", p.kmeans_restarts);
        t.read("encode_mode", mode);
        t.read("pca_subsample", p.pca_subsample);
        t.read("p", p.p);
        t.read("lambda", p.lambda);
        t.read_optional("lda_reg", p.lda_reg);
        t.read("lda_relative_reg", p.lda_relative_reg);
        t.read("lda_rule", rule);
        t.read("seed", p.seed);
        t.reject_unknown();
        p.encode_mode = parse_encode_mode(mode);
        p.lda_rule = parse_lda_rule(rule);
    }
    {
        TableReader t(sub_table(root, "eval", source), "eval", source);
        auto& e = cfg.eval;
        t.read_array("scenarios", e.scenarios);
        t.read_array("shots", e.shots);
        t.read("trials", e.trials);
        t.read("test_fraction", e.test_fraction);
        t.read("seed", e.seed);
        t.read("group_aware_split", e.group_aware_split);
        t.reject_unknown();
    }
    {
        TableReader t(sub_table(root, "embedding", source), "embedding", source);
        t.read("model", cfg.embedding.model);
        t.read("tap", cfg.embedding.tap);
        t.reject_unknown();
    }
    {
        TableReader t(sub_table(root, "heatmap", source), "heatmap", source);
        t.read("patch", cfg.heatmap.patch);
        t.read("stride", cfg.heatmap.stride);
        t.read("alpha", cfg.heatmap.alpha);
        t.reject_unknown();
    }
    {
        TableReader t(sub_table(root, "run", source), "run", source);
        t.read("threads", cfg.threads);
        t.read("deterministic", cfg.deterministic);
        t.reject_unknown();
    }
    validate(cfg);
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str(), path.string());
}

std::string to_toml(const RunConfig& c) {
    const auto& p = c.pipeline;
    toml::table pipeline{
        {"d_pca", p.d_pca},
        {"n_words", p.n_words},
        {"kmeans_max_iters", p.kmeans_max_iters},
        {"kmeans_restarts", p.kmeans_restarts},
        {"encode_mode", to_string(p.encode_mode)},
        {"pca_subsample", p.pca_subsample},
        {"p", p.p},
        {"lambda", p.lambda},
        {"lda_relative_reg", p.lda_relative_reg},
        {"lda_rule", to_string(p.lda_rule)},
        {"seed", static_cast<std::int64_t>(p.seed)},
    };
    if (p.lda_reg) pipeline.insert("lda_reg", *p.lda_reg);

    toml::array scenarios;
    for (const auto& s : c.eval.scenarios) scenarios.push_back(s);
    toml::array shots;
    for (int k : c.eval.shots) shots.push_back(k);
    toml::table eval{
        {"scenarios", scenarios},
        {"shots", shots},
        {"trials", c.eval.trials},
        {"test_fraction", c.eval.test_fraction},
        {"seed", static_cast<std::int64_t>(c.eval.seed)},
        {"group_aware_split", c.eval.group_aware_split},
    };
    toml::table root{
        {"pipeline", pipeline},
        {"eval", eval},
        {"embedding", toml::table{{"model", c.embedding.model}, {"tap", c.embedding.tap}}},
        {"heatmap", toml::table{{"patch", c.heatmap.patch}, {"stride", c.heatmap.stride}, {"alpha", c.heatmap.alpha}}},
        {"run", toml::table{{"threads", c.threads}, {"deterministic", c.deterministic}}},
    };
    std::ostringstream out;
    out << root << "\n";
    return out.str();
}

std::string to_json(const RunConfig& c) {
    const auto& p = c.pipeline;
    nlohmann::ordered_json pipeline{
        {"d_pca", p.d_pca},
        {"n_words", p.n_words},
        {"kmeans_max_iters", p.kmeans_max_iters},
        {"kmeans_restarts", p.kmeans_restarts},
        {"encode_mode", to_string(p.encode_mode)},
        {"pca_subsample", p.pca_subsample},
        {"p", p.p},
        {"lambda", p.lambda},
        {"lda_reg", p.lda_reg ? nlohmann::ordered_json(*p.lda_reg) : nlohmann::ordered_json("auto")},
        {"lda_relative_reg", p.lda_relative_reg},
        {"lda_rule", to_string(p.lda_rule)},
        {"seed", p.seed},
    };
    nlohmann::ordered_json out{
        {"pipeline", pipeline},
        {"eval",
         {{"scenarios", c.eval.scenarios},
          {"shots", c.eval.shots},
          {"trials", c.eval.trials},
          {"test_fraction", c.eval.test_fraction},
          {"seed", c.eval.seed},
          {"group_aware_split", c.eval.group_aware_split}}},
        {"embedding", {{"model", c.embedding.model}, {"tap", c.embedding.tap}}},
        {"heatmap", {{"patch", c.heatmap.patch}, {"stride", c.heatmap.stride}, {"alpha", c.heatmap.alpha}}},
        {"run", {{"threads", c.threads}}},
    };
    return out.dump();
}

void validate(const RunConfig& c) {
    const auto& p = c.pipeline;
    auto check = [](bool ok, const std::string& msg) {
        if (!ok) throw UsageError(msg);
    };
    check(p.d_pca >= 1, "pipeline.d_pca must be >= 1");
    check(p.n_words >= 2, "pipeline.n_words must be >= 2");
    check(p.kmeans_max_iters >= 1, "pipeline.kmeans_max_iters must be >= 1");
    check(p.kmeans_restarts >= 1, "pipeline.kmeans_restarts must be >= 1");
    check(p.pca_subsample >= 2, "pipeline.pca_subsample must be >= 2");
    check(p.p >= 1, "pipeline.p must be >= 1");
    check(p.lambda >= 0.0 && p.lambda <= 1.0, "pipeline.lambda must be in [0, 1]");
    check(!p.lda_reg || *p.lda_reg >= 0.0, "pipeline.lda_reg must be >= 0");
    check(p.lda_relative_reg >= 0.0, "pipeline.lda_relative_reg must be >= 0");
    check(c.eval.trials >= 1, "eval.trials must be >= 1");
    check(c.eval.test_fraction > 0.0 && c.eval.test_fraction < 1.0, "eval.test_fraction must be in (0, 1)");
    for (int k : c.eval.shots) check(k >= 2, "eval.shots entries must be >= 2");
    check(c.heatmap.patch >= 1, "heatmap.patch must be >= 1");
    check(c.heatmap.stride >= 1, "heatmap.stride must be >= 1");
    check(c.heatmap.alpha >= 0.0 && c.heatmap.alpha <= 1.0, "heatmap.alpha must be in [0, 1]");
    check(c.threads >= 1, "run.threads must be >= 1");
}

}  // namespace fsl
