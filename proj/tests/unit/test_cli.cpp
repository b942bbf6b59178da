#include "fixtures.hpp"

#include "cli.hpp"
#include "fsl/binary_io.hpp"
#include "fsl/model_io.hpp"
#include "fsl/synth.hpp"

#include <doctest.h>
#include <json.hpp>

#include <iostream>
#include <sstream>

namespace {

struct Result {
    int code = 0;
    std::string out;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "fsl");
    std::ostringstream captured;
    std::streambuf* old = std::cout.rdbuf(captured.rdbuf());
    Result r;
    try {
        r.code = fsl::cli::run(args);
    } catch (...) {
        std::cout.rdbuf(old);
        throw;
    }
    std::cout.rdbuf(old);
    r.out = captured.str();
    return r;
}

std::string text(const std::filesystem::path& p) {
    const fsl::Bytes b = fsl::read_file(p);
    return {b.begin(), b.end()};
}

std::vector<std::string> small_synth(const std::filesystem::path& out) {
    return {"synth", "--out", out.string(), "--classes", "2", "--items", "30", "--locations", "4", "--d-latent", "16",
            "--nuisance-rank", "2", "--seed", "3"};
}

std::vector<std::string> small_pipeline() { return {"--d-pca", "6", "--n-words", "8", "--pca-subsample", "200"}; }

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
    CHECK(run({}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
    CHECK(run({"fit"}).code == 1);
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"eval"}).code == 1);
    CHECK(run({"synth", "--kind", "nonsense", "--out", "x"}).code == 1);
}

TEST_CASE("synth, fit, predict") {
    const fixture::TempDir dir("cli_fit");
    const auto corpus = dir / "c.fsle";
    REQUIRE(run(small_synth(corpus)).code == 0);

    const auto model = dir / "m.fslm";
    REQUIRE(run(cat({"--deterministic", "fit", "--corpus", corpus.string(), "--out", model.string(), "--shots", "8"},
                    small_pipeline()))
                .code == 0);
    const fsl::FittedModel m = fsl::load_model(model);
    CHECK(m.created_at.empty());
    CHECK(m.config.d_pca == 6);
    CHECK(m.class_names == std::vector<std::string>{"class_0", "class_1"});

    const Result pred = run({"predict", "--model", model.string(), "--input", corpus.string(), "--json"});
    REQUIRE(pred.code == 0);
    const auto j = nlohmann::json::parse(pred.out);
    REQUIRE(j.size() == 60);
    int correct = 0;
    for (const auto& p : j) {
        const std::string id = p["id"];
        CHECK(p["distances"].size() == 2);
        correct += id.rfind(p["label"].get<std::string>(), 0) == 0 ? 1 : 0;
    }
    CHECK(correct > 40);

    const Result plain = run({"predict", "--model", model.string(), "--input", corpus.string()});
    CHECK(plain.code == 0);
    CHECK(std::count(plain.out.begin(), plain.out.end(), '\n') == 60);

    // Same inputs, same model bytes.
    const auto again = dir / "m2.fslm";
    REQUIRE(run(cat({"--deterministic", "fit", "--corpus", corpus.string(), "--out", again.string(), "--shots", "8"},
                    small_pipeline()))
                .code == 0);
    CHECK(fsl::read_file(model) == fsl::read_file(again));
}

TEST_CASE("eval sweep writes reproducible reports") {
    const fixture::TempDir dir("cli_sweep");
    const auto corpus = dir / "c.fsle";
    REQUIRE(run(small_synth(corpus)).code == 0);
    auto sweep = [&](const std::string& out, const std::string& threads) {
        return run(cat({"--deterministic", "--threads", threads, "eval", "sweep", "--corpus", corpus.string(), "--out",
                        (dir / out).string(), "--shots", "4,8", "--trials", "3"},
                       small_pipeline()))
            .code;
    };
    REQUIRE(sweep("a", "1") == 0);
    REQUIRE(sweep("b", "2") == 0);
    REQUIRE(sweep("a2", "1") == 0);
    for (const char* f : {"report.json", "summary.csv", "roc_grid.svg"}) CHECK(text(dir / "a" / f) == text(dir / "a2" / f));
    // Only the echoed thread count may differ between thread settings.
    for (const char* f : {"summary.csv", "roc_grid.svg"}) CHECK(text(dir / "a" / f) == text(dir / "b" / f));
    const auto report = nlohmann::json::parse(text(dir / "a" / "report.json"));
    CHECK(report["cells"] == nlohmann::json::parse(text(dir / "b" / "report.json"))["cells"]);
    CHECK(report["config"]["eval"]["scenarios"][0] == "class_0:class_1");
    CHECK(report["config"]["run"]["threads"] == 1);
    CHECK(report["cells"].size() == 2);

    // One impossible cell: reported, exit 2, the rest still written.
    const int code = run(cat({"eval", "sweep", "--corpus", corpus.string(), "--out", (dir / "c").string(), "--shots",
                              "4,500", "--trials", "1"},
                             small_pipeline()))
                         .code;
    CHECK(code == 2);
    CHECK(text(dir / "c" / "summary.csv").find(",500,nan") != std::string::npos);
}

TEST_CASE("configuration file and overrides") {
    const fixture::TempDir dir("cli_config");
    const auto corpus = dir / "c.fsle";
    REQUIRE(run(small_synth(corpus)).code == 0);
    fsl::write_text_file(dir / "good.toml", "[pipeline]\nd_pca = 5\nn_words = 8\npca_subsample = 200\n");
    fsl::write_text_file(dir / "bad.toml", "[pipeline]\nd_pcaa = 5\n");
    const auto model = dir / "m.fslm";
    REQUIRE(run({"--config", (dir / "good.toml").string(), "fit", "--corpus", corpus.string(), "--out", model.string(),
                 "--n-words", "10"})
                .code == 0);
    const fsl::FittedModel m = fsl::load_model(model);
    CHECK(m.config.d_pca == 5);
    CHECK(m.config.n_words == 10);
    CHECK(run({"--config", (dir / "bad.toml").string(), "fit", "--corpus", corpus.string(), "--out", model.string()}).code == 1);
    CHECK(run({"--config", (dir / "none.toml").string(), "fit", "--corpus", corpus.string(), "--out", model.string()}).code == 1);
    CHECK(run(cat({"fit", "--corpus", corpus.string(), "--out", model.string(), "--lambda", "2"}, small_pipeline())).code == 1);
    CHECK(run(cat({"fit", "--corpus", corpus.string(), "--out", model.string(), "--lda-rule", "svm"}, small_pipeline())).code == 1);
}

TEST_CASE("data and numerical failures map to their exit codes") {
    const fixture::TempDir dir("cli_errors");
    fsl::write_text_file(dir / "junk.fsle", "not an embedding file");
    CHECK(run({"fit", "--corpus", (dir / "junk.fsle").string(), "--out", (dir / "m").string()}).code == 2);
    CHECK(run({"fit", "--corpus", (dir / "missing.fsle").string(), "--out", (dir / "m").string()}).code == 2);
    CHECK(run({"predict", "--model", (dir / "junk.fsle").string(), "--input", (dir / "junk.fsle").string()}).code == 2);

    const auto corpus = dir / "c.fsle";
    REQUIRE(run(small_synth(corpus)).code == 0);
    // Every item identical in a class would be singular; here lambda = 0 and
    // 2 supports in 8-D force the escalation path, which then succeeds.
    CHECK(run(cat({"fit", "--corpus", corpus.string(), "--out", (dir / "m").string(), "--shots", "2", "--lambda", "0"},
                  small_pipeline()))
              .code == 0);
    // d_pca above the latent dimension is a usage problem.
    CHECK(run({"fit", "--corpus", corpus.string(), "--out", (dir / "m").string(), "--d-pca", "40"}).code == 1);
}

TEST_CASE("ingest, encoder and dictionary verbs") {
    const fixture::TempDir dir("cli_stages");
    const auto corpus = dir / "c.fsle";
    REQUIRE(run(small_synth(corpus)).code == 0);

    const Result ingest = run({"ingest", "--root", corpus.string(), "--format", "embeddings", "--out", (dir / "i.fsle").string()});
    CHECK(ingest.code == 0);
    CHECK(ingest.out == "class_0\t30\nclass_1\t30\n");
    CHECK(fsl::read_file(dir / "i.fsle") == fsl::read_file(corpus));

    fsl::write_texture_corpus(dir / "images", 2, 24, 1);
    const Result images = run({"ingest", "--root", (dir / "images").string(), "--format", "image_folders", "--out",
                               (dir / "manifest.json").string()});
    CHECK(images.code == 0);
    const auto manifest = nlohmann::json::parse(text(dir / "manifest.json"));
    CHECK(manifest["items"].size() == 4);

    const auto enc = dir / "enc.bin";
    REQUIRE(run(cat({"encoder", "fit", "--corpus", corpus.string(), "--out", enc.string()}, small_pipeline())).code == 0);
    const Result sig = run({"encoder", "apply", "--encoder", enc.string(), "--input", corpus.string()});
    REQUIRE(sig.code == 0);
    CHECK(sig.out.rfind("id,label,degenerate,r0,r1", 0) == 0);
    CHECK(std::count(sig.out.begin(), sig.out.end(), '\n') == 61);

    const auto dict = dir / "dict.bin";
    REQUIRE(run({"dict", "fit", "--encoder", enc.string(), "--support", corpus.string(), "--out", dict.string(), "--p", "2"})
                .code == 0);
    const fsl::Dictionary d = fsl::load_dictionary(dict);
    CHECK(d.n_classes() == 2);
    CHECK(d.p == 2);
}

TEST_CASE("heatmap needs a backbone and a known class") {
    const fixture::TempDir dir("cli_heatmap");
    const auto corpus = dir / "c.fsle";
    REQUIRE(run(small_synth(corpus)).code == 0);
    const auto model = dir / "m.fslm";
    REQUIRE(run(cat({"fit", "--corpus", corpus.string(), "--out", model.string()}, small_pipeline())).code == 0);
    REQUIRE(run({"synth", "--kind", "planted", "--out", (dir / "p.png").string(), "--size", "64"}).code == 0);
    CHECK(run({"heatmap", "--model", model.string(), "--image", (dir / "p.png").string(), "--class", "class_0", "--out",
               (dir / "h.png").string()})
              .code == 1);
    CHECK(run({"heatmap", "--model", model.string(), "--image", (dir / "p.png").string(), "--class", "nope", "--out",
               (dir / "h.png").string(), "--backbone", fixture::tiny_backbone().string()})
              .code == 1);
    // The tiny backbone's channels do not match the 16-D synthetic model.
    CHECK(run({"heatmap", "--model", model.string(), "--image", (dir / "p.png").string(), "--class", "class_0", "--out",
               (dir / "h.png").string(), "--backbone", fixture::tiny_backbone().string()})
              .code == 2);
}
