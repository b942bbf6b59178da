#include "fsl/dictionary.hpp"
#include "fsl/kmeans.hpp"
#include "fsl/pipeline.hpp"
#include "fsl/rng.hpp"
#include "fsl/roc.hpp"
#include "fsl/synth.hpp"

#include <benchmark/benchmark.h>

using namespace fsl;

namespace {

Matrix gaussian(int rows, int cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

// MobileNetV2-sized activations: 7x7 locations of 1280 channels.
const LabeledCorpus& mobilenet_sized() {
    static const LabeledCorpus corpus = [] {
        SynthOptions o;
        o.n_classes = 2;
        o.items_per_class = 80;
        o.n_locations = 49;
        o.d_latent = 1280;
        return synth_corpus(o);
    }();
    return corpus;
}

void BM_Kmeans(benchmark::State& state) {
    const Matrix points = gaussian(static_cast<int>(state.range(0)), 64, 1);
    KMeansOptions o;
    o.k = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(kmeans(points, o).inertia);
}
BENCHMARK(BM_Kmeans)->Args({2000, 32})->Args({6272, 128})->Unit(benchmark::kMillisecond);

void BM_FitPca(benchmark::State& state) {
    const Matrix samples = gaussian(1000, static_cast<int>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(fit_pca(samples, 64).eigenvalues(0));
}
BENCHMARK(BM_FitPca)->Arg(128)->Arg(1280)->Unit(benchmark::kMillisecond);

void BM_Encode(benchmark::State& state) {
    const LabeledCorpus& corpus = mobilenet_sized();
    const EpisodeSplit split = make_split(corpus, {0, 1}, 64, 1);
    const FittedModel model = fit_pipeline(corpus, split, PipelineConfig{});
    const auto& emb = std::get<EmbeddingSet>(corpus.at(0).payload);
    for (auto _ : state) benchmark::DoNotOptimize(encode(emb, model.encoder).r(0));
}
BENCHMARK(BM_Encode)->Unit(benchmark::kMicrosecond);

void BM_Mahalanobis(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Matrix a = gaussian(n, n, 3);
    const Matrix cov = a * a.transpose() / n + Matrix::Identity(n, n);
    const ClassSignature sig = ClassSignature::from_covariance(0, gaussian(1, n, 4), cov, 0.5);
    ImageSignature q;
    q.r = gaussian(n, 1, 5);
    for (auto _ : state) benchmark::DoNotOptimize(mahalanobis(q, sig)(0));
}
BENCHMARK(BM_Mahalanobis)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_FitPipeline64Shots(benchmark::State& state) {
    const LabeledCorpus& corpus = mobilenet_sized();
    const EpisodeSplit split = make_split(corpus, {0, 1}, 64, 1);
    for (auto _ : state) benchmark::DoNotOptimize(fit_pipeline(corpus, split, PipelineConfig{}).fit_time_s);
}
BENCHMARK(BM_FitPipeline64Shots)->Unit(benchmark::kSecond)->Iterations(1);

void BM_Roc(benchmark::State& state) {
    Rng rng(6);
    std::vector<ScoredLabel> scores;
    for (int i = 0; i < state.range(0); ++i) scores.push_back({rng.normal(), rng.uniform01() < 0.5});
    for (auto _ : state) benchmark::DoNotOptimize(roc(scores).auc);
}
BENCHMARK(BM_Roc)->Arg(1000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
