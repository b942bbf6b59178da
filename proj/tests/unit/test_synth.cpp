#include "fixtures.hpp"

#include "fsl/error.hpp"
#include "fsl/image.hpp"
#include "fsl/synth.hpp"

#include <doctest.h>
#include <opencv2/imgproc.hpp>

using namespace fsl;

TEST_CASE("synthetic corpus shape and labels") {
    SynthOptions o;
    o.n_classes = 3;
    o.items_per_class = 10;
    o.n_locations = 5;
    o.d_latent = 12;
    o.nuisance_rank = 3;
    const LabeledCorpus c = synth_corpus(o);
    CHECK(c.size() == 30);
    CHECK(c.class_names() == std::vector<std::string>{"class_0", "class_1", "class_2"});
    CHECK(c.counts() == std::vector<std::size_t>{10, 10, 10});
    CHECK(c.embedding_shape() == std::pair<int, int>{5, 12});
    CHECK(c.find("class_1/0003").has_value());
    for (const auto& item : c.items()) CHECK(std::get<EmbeddingSet>(item.payload).vectors.allFinite());

    o.class_names = {"a", "b", "c"};
    CHECK(synth_corpus(o).class_names() == o.class_names);
}

TEST_CASE("synthetic corpus is reproducible and seed dependent") {
    SynthOptions o;
    o.items_per_class = 4;
    o.d_latent = 8;
    o.nuisance_rank = 2;
    o.n_locations = 3;
    const LabeledCorpus a = synth_corpus(o);
    const LabeledCorpus b = synth_corpus(o);
    CHECK(encode_embedding_file(a) == encode_embedding_file(b));
    o.seed = 8;
    CHECK(encode_embedding_file(synth_corpus(o)) != encode_embedding_file(a));
}

TEST_CASE("class means differ by the requested separation") {
    SynthOptions o;
    o.n_classes = 2;
    o.items_per_class = 400;
    o.n_locations = 8;
    o.d_latent = 400;
    o.nuisance_rank = 2;
    o.nuisance_scale = 0.5;
    o.separation = 3.0;
    const LabeledCorpus c = synth_corpus(o);
    Vector mean[2] = {Vector::Zero(400), Vector::Zero(400)};
    for (const auto& item : c.items()) {
        mean[item.label] += std::get<EmbeddingSet>(item.payload).vectors.cast<double>().colwise().mean().transpose();
    }
    const double gap = ((mean[1] - mean[0]) / 400.0).norm();
    // Random unit directions in 400-D are nearly orthogonal: gap ~ separation * sqrt(2).
    CHECK(gap == doctest::Approx(3.0 * std::sqrt(2.0)).epsilon(0.1));
}

TEST_CASE("synthetic option checks") {
    SynthOptions o;
    o.n_classes = 1;
    CHECK_THROWS_AS(synth_corpus(o), UsageError);
    o = SynthOptions{};
    o.nuisance_rank = 500;
    CHECK_THROWS_AS(synth_corpus(o), UsageError);
    o = SynthOptions{};
    o.class_names = {"only"};
    CHECK_THROWS_AS(synth_corpus(o), UsageError);
}

TEST_CASE("textures and planted quadrants") {
    const cv::Mat bg = texture_image(Texture::background, 40, 50, 1);
    const cv::Mat tg = texture_image(Texture::target, 40, 50, 1);
    CHECK(bg.type() == CV_8UC3);
    CHECK(bg.rows == 40);
    CHECK(bg.cols == 50);
    CHECK(cv::norm(bg, texture_image(Texture::background, 40, 50, 1), cv::NORM_INF) == 0.0);
    // Warm target, cool background (RGB order).
    const cv::Scalar bm = cv::mean(bg);
    const cv::Scalar tm = cv::mean(tg);
    CHECK(tm[0] - tm[2] > bm[0] - bm[2] + 20.0);

    for (int q = 0; q < 4; ++q) {
        const cv::Mat img = planted_image(64, q, 3);
        REQUIRE(img.size() == cv::Size(64, 64));
        double best = -1e9;
        int best_q = -1;
        for (int k = 0; k < 4; ++k) {
            const cv::Scalar m = cv::mean(img(cv::Rect((k % 2) * 32, (k / 2) * 32, 32, 32)));
            if (m[0] - m[2] > best) {
                best = m[0] - m[2];
                best_q = k;
            }
        }
        CHECK(best_q == q);
    }
    CHECK_THROWS_AS(planted_image(64, 4, 0), UsageError);

    const fixture::TempDir dir("synth");
    write_texture_corpus(dir.path(), 3, 32, 5);
    const LabeledCorpus c = load_corpus(dir.path(), CorpusFormat::image_folders);
    CHECK(c.class_names() == std::vector<std::string>{"background", "target"});
    CHECK(c.counts() == std::vector<std::size_t>{3, 3});
}
