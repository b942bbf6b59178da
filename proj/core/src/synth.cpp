#include "fsl/synth.hpp"

#include "fsl/error.hpp"
#include "fsl/rng.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace fsl {

namespace {

Vector gaussian_vector(int d, Rng& rng) {
    Vector v(d);
    for (int i = 0; i < d; ++i) v(i) = rng.normal();
    return v;
}

std::string zero_padded(int value, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*d", width, value);
    return buf;
}

Vector unit_vector(int d, Rng& rng) {
    Vector v = gaussian_vector(d, rng);
    return v / v.norm();
}

}  // namespace

LabeledCorpus synth_corpus(const SynthOptions& o) {
    if (o.n_classes < 2) throw UsageError("synth: need at least 2 classes");
    if (o.items_per_class < 1 || o.n_locations < 1 || o.d_latent < 1) throw UsageError("synth: sizes must be positive");
    if (o.nuisance_rank < 0 || o.nuisance_rank > o.d_latent) throw UsageError("synth: nuisance_rank out of range");
    if (!o.class_names.empty() && static_cast<int>(o.class_names.size()) != o.n_classes) {
        throw UsageError("synth: class_names must list every class");
    }

    Rng rng(mix_seed(o.seed, 0));
    const int d = o.d_latent;
    const Vector shared = gaussian_vector(d, rng);
    std::vector<Vector> directions;
    for (int c = 0; c < o.n_classes; ++c) directions.push_back(unit_vector(d, rng));
    Matrix basis(d, std::max(o.nuisance_rank, 1));
    basis.setZero();
    if (o.nuisance_rank > 0) {
        Matrix raw(d, o.nuisance_rank);
        for (int j = 0; j < o.nuisance_rank; ++j) raw.col(j) = gaussian_vector(d, rng);
        basis = Eigen::HouseholderQR<Matrix>(raw).householderQ() * Matrix::Identity(d, o.nuisance_rank);
    }

    std::vector<std::string> names = o.class_names;
    if (names.empty()) {
        for (int c = 0; c < o.n_classes; ++c) names.push_back("class_" + std::to_string(c));
    }

    std::vector<CorpusItem> items;
    items.reserve(static_cast<std::size_t>(o.n_classes * o.items_per_class));
    for (int c = 0; c < o.n_classes; ++c) {
        Rng item_rng(mix_seed(o.seed, 1 + static_cast<std::uint64_t>(c)));
        const Vector class_mean = shared + o.separation * directions[static_cast<std::size_t>(c)];
        for (int i = 0; i < o.items_per_class; ++i) {
            Vector centre = class_mean + o.item_jitter * gaussian_vector(d, item_rng);
            if (o.nuisance_rank > 0) centre += o.nuisance_scale * (basis * gaussian_vector(o.nuisance_rank, item_rng));
            EmbeddingSet emb;
            emb.vectors.resize(o.n_locations, d);
            for (int l = 0; l < o.n_locations; ++l) {
                for (int j = 0; j < d; ++j) {
                    emb.vectors(l, j) = static_cast<float>(centre(j) + o.location_noise * item_rng.normal());
                }
            }
            emb.source_id = names[static_cast<std::size_t>(c)] + "/" + zero_padded(i, 4);
            CorpusItem item;
            item.id = emb.source_id;
            item.label = c;
            item.payload = std::move(emb);
            items.push_back(std::move(item));
        }
    }
    return LabeledCorpus(std::move(names), std::move(items));
}

cv::Mat texture_image(Texture texture, int height, int width, std::uint64_t seed) {
    if (height < 1 || width < 1) throw UsageError("texture size must be positive");
    Rng rng(seed);
    cv::Mat img(height, width, CV_8UC3);
    // Background: soft horizontal bands in cool gray. Target: warm bright
    // speckles on a darker field. Both are stationary, so any crop is a draw
    // from the same distribution.
    const double phase = rng.uniform01() * 2.0 * 3.141592653589793;
    const double period = 10.0 + 4.0 * rng.uniform01();
    for (int y = 0; y < height; ++y) {
        auto* row = img.ptr<cv::Vec3b>(y);
        for (int x = 0; x < width; ++x) {
            double r = 0.0;
            double g = 0.0;
            double b = 0.0;
            const double noise = 18.0 * rng.normal();
            if (texture == Texture::background) {
                const double band = 0.5 + 0.5 * std::sin(2.0 * 3.141592653589793 * y / period + phase);
                r = 70.0 + 50.0 * band + noise;
                g = 85.0 + 50.0 * band + noise;
                b = 120.0 + 50.0 * band + noise;
            } else {
                const bool speck = rng.uniform01() < 0.08;
                r = (speck ? 240.0 : 150.0) + noise;
                g = (speck ? 200.0 : 70.0) + noise;
                b = (speck ? 90.0 : 40.0) + noise;
            }
            row[x] = cv::Vec3b(cv::saturate_cast<std::uint8_t>(r), cv::saturate_cast<std::uint8_t>(g),
                               cv::saturate_cast<std::uint8_t>(b));
        }
    }
    if (texture == Texture::target) cv::GaussianBlur(img, img, cv::Size(3, 3), 0.8);
    return img;
}

cv::Mat planted_image(int size, int quadrant, std::uint64_t seed) {
    if (quadrant < 0 || quadrant > 3) throw UsageError("quadrant must be in 0..3");
    if (size < 2) throw UsageError("planted image too small");
    cv::Mat img = texture_image(Texture::background, size, size, mix_seed(seed, 0));
    const int half = size / 2;
    const int x0 = (quadrant % 2) * half;
    const int y0 = (quadrant / 2) * half;
    const int w = quadrant % 2 ? size - half : half;
    const int h = quadrant / 2 ? size - half : half;
    texture_image(Texture::target, h, w, mix_seed(seed, 1)).copyTo(img(cv::Rect(x0, y0, w, h)));
    return img;
}

void write_texture_corpus(const std::filesystem::path& root, int per_class, int size, std::uint64_t seed) {
    if (per_class < 1) throw UsageError("per_class must be >= 1");
    const std::pair<const char*, Texture> classes[] = {{"background", Texture::background}, {"target", Texture::target}};
    for (std::size_t c = 0; c < 2; ++c) {
        const auto dir = root / classes[c].first;
        std::filesystem::create_directories(dir);
        for (int i = 0; i < per_class; ++i) {
            const std::uint64_t s = mix_seed(seed, 100 * (c + 1) + static_cast<std::uint64_t>(i));
            cv::Mat bgr;
            cv::cvtColor(texture_image(classes[c].second, size, size, s), bgr, cv::COLOR_RGB2BGR);
            const auto path = dir / (zero_padded(i, 3) + ".png");
            if (!cv::imwrite(path.string(), bgr)) throw DataError("cannot write '" + path.string() + "'");
        }
    }
}

}  // namespace fsl
