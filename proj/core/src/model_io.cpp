#include "fsl/model_io.hpp"

#include "fsl/error.hpp"

#include <json.hpp>

namespace fsl {

namespace {

constexpr Tag kModelMagic = make_tag("FSLM");
constexpr std::uint32_t kModelVersion = 1;

using nlohmann::json;

void put_matrix(ByteWriter& w, const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) w.f64(m(r, c));
    }
}

Matrix get_matrix(ByteReader& r, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = r.f64();
    }
    return m;
}

void put_vector(ByteWriter& w, const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) w.f64(v(i));
}

Vector get_vector(ByteReader& r, Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = r.f64();
    return v;
}

void expect_end(const ByteReader& r, const char* what) {
    if (!r.at_end()) throw DataError(std::string(what) + " section has trailing bytes");
}

std::string tag_name(const Tag& t) {
    std::string s;
    for (char c : t) s += c ? c : '0';
    return s;
}

json config_to_json(const PipelineConfig& c) {
    json j{
        {"d_pca", c.d_pca},
        {"n_words", c.n_words},
        {"kmeans_max_iters", c.kmeans_max_iters},
        {"kmeans_restarts", c.kmeans_restarts},
        {"encode_mode", to_string(c.encode_mode)},
        {"pca_subsample", c.pca_subsample},
        {"p", c.p},
        {"lambda", c.lambda},
        {"lda_relative_reg", c.lda_relative_reg},
        {"lda_rule", to_string(c.lda_rule)},
        {"seed", c.seed},
    };
    if (c.lda_reg) j["lda_reg"] = *c.lda_reg;
    return j;
}

PipelineConfig config_from_json(const json& j) {
    PipelineConfig c;
    c.d_pca = j.at("d_pca").get<int>();
    c.n_words = j.at("n_words").get<int>();
    c.kmeans_max_iters = j.at("kmeans_max_iters").get<int>();
    c.kmeans_restarts = j.at("kmeans_restarts").get<int>();
    c.encode_mode = parse_encode_mode(j.at("encode_mode").get<std::string>());
    c.pca_subsample = j.at("pca_subsample").get<int>();
    c.p = j.at("p").get<int>();
    c.lambda = j.at("lambda").get<double>();
    c.lda_relative_reg = j.at("lda_relative_reg").get<double>();
    c.lda_rule = parse_lda_rule(j.at("lda_rule").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("lda_reg")) c.lda_reg = j.at("lda_reg").get<double>();
    return c;
}

}  // namespace

const Bytes* ModelContainer::find(const Tag& tag) const {
    for (const auto& [t, payload] : sections) {
        if (t == tag) return &payload;
    }
    return nullptr;
}

Bytes write_container(const ModelContainer& container) {
    ByteWriter w;
    w.tag(kModelMagic);
    w.u32(kModelVersion);
    w.str(container.manifest_json);
    for (const auto& [tag, payload] : container.sections) {
        w.tag(tag);
        w.u64(payload.size());
        w.raw(payload);
    }
    return w.take();
}

ModelContainer read_container(std::span<const std::uint8_t> bytes, const std::string& context) {
    ByteReader r(bytes, context);
    if (r.tag() != kModelMagic) throw DataError(context + ": bad magic (expected FSLM)");
    const std::uint32_t version = r.u32();
    if (version != kModelVersion) throw DataError(context + ": unsupported version " + std::to_string(version));
    ModelContainer out;
    out.manifest_json = r.str();
    while (!r.at_end()) {
        const Tag tag = r.tag();
        const std::uint64_t len = r.u64();
        const auto payload = r.raw(static_cast<std::size_t>(len));
        out.sections.emplace_back(tag, Bytes(payload.begin(), payload.end()));
    }
    return out;
}

Bytes encode_pca(const PcaTransform& pca) {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(pca.d_latent()));
    w.u32(static_cast<std::uint32_t>(pca.d_pca()));
    put_vector(w, pca.mean);
    put_matrix(w, pca.components);
    put_vector(w, pca.eigenvalues);
    return w.take();
}

PcaTransform decode_pca(std::span<const std::uint8_t> payload) {
    ByteReader r(payload, "PCA section");
    PcaTransform pca;
    const auto d_latent = static_cast<Eigen::Index>(r.u32());
    const auto d_pca = static_cast<Eigen::Index>(r.u32());
    pca.mean = get_vector(r, d_latent);
    pca.components = get_matrix(r, d_pca, d_latent);
    pca.eigenvalues = get_vector(r, d_pca);
    expect_end(r, "PCA");
    return pca;
}

Bytes encode_vocabulary(const Vocabulary& vocab, EncodeMode mode) {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(vocab.n_words()));
    w.u32(static_cast<std::uint32_t>(vocab.dim()));
    w.u32(mode == EncodeMode::soft ? 0u : 1u);
    put_matrix(w, vocab.words);
    return w.take();
}

std::pair<Vocabulary, EncodeMode> decode_vocabulary(std::span<const std::uint8_t> payload) {
    ByteReader r(payload, "VOCB section");
    const auto n_words = static_cast<Eigen::Index>(r.u32());
    const auto dim = static_cast<Eigen::Index>(r.u32());
    const std::uint32_t mode = r.u32();
    if (mode > 1) throw DataError("VOCB section: unknown encode mode");
    Vocabulary vocab{get_matrix(r, n_words, dim)};
    expect_end(r, "VOCB");
    return {std::move(vocab), mode == 0 ? EncodeMode::soft : EncodeMode::hard};
}

Bytes encode_dictionary(const Dictionary& dict) {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(dict.n_classes()));
    w.u32(static_cast<std::uint32_t>(dict.p));
    w.u32(static_cast<std::uint32_t>(dict.n_words));
    for (const auto& sig : dict.signatures) {
        w.i32(sig.class_label);
        w.f64(sig.shrinkage_lambda);
        put_matrix(w, sig.centroids);
        put_matrix(w, sig.covariance);
    }
    return w.take();
}

Dictionary decode_dictionary(std::span<const std::uint8_t> payload) {
    ByteReader r(payload, "DICT section");
    Dictionary dict;
    const std::uint32_t n_classes = r.u32();
    dict.p = static_cast<int>(r.u32());
    dict.n_words = static_cast<int>(r.u32());
    for (std::uint32_t c = 0; c < n_classes; ++c) {
        const int label = r.i32();
        const double lambda = r.f64();
        Matrix centroids = get_matrix(r, dict.p, dict.n_words);
        Matrix cov = get_matrix(r, dict.n_words, dict.n_words);
        dict.signatures.push_back(ClassSignature::from_covariance(label, std::move(centroids), std::move(cov), lambda));
    }
    expect_end(r, "DICT");
    return dict;
}

Bytes encode_lda(const LdaModel& lda) {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(lda.n_classes()));
    w.u32(static_cast<std::uint32_t>(lda.dim()));
    w.u32(static_cast<std::uint32_t>(lda.weights.rows()));
    w.u32(lda.rule == LdaRule::nearest_mean ? 0u : 1u);
    w.f64(lda.within_scatter_reg);
    for (int label : lda.class_labels) w.i32(label);
    put_vector(w, lda.priors);
    put_matrix(w, lda.weights);
    put_matrix(w, lda.class_means);
    put_matrix(w, lda.projected_covariance);
    return w.take();
}

LdaModel decode_lda(std::span<const std::uint8_t> payload) {
    ByteReader r(payload, "LDA section");
    LdaModel lda;
    const auto n_classes = static_cast<Eigen::Index>(r.u32());
    const auto dim = static_cast<Eigen::Index>(r.u32());
    const auto n_dirs = static_cast<Eigen::Index>(r.u32());
    const std::uint32_t rule = r.u32();
    if (rule > 1) throw DataError("LDA section: unknown rule");
    lda.rule = rule == 0 ? LdaRule::nearest_mean : LdaRule::posterior;
    lda.within_scatter_reg = r.f64();
    for (Eigen::Index c = 0; c < n_classes; ++c) lda.class_labels.push_back(r.i32());
    lda.priors = get_vector(r, n_classes);
    lda.weights = get_matrix(r, n_dirs, dim);
    lda.class_means = get_matrix(r, n_classes, dim);
    lda.projected_covariance = get_matrix(r, n_dirs, n_dirs);
    expect_end(r, "LDA");
    return lda;
}

Bytes serialize_model(const FittedModel& model) {
    json manifest{
        {"format", "fsl-model"},
        {"config", config_to_json(model.config)},
        {"class_names", model.class_names},
        {"dictionary_labels", model.dictionary.labels()},
        {"created_at", model.created_at},
        {"source", model.source},
    };
    ModelContainer c;
    c.manifest_json = manifest.dump();
    c.sections.emplace_back(kPcaTag, encode_pca(model.encoder.pca));
    c.sections.emplace_back(kVocabTag, encode_vocabulary(model.encoder.vocabulary, model.encoder.mode));
    c.sections.emplace_back(kDictTag, encode_dictionary(model.dictionary));
    c.sections.emplace_back(kLdaTag, encode_lda(model.lda));
    return write_container(c);
}

FittedModel deserialize_model(std::span<const std::uint8_t> bytes, const std::string& context) {
    const ModelContainer c = read_container(bytes, context);
    FittedModel model;
    try {
        const json manifest = json::parse(c.manifest_json);
        model.config = config_from_json(manifest.at("config"));
        model.class_names = manifest.at("class_names").get<std::vector<std::string>>();
        model.created_at = manifest.value("created_at", "");
        model.source = manifest.value("source", "");
    } catch (const json::exception& e) {
        throw DataError(context + ": bad manifest: " + e.what());
    }
    auto section = [&](const Tag& tag) -> const Bytes& {
        const Bytes* b = c.find(tag);
        if (!b) throw DataError(context + ": missing section " + tag_name(tag));
        return *b;
    };
    model.encoder.pca = decode_pca(section(kPcaTag));
    std::tie(model.encoder.vocabulary, model.encoder.mode) = decode_vocabulary(section(kVocabTag));
    model.dictionary = decode_dictionary(section(kDictTag));
    model.lda = decode_lda(section(kLdaTag));
    return model;
}

void save_model(const std::filesystem::path& path, const FittedModel& model) { write_file(path, serialize_model(model)); }

FittedModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path), path.string()); }

void save_encoder(const std::filesystem::path& path, const EncoderStack& encoder, const std::string& manifest_json) {
    ModelContainer c;
    c.manifest_json = manifest_json;
    c.sections.emplace_back(kPcaTag, encode_pca(encoder.pca));
    c.sections.emplace_back(kVocabTag, encode_vocabulary(encoder.vocabulary, encoder.mode));
    write_file(path, write_container(c));
}

EncoderStack load_encoder(const std::filesystem::path& path) {
    const ModelContainer c = read_container(read_file(path), path.string());
    const Bytes* pca = c.find(kPcaTag);
    const Bytes* vocab = c.find(kVocabTag);
    if (!pca || !vocab) throw DataError(path.string() + ": encoder file needs PCA and VOCB sections");
    EncoderStack enc;
    enc.pca = decode_pca(*pca);
    std::tie(enc.vocabulary, enc.mode) = decode_vocabulary(*vocab);
    return enc;
}

void save_dictionary(const std::filesystem::path& path, const Dictionary& dict, const std::string& manifest_json) {
    ModelContainer c;
    c.manifest_json = manifest_json;
    c.sections.emplace_back(kDictTag, encode_dictionary(dict));
    write_file(path, write_container(c));
}

Dictionary load_dictionary(const std::filesystem::path& path) {
    const ModelContainer c = read_container(read_file(path), path.string());
    const Bytes* dict = c.find(kDictTag);
    if (!dict) throw DataError(path.string() + ": missing DICT section");
    return decode_dictionary(*dict);
}

double ModelSize::per_class_bytes() const {
    const double c = n_classes > 0 ? static_cast<double>(n_classes) : 1.0;
    return static_cast<double>(encoder_bytes) / c + static_cast<double>(per_class_dict_bytes) +
           static_cast<double>(lda_bytes) / c;
}

ModelSize model_size(const FittedModel& model) {
    ModelSize size;
    const Bytes all = serialize_model(model);
    size.total_bytes = all.size();
    constexpr std::size_t kSectionHeader = 4 + 8;
    size.encoder_bytes = encode_pca(model.encoder.pca).size() +
                         encode_vocabulary(model.encoder.vocabulary, model.encoder.mode).size() + 2 * kSectionHeader;
    size.lda_bytes = encode_lda(model.lda).size() + kSectionHeader;
    size.n_classes = model.dictionary.n_classes();
    std::size_t largest = 0;
    for (const auto& sig : model.dictionary.signatures) {
        Dictionary single;
        single.p = model.dictionary.p;
        single.n_words = model.dictionary.n_words;
        single.signatures.push_back(sig);
        largest = std::max(largest, encode_dictionary(single).size() + kSectionHeader);
    }
    size.per_class_dict_bytes = largest;
    return size;
}

std::string pipeline_config_json(const PipelineConfig& config) { return config_to_json(config).dump(); }

PipelineConfig pipeline_config_from_json(const std::string& json_text) {
    try {
        return config_from_json(json::parse(json_text));
    } catch (const json::exception& e) {
        throw DataError(std::string("bad pipeline config: ") + e.what());
    }
}

}  // namespace fsl
