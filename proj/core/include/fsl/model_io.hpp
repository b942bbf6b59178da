#pragma once

#include "fsl/binary_io.hpp"
#include "fsl/pipeline.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fsl {

inline constexpr Tag kPcaTag = make_tag("PCA\0");
inline constexpr Tag kVocabTag = make_tag("VOCB");
inline constexpr Tag kDictTag = make_tag("DICT");
inline constexpr Tag kLdaTag = make_tag("LDA\0");

/// Model container: "FSLM", u32 version, u32 manifest length, manifest
/// (UTF-8 JSON), then sections of (tag[4], u64 length, payload).
struct ModelContainer {
    std::string manifest_json;
    std::vector<std::pair<Tag, Bytes>> sections;

    [[nodiscard]] const Bytes* find(const Tag& tag) const;
};

Bytes write_container(const ModelContainer& container);
ModelContainer read_container(std::span<const std::uint8_t> bytes, const std::string& context = "model file");

Bytes encode_pca(const PcaTransform& pca);
PcaTransform decode_pca(std::span<const std::uint8_t> payload);
Bytes encode_vocabulary(const Vocabulary& vocab, EncodeMode mode);
std::pair<Vocabulary, EncodeMode> decode_vocabulary(std::span<const std::uint8_t> payload);
Bytes encode_dictionary(const Dictionary& dict);
/// Precision matrices are recomputed from the stored covariances.
Dictionary decode_dictionary(std::span<const std::uint8_t> payload);
Bytes encode_lda(const LdaModel& lda);
LdaModel decode_lda(std::span<const std::uint8_t> payload);

Bytes serialize_model(const FittedModel& model);
FittedModel deserialize_model(std::span<const std::uint8_t> bytes, const std::string& context = "model file");
void save_model(const std::filesystem::path& path, const FittedModel& model);
FittedModel load_model(const std::filesystem::path& path);

/// Encoder-only file (PCA + VOCB sections).
void save_encoder(const std::filesystem::path& path, const EncoderStack& encoder, const std::string& manifest_json = "{}");
EncoderStack load_encoder(const std::filesystem::path& path);
/// Dictionary-only file (DICT section).
void save_dictionary(const std::filesystem::path& path, const Dictionary& dict, const std::string& manifest_json = "{}");
Dictionary load_dictionary(const std::filesystem::path& path);

struct ModelSize {
    std::size_t total_bytes = 0;
    std::size_t encoder_bytes = 0;      // PCA + VOCB sections
    std::size_t per_class_dict_bytes = 0;
    std::size_t lda_bytes = 0;
    int n_classes = 0;
    /// Encoder share (encoder_bytes / C) + one class signature + LDA share.
    [[nodiscard]] double per_class_bytes() const;
};

ModelSize model_size(const FittedModel& model);

std::string pipeline_config_json(const PipelineConfig& config);
PipelineConfig pipeline_config_from_json(const std::string& json_text);

}  // namespace fsl
