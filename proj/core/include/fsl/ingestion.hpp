#pragma once

#include "fsl/binary_io.hpp"
#include "fsl/image.hpp"
#include "fsl/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace fsl {

using Payload = std::variant<ImageRef, EmbeddingSet>;

struct CorpusItem {
    std::string id;
    int label = 0;
    Payload payload;
    /// Optional grouping key (e.g. the clip a frame came from). Empty = ungrouped.
    std::string group;
};

/// Labeled images or embeddings. Immutable once constructed; validates its
/// invariants on construction.
class LabeledCorpus {
public:
    LabeledCorpus() = default;
    LabeledCorpus(std::vector<std::string> class_names, std::vector<CorpusItem> items);

    [[nodiscard]] const std::vector<CorpusItem>& items() const { return items_; }
    [[nodiscard]] const std::vector<std::string>& class_names() const { return class_names_; }
    [[nodiscard]] int n_classes() const { return static_cast<int>(class_names_.size()); }
    [[nodiscard]] std::size_t size() const { return items_.size(); }

    [[nodiscard]] std::vector<std::size_t> counts() const;
    [[nodiscard]] const CorpusItem& at(std::size_t index) const { return items_.at(index); }
    [[nodiscard]] std::optional<std::size_t> find(const std::string& id) const;
    [[nodiscard]] const CorpusItem& item(const std::string& id) const;
    /// Label index for a class name; throws UsageError when unknown.
    [[nodiscard]] int label_of(const std::string& class_name) const;

    [[nodiscard]] bool has_embeddings() const;
    /// Common (vectors_per_item, d_latent); throws if payloads are not embeddings
    /// or are ragged in the number of vectors.
    [[nodiscard]] std::pair<int, int> embedding_shape() const;

private:
    std::vector<std::string> class_names_;
    std::vector<CorpusItem> items_;
    std::unordered_map<std::string, std::size_t> index_;
};

enum class CorpusFormat { image_folders, embedding_file };

struct LoadOptions {
    /// Drop undecodable images (with a warning) instead of failing.
    bool skip_corrupt = false;
    /// Decode every image at load time to detect corrupt files early.
    bool verify_images = true;
    /// Group frames by the file-name prefix before this separator, e.g.
    /// "clip12_frame003.png" -> "clip12". Empty disables grouping.
    std::string group_separator;
};

/// Loads a corpus. For image_folders, root is a directory with one
/// subdirectory per class (sorted by name = label order). For
/// embedding_file, root is a .fsle or .csv file.
LabeledCorpus load_corpus(const std::filesystem::path& root, CorpusFormat format, const LoadOptions& options = {});

/// Binary embedding file ("FSLE", version 1). Every item must have the same
/// number of vectors.
void write_embedding_file(const std::filesystem::path& path, const LabeledCorpus& corpus);
Bytes encode_embedding_file(const LabeledCorpus& corpus);
LabeledCorpus decode_embedding_file(std::span<const std::uint8_t> bytes, const std::string& context = "embedding file");
/// CSV alternative: one row per item, `id,label,v0,v1,...` (single vector
/// per item). Labels may be integers or class names.
LabeledCorpus read_embedding_csv(const std::filesystem::path& path);

/// Support/query split for one episode.
struct EpisodeSplit {
    std::map<int, std::vector<std::string>> support;  // label -> item ids
    std::vector<std::string> query;
    int shots_k = 0;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t support_size() const;
};

struct SplitOptions {
    double test_fraction = 0.2;
    /// Keep all items that share a non-empty group key on the same side.
    bool group_aware = false;
};

/// Per class: sequesters floor(n * test_fraction) (min 1) items as queries,
/// then draws shots_k supports uniformly without replacement from the rest.
EpisodeSplit make_split(const LabeledCorpus& corpus, const std::vector<int>& classes, int shots_k, std::uint64_t seed,
                        const SplitOptions& options = {});

std::string split_fingerprint(const EpisodeSplit& split);

}  // namespace fsl
