#include "corpus_manifest.hpp"

#include "fsl/binary_io.hpp"
#include "fsl/error.hpp"

#include <json.hpp>

namespace fsl::cli {

std::string corpus_manifest_json(const LabeledCorpus& corpus, const std::filesystem::path& root) {
    nlohmann::ordered_json items = nlohmann::ordered_json::array();
    for (const auto& item : corpus.items()) {
        const auto* ref = std::get_if<ImageRef>(&item.payload);
        if (!ref) throw UsageError("corpus manifest: item '" + item.id + "' is not an image");
        items.push_back({{"id", item.id}, {"label", item.label}, {"path", ref->path.string()}, {"group", item.group}});
    }
    nlohmann::ordered_json out{
        {"format", "fsl-image-corpus"},
        {"version", 1},
        {"root", root.string()},
        {"class_names", corpus.class_names()},
        {"items", std::move(items)},
    };
    return out.dump(2) + "\n";
}

LabeledCorpus read_corpus_manifest(const std::filesystem::path& path) {
    const Bytes bytes = read_file(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes.begin(), bytes.end());
        if (doc.at("format").get<std::string>() != "fsl-image-corpus") throw DataError("not an image corpus manifest");
        std::vector<CorpusItem> items;
        for (const auto& j : doc.at("items")) {
            CorpusItem item;
            item.id = j.at("id").get<std::string>();
            item.label = j.at("label").get<int>();
            item.group = j.value("group", std::string());
            item.payload = ImageRef{j.at("path").get<std::string>()};
            items.push_back(std::move(item));
        }
        return LabeledCorpus(doc.at("class_names").get<std::vector<std::string>>(), std::move(items));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("'" + path.string() + "': malformed corpus manifest: " + e.what());
    }
}

}  // namespace fsl::cli
