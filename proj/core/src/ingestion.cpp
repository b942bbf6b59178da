#include "fsl/ingestion.hpp"

#include "fsl/error.hpp"
#include "fsl/rng.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fsl {

namespace {

constexpr Tag kEmbeddingMagic = make_tag("FSLE");
constexpr Tag kNamesTag = make_tag("NAME");
constexpr std::uint32_t kEmbeddingVersion = 1;

bool is_image_file(const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<std::string> default_class_names(int n) {
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back("class_" + std::to_string(i));
    return names;
}

LabeledCorpus load_image_folders(const std::filesystem::path& root, const LoadOptions& options) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw DataError("corpus directory '" + root.string() + "' does not exist");

    std::vector<fs::path> class_dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) class_dirs.push_back(entry.path());
    }
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.size() < 2) {
        throw DataError("corpus '" + root.string() + "' needs at least 2 class directories, found " +
                        std::to_string(class_dirs.size()));
    }

    std::vector<std::string> names;
    std::vector<CorpusItem> items;
    for (std::size_t label = 0; label < class_dirs.size(); ++label) {
        const std::string name = class_dirs[label].filename().string();
        names.push_back(name);
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(class_dirs[label])) {
            if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        std::size_t kept = 0;
        for (const auto& file : files) {
            if (options.verify_images) {
                try {
                    (void)decode_image(file);
                } catch (const DataError&) {
                    if (!options.skip_corrupt) throw DataError("corrupt image file '" + file.string() + "'");
                    spdlog::warn("skipping corrupt image '{}'", file.string());
                    continue;
                }
            }
            CorpusItem item;
            item.id = name + "/" + file.filename().string();
            item.label = static_cast<int>(label);
            item.payload = ImageRef{file};
            if (!options.group_separator.empty()) {
                const std::string stem = file.stem().string();
                const auto cut = stem.find(options.group_separator);
                item.group = name + "/" + (cut == std::string::npos ? stem : stem.substr(0, cut));
            }
            items.push_back(std::move(item));
            ++kept;
        }
        if (kept == 0) throw DataError("class '" + name + "' has 0 items");
    }
    return LabeledCorpus(std::move(names), std::move(items));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    return cells;
}

}  // namespace

LabeledCorpus::LabeledCorpus(std::vector<std::string> class_names, std::vector<CorpusItem> items)
    : class_names_(std::move(class_names)), items_(std::move(items)) {
    const int n_classes = static_cast<int>(class_names_.size());
    if (n_classes < 2) throw DataError("a corpus needs at least 2 classes, got " + std::to_string(n_classes));
    std::optional<int> d_latent;
    for (std::size_t i = 0; i < items_.size(); ++i) {
        const auto& item = items_[i];
        if (item.label < 0 || item.label >= n_classes) {
            throw DataError("item '" + item.id + "' has label " + std::to_string(item.label) + " outside [0, " +
                            std::to_string(n_classes) + ")");
        }
        if (!index_.emplace(item.id, i).second) throw DataError("duplicate item id '" + item.id + "'");
        if (const auto* emb = std::get_if<EmbeddingSet>(&item.payload)) {
            if (emb->n_locations() < 1) throw DataError("item '" + item.id + "' has no embedding vectors");
            if (d_latent && *d_latent != emb->d_latent()) {
                throw DataError("inconsistent embedding dimensions: item '" + item.id + "' has d_latent " +
                                std::to_string(emb->d_latent()) + ", expected " + std::to_string(*d_latent));
            }
            d_latent = emb->d_latent();
        }
    }
}

std::vector<std::size_t> LabeledCorpus::counts() const {
    std::vector<std::size_t> out(class_names_.size(), 0);
    for (const auto& item : items_) ++out[static_cast<std::size_t>(item.label)];
    return out;
}

std::optional<std::size_t> LabeledCorpus::find(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const CorpusItem& LabeledCorpus::item(const std::string& id) const {
    const auto idx = find(id);
    if (!idx) throw DataError("unknown item id '" + id + "'");
    return items_[*idx];
}

int LabeledCorpus::label_of(const std::string& class_name) const {
    const auto it = std::find(class_names_.begin(), class_names_.end(), class_name);
    if (it == class_names_.end()) {
        // Accept a numeric label as well.
        int value = -1;
        const auto [ptr, ec] = std::from_chars(class_name.data(), class_name.data() + class_name.size(), value);
        if (ec == std::errc() && ptr == class_name.data() + class_name.size() && value >= 0 && value < n_classes()) {
            return value;
        }
        throw UsageError("unknown class '" + class_name + "'");
    }
    return static_cast<int>(it - class_names_.begin());
}

bool LabeledCorpus::has_embeddings() const {
    return !items_.empty() && std::all_of(items_.begin(), items_.end(), [](const CorpusItem& it) {
        return std::holds_alternative<EmbeddingSet>(it.payload);
    });
}

std::pair<int, int> LabeledCorpus::embedding_shape() const {
    if (!has_embeddings()) throw DataError("corpus payloads are not embeddings");
    const auto& first = std::get<EmbeddingSet>(items_.front().payload);
    for (const auto& item : items_) {
        const auto& e = std::get<EmbeddingSet>(item.payload);
        if (e.n_locations() != first.n_locations()) {
            throw DataError("item '" + item.id + "' has " + std::to_string(e.n_locations()) +
                            " vectors, expected " + std::to_string(first.n_locations()));
        }
    }
    return {first.n_locations(), first.d_latent()};
}

LabeledCorpus load_corpus(const std::filesystem::path& root, CorpusFormat format, const LoadOptions& options) {
    if (format == CorpusFormat::image_folders) return load_image_folders(root, options);
    if (!std::filesystem::exists(root)) throw DataError("embedding file '" + root.string() + "' does not exist");
    std::string ext = root.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".csv") return read_embedding_csv(root);
    return decode_embedding_file(read_file(root), root.string());
}

Bytes encode_embedding_file(const LabeledCorpus& corpus) {
    const auto [vectors_per_item, d_latent] = corpus.embedding_shape();
    ByteWriter w;
    w.tag(kEmbeddingMagic);
    w.u32(kEmbeddingVersion);
    w.u32(static_cast<std::uint32_t>(corpus.size()));
    w.u32(static_cast<std::uint32_t>(vectors_per_item));
    w.u32(static_cast<std::uint32_t>(d_latent));
    w.u32(static_cast<std::uint32_t>(corpus.n_classes()));
    for (const auto& item : corpus.items()) {
        w.str(item.id);
        w.u32(static_cast<std::uint32_t>(item.label));
        const auto& v = std::get<EmbeddingSet>(item.payload).vectors;
        for (Eigen::Index i = 0; i < v.size(); ++i) w.f32(v.data()[i]);
    }
    w.tag(kNamesTag);
    w.u32(static_cast<std::uint32_t>(corpus.n_classes()));
    for (const auto& name : corpus.class_names()) w.str(name);
    return w.take();
}

void write_embedding_file(const std::filesystem::path& path, const LabeledCorpus& corpus) {
    write_file(path, encode_embedding_file(corpus));
}

LabeledCorpus decode_embedding_file(std::span<const std::uint8_t> bytes, const std::string& context) {
    ByteReader r(bytes, context);
    if (r.tag() != kEmbeddingMagic) throw DataError(context + ": bad magic (expected FSLE)");
    const std::uint32_t version = r.u32();
    if (version != kEmbeddingVersion) throw DataError(context + ": unsupported version " + std::to_string(version));
    const std::uint32_t item_count = r.u32();
    const std::uint32_t vectors_per_item = r.u32();
    const std::uint32_t d_latent = r.u32();
    const std::uint32_t class_count = r.u32();
    if (vectors_per_item == 0 || d_latent == 0) throw DataError(context + ": empty embedding shape");

    std::vector<CorpusItem> items;
    items.reserve(item_count);
    for (std::uint32_t i = 0; i < item_count; ++i) {
        CorpusItem item;
        item.id = r.str();
        item.label = static_cast<int>(r.u32());
        EmbeddingSet emb;
        emb.source_id = item.id;
        emb.vectors.resize(vectors_per_item, d_latent);
        for (Eigen::Index k = 0; k < emb.vectors.size(); ++k) emb.vectors.data()[k] = r.f32();
        if (!emb.vectors.allFinite()) throw DataError(context + ": non-finite values in item '" + item.id + "'");
        item.payload = std::move(emb);
        items.push_back(std::move(item));
    }

    std::vector<std::string> names;
    if (r.next_is(kNamesTag)) {
        (void)r.tag();
        const std::uint32_t n = r.u32();
        for (std::uint32_t i = 0; i < n; ++i) names.push_back(r.str());
    } else {
        names = default_class_names(static_cast<int>(class_count));
    }
    if (names.size() != class_count) throw DataError(context + ": class name table does not match class count");
    LabeledCorpus corpus(std::move(names), std::move(items));
    const auto counts = corpus.counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) throw DataError("class '" + corpus.class_names()[c] + "' has 0 items");
    }
    return corpus;
}

LabeledCorpus read_embedding_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    struct Row {
        std::string id;
        std::string label;
        std::vector<float> values;
    };
    std::vector<Row> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto cells = split_csv_line(line);
        if (cells.size() < 3) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected id,label,values...");
        Row row{cells[0], cells[1], {}};
        bool numeric = true;
        for (std::size_t i = 2; i < cells.size(); ++i) {
            try {
                std::size_t used = 0;
                row.values.push_back(std::stof(cells[i], &used));
                if (used != cells[i].size()) numeric = false;
            } catch (const std::exception&) {
                numeric = false;
            }
        }
        if (!numeric) {
            if (rows.empty() && line_no == 1) continue;  // header row
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric vector value");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("'" + path.string() + "' contains no rows");

    bool integer_labels = std::all_of(rows.begin(), rows.end(), [](const Row& r) {
        return !r.label.empty() && std::all_of(r.label.begin(), r.label.end(), [](unsigned char c) { return std::isdigit(c); });
    });
    std::vector<std::string> names;
    std::map<std::string, int> name_to_label;
    if (integer_labels) {
        int max_label = 0;
        for (const auto& r : rows) max_label = std::max(max_label, std::stoi(r.label));
        names = default_class_names(max_label + 1);
    } else {
        std::set<std::string> unique;
        for (const auto& r : rows) unique.insert(r.label);
        names.assign(unique.begin(), unique.end());
        for (std::size_t i = 0; i < names.size(); ++i) name_to_label[names[i]] = static_cast<int>(i);
    }

    std::vector<CorpusItem> items;
    for (auto& r : rows) {
        CorpusItem item;
        item.id = r.id;
        item.label = integer_labels ? std::stoi(r.label) : name_to_label.at(r.label);
        EmbeddingSet emb;
        emb.source_id = r.id;
        emb.vectors = Eigen::Map<RowMatrixF>(r.values.data(), 1, static_cast<Eigen::Index>(r.values.size()));
        item.payload = std::move(emb);
        items.push_back(std::move(item));
    }
    LabeledCorpus corpus(std::move(names), std::move(items));
    const auto counts = corpus.counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) throw DataError("class '" + corpus.class_names()[c] + "' has 0 items");
    }
    return corpus;
}

std::size_t EpisodeSplit::support_size() const {
    std::size_t n = 0;
    for (const auto& [label, ids] : support) n += ids.size();
    return n;
}

EpisodeSplit make_split(const LabeledCorpus& corpus, const std::vector<int>& classes, int shots_k, std::uint64_t seed,
                        const SplitOptions& options) {
    if (shots_k < 1) throw UsageError("shots_k must be positive");
    if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0)) {
        throw UsageError("test_fraction must be in (0, 1)");
    }
    std::vector<int> selected = classes;
    std::sort(selected.begin(), selected.end());
    selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
    if (selected.empty()) throw UsageError("no classes selected for the split");

    // Items in corpus order (lexicographic by path at load time), per class.
    std::map<int, std::vector<std::size_t>> by_class;
    for (int c : selected) {
        if (c < 0 || c >= corpus.n_classes()) throw UsageError("class label " + std::to_string(c) + " not in corpus");
        by_class[c];
    }
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto it = by_class.find(corpus.at(i).label);
        if (it != by_class.end()) it->second.push_back(i);
    }

    EpisodeSplit split;
    split.shots_k = shots_k;
    split.seed = seed;
    Rng rng(seed);
    for (auto& [label, members] : by_class) {
        const std::size_t n = members.size();
        const std::string& name = corpus.class_names()[static_cast<std::size_t>(label)];
        const auto n_query = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(static_cast<double>(n) * options.test_fraction)));
        if (n < static_cast<std::size_t>(shots_k) + 1 || n < n_query + static_cast<std::size_t>(shots_k)) {
            throw DataError("insufficient items in class '" + name + "': have " + std::to_string(n) + ", need " +
                            std::to_string(shots_k) + " supports + " + std::to_string(n_query) + " queries");
        }

        // Shuffle whole groups; an ungrouped item forms its own group.
        std::vector<std::vector<std::size_t>> groups;
        if (options.group_aware) {
            std::map<std::string, std::size_t> group_index;
            for (std::size_t idx : members) {
                const auto& g = corpus.at(idx).group;
                if (g.empty()) {
                    groups.push_back({idx});
                } else {
                    auto [it, inserted] = group_index.emplace(g, groups.size());
                    if (inserted) groups.emplace_back();
                    groups[it->second].push_back(idx);
                }
            }
        } else {
            for (std::size_t idx : members) groups.push_back({idx});
        }
        rng.shuffle(std::span(groups));

        std::vector<std::size_t> query;
        std::vector<std::size_t> remainder;
        for (const auto& g : groups) {
            auto& side = query.size() < n_query ? query : remainder;
            side.insert(side.end(), g.begin(), g.end());
        }
        if (remainder.size() < static_cast<std::size_t>(shots_k)) {
            throw DataError("insufficient items in class '" + name + "' after group-aware query selection: " +
                            std::to_string(remainder.size()) + " left for " + std::to_string(shots_k) + " supports");
        }
        rng.shuffle(std::span(remainder));
        remainder.resize(static_cast<std::size_t>(shots_k));
        std::sort(remainder.begin(), remainder.end());
        std::sort(query.begin(), query.end());

        auto& ids = split.support[label];
        for (std::size_t idx : remainder) ids.push_back(corpus.at(idx).id);
        for (std::size_t idx : query) split.query.push_back(corpus.at(idx).id);
    }
    return split;
}

std::string split_fingerprint(const EpisodeSplit& split) {
    std::ostringstream out;
    out << "k=" << split.shots_k << ";seed=" << split.seed << "\n";
    for (const auto& [label, ids] : split.support) {
        out << "support " << label << ":";
        for (const auto& id : ids) out << ' ' << id;
        out << "\n";
    }
    out << "query:";
    for (const auto& id : split.query) out << ' ' << id;
    out << "\n";
    return out.str();
}

}  // namespace fsl
