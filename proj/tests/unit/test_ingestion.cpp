#include "fixtures.hpp"

#include "fsl/error.hpp"
#include "fsl/ingestion.hpp"

#include <doctest.h>
#include <opencv2/core.hpp>

#include <algorithm>
#include <fstream>
#include <set>

using namespace fsl;

namespace {

CorpusItem embedding_item(const std::string& id, int label, int rows, int cols, std::uint64_t seed) {
    CorpusItem item;
    item.id = id;
    item.label = label;
    item.payload = fixture::gaussian_embedding(id, rows, cols, seed);
    return item;
}

LabeledCorpus counted_corpus(const std::vector<int>& counts) {
    std::vector<std::string> names;
    std::vector<CorpusItem> items;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        names.push_back("class" + std::to_string(c));
        for (int i = 0; i < counts[c]; ++i) {
            items.push_back(embedding_item(names.back() + "/" + std::to_string(i), static_cast<int>(c), 1, 2,
                                           c * 1000 + static_cast<std::uint64_t>(i)));
        }
    }
    return {names, std::move(items)};
}

}  // namespace

TEST_CASE("corpus invariants are enforced on construction") {
    std::vector<CorpusItem> ok{embedding_item("a", 0, 2, 3, 1), embedding_item("b", 1, 2, 3, 2)};
    CHECK_NOTHROW(LabeledCorpus({"x", "y"}, ok));
    CHECK_THROWS_AS(LabeledCorpus({"x"}, {embedding_item("a", 0, 2, 3, 1)}), DataError);

    auto bad_label = ok;
    bad_label[1].label = 2;
    CHECK_THROWS_AS(LabeledCorpus({"x", "y"}, bad_label), DataError);

    auto dup = ok;
    dup[1].id = "a";
    CHECK_THROWS_AS(LabeledCorpus({"x", "y"}, dup), DataError);

    auto ragged = ok;
    ragged[1] = embedding_item("b", 1, 2, 4, 2);
    CHECK_THROWS_AS(LabeledCorpus({"x", "y"}, ragged), DataError);
}

TEST_CASE("two classes x 3 embeddings survive a file round trip field by field") {
    fixture::TempDir dir("ingest");
    std::vector<CorpusItem> items;
    for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < 3; ++i) items.push_back(embedding_item("c" + std::to_string(c) + "_" + std::to_string(i), c, 4, 5, 10 * c + i));
    }
    const LabeledCorpus corpus({"healthy", "covid"}, items);
    write_embedding_file(dir / "c.fsle", corpus);
    const LabeledCorpus back = load_corpus(dir / "c.fsle", CorpusFormat::embedding_file);

    REQUIRE(back.n_classes() == 2);
    REQUIRE(back.size() == 6);
    CHECK(back.class_names() == corpus.class_names());
    for (std::size_t i = 0; i < 6; ++i) {
        const auto& a = corpus.at(i);
        const auto& b = back.at(i);
        CHECK(a.id == b.id);
        CHECK(a.label == b.label);
        const auto& va = std::get<EmbeddingSet>(a.payload).vectors;
        const auto& vb = std::get<EmbeddingSet>(b.payload).vectors;
        REQUIRE(va.rows() == vb.rows());
        REQUIRE(va.cols() == vb.cols());
        CHECK(std::equal(va.data(), va.data() + va.size(), vb.data()));  // bit-exact float32
    }
}

TEST_CASE("embedding file header layout") {
    const LabeledCorpus corpus({"a", "b"}, {embedding_item("x", 0, 2, 3, 1), embedding_item("y", 1, 2, 3, 2)});
    const Bytes bytes = encode_embedding_file(corpus);
    ByteReader r(bytes);
    const Tag magic = r.tag();
    CHECK(std::string(magic.data(), 4) == "FSLE");
    CHECK(r.u32() == 1);  // version
    CHECK(r.u32() == 2);  // items
    CHECK(r.u32() == 2);  // vectors per item
    CHECK(r.u32() == 3);  // d_latent
    CHECK(r.u32() == 2);  // classes
    CHECK(r.str() == "x");
    CHECK(r.u32() == 0);
    CHECK(r.f32() == std::get<EmbeddingSet>(corpus.at(0).payload).vectors(0, 0));
}

TEST_CASE("corrupt embedding files are rejected") {
    const LabeledCorpus corpus({"a", "b"}, {embedding_item("x", 0, 2, 3, 1), embedding_item("y", 1, 2, 3, 2)});
    Bytes bytes = encode_embedding_file(corpus);
    SUBCASE("bad magic") {
        bytes[0] = 'X';
        CHECK_THROWS_AS(decode_embedding_file(bytes), DataError);
    }
    SUBCASE("truncated") {
        bytes.resize(bytes.size() - 30);
        CHECK_THROWS_AS(decode_embedding_file(bytes), DataError);
    }
}

TEST_CASE("CSV embeddings accept numeric and named labels") {
    fixture::TempDir dir("csv");
    {
        std::ofstream out(dir / "e.csv");
        out << "id,label,v0,v1\n"
            << "a,0,1.0,2.0\n"
            << "b,1,3.0,4.0\n"
            << "c,0,5.5,-1\n";
    }
    const LabeledCorpus corpus = load_corpus(dir / "e.csv", CorpusFormat::embedding_file);
    CHECK(corpus.size() == 3);
    CHECK(corpus.n_classes() == 2);
    const auto& e = std::get<EmbeddingSet>(corpus.item("c").payload);
    CHECK(e.n_locations() == 1);
    CHECK(e.vectors(0, 0) == 5.5f);
    CHECK(e.vectors(0, 1) == -1.0f);

    {
        std::ofstream out(dir / "n.csv");
        out << "p1,pneumonia,1,2\n"
            << "h1,healthy,3,4\n";
    }
    const LabeledCorpus named = load_corpus(dir / "n.csv", CorpusFormat::embedding_file);
    CHECK(named.class_names()[static_cast<std::size_t>(named.item("h1").label)] == "healthy");
    CHECK(named.class_names()[static_cast<std::size_t>(named.item("p1").label)] == "pneumonia");
}

TEST_CASE("image folders load in lexicographic order") {
    fixture::TempDir dir("folders");
    const cv::Mat img(8, 8, CV_8UC3, cv::Scalar(10, 20, 30));
    for (const char* cls : {"pneumonia", "covid"}) {
        std::filesystem::create_directories(dir / cls);
        for (const char* f : {"b.png", "a.png", "c.png"}) fixture::write_png(dir / cls / f, img);
    }
    const LabeledCorpus corpus = load_corpus(dir.path(), CorpusFormat::image_folders);
    REQUIRE(corpus.size() == 6);
    CHECK(corpus.class_names() == std::vector<std::string>{"covid", "pneumonia"});
    CHECK(corpus.at(0).id == "covid/a.png");
    CHECK(corpus.at(2).id == "covid/c.png");
    CHECK(corpus.at(3).label == 1);
    CHECK(corpus.counts() == std::vector<std::size_t>{3, 3});
}

TEST_CASE("an empty class directory is an error that names the class") {
    fixture::TempDir dir("empty");
    std::filesystem::create_directories(dir / "x");
    std::filesystem::create_directories(dir / "y");
    fixture::write_png(dir / "y" / "a.png", cv::Mat(4, 4, CV_8UC3, cv::Scalar::all(1)));
    try {
        load_corpus(dir.path(), CorpusFormat::image_folders);
        FAIL("expected a DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()) == "class 'x' has 0 items");
    }
}

TEST_CASE("corrupt images fail unless skipped") {
    fixture::TempDir dir("corrupt");
    for (const char* cls : {"a", "b"}) {
        std::filesystem::create_directories(dir / cls);
        for (int i = 0; i < 3; ++i) {
            fixture::write_png(dir / cls / (std::to_string(i) + ".png"), cv::Mat(4, 4, CV_8UC3, cv::Scalar::all(i)));
        }
    }
    std::ofstream(dir / "a" / "9.png") << "not a png";
    CHECK_THROWS_AS(load_corpus(dir.path(), CorpusFormat::image_folders), DataError);
    LoadOptions lo;
    lo.skip_corrupt = true;
    CHECK(load_corpus(dir.path(), CorpusFormat::image_folders, lo).size() == 6);
}

TEST_CASE("missing inputs") {
    CHECK_THROWS_AS(load_corpus("/nonexistent/fsl", CorpusFormat::image_folders), DataError);
    CHECK_THROWS_AS(load_corpus("/nonexistent/fsl.fsle", CorpusFormat::embedding_file), DataError);
}

TEST_CASE("query size is floor(n * fraction), at least one") {
    const LabeledCorpus corpus = counted_corpus({315, 40, 3});
    const EpisodeSplit s = make_split(corpus, {0}, 8, 1);
    CHECK(s.query.size() == 63);  // 315 * 0.2
    const EpisodeSplit t = make_split(corpus, {2}, 2, 1);
    CHECK(t.query.size() == 1);  // floor(0.6) -> minimum 1
}

TEST_CASE("shots equal to the remainder use the whole remainder") {
    const LabeledCorpus corpus = counted_corpus({10, 10});
    const EpisodeSplit s = make_split(corpus, {0, 1}, 8, 4);
    for (const auto& [label, ids] : s.support) CHECK(ids.size() == 8);
    CHECK(s.query.size() == 4);
    CHECK_THROWS_AS(make_split(corpus, {0, 1}, 9, 4), DataError);
}

TEST_CASE("split invariants hold for many seeds") {
    const LabeledCorpus corpus = counted_corpus({50, 17, 30});
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const int k = 4 + static_cast<int>(seed % 9);
        const EpisodeSplit s = make_split(corpus, {0, 1, 2}, k, seed);
        std::set<std::string> support_ids;
        for (const auto& [label, ids] : s.support) {
            REQUIRE(static_cast<int>(ids.size()) == k);  // balanced regardless of class sizes
            for (const auto& id : ids) {
                CHECK(corpus.item(id).label == label);
                support_ids.insert(id);
            }
        }
        for (const auto& q : s.query) {
            REQUIRE(support_ids.count(q) == 0);
            CHECK(s.support.count(corpus.item(q).label) == 1);
        }
    }
}

TEST_CASE("splits are a function of the seed") {
    const LabeledCorpus corpus = counted_corpus({60, 60});
    const auto a = make_split(corpus, {0, 1}, 8, 77);
    const auto b = make_split(corpus, {0, 1}, 8, 77);
    const auto c = make_split(corpus, {0, 1}, 8, 78);
    CHECK(split_fingerprint(a) == split_fingerprint(b));
    CHECK(a.support == b.support);
    CHECK(a.query == b.query);
    CHECK(split_fingerprint(a) != split_fingerprint(c));
}

TEST_CASE("group-aware splits keep groups on one side") {
    std::vector<CorpusItem> items;
    for (int c = 0; c < 2; ++c) {
        for (int clip = 0; clip < 10; ++clip) {
            for (int f = 0; f < 4; ++f) {
                auto item = embedding_item("c" + std::to_string(c) + "/clip" + std::to_string(clip) + "_" + std::to_string(f),
                                           c, 1, 2, static_cast<std::uint64_t>(c * 100 + clip * 10 + f));
                item.group = "clip" + std::to_string(clip);
                items.push_back(std::move(item));
            }
        }
    }
    const LabeledCorpus corpus({"a", "b"}, std::move(items));
    SplitOptions so;
    so.group_aware = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = make_split(corpus, {0, 1}, 8, seed, so);
        std::set<std::pair<int, std::string>> query_groups;
        for (const auto& q : s.query) query_groups.insert({corpus.item(q).label, corpus.item(q).group});
        for (const auto& [label, ids] : s.support) {
            CHECK(ids.size() == 8);
            for (const auto& id : ids) CHECK(query_groups.count({label, corpus.item(id).group}) == 0);
        }
    }
}

TEST_CASE("split argument checks") {
    const LabeledCorpus corpus = counted_corpus({10, 10});
    SplitOptions bad;
    bad.test_fraction = 1.0;
    CHECK_THROWS_AS(make_split(corpus, {0, 1}, 2, 1, bad), UsageError);
    CHECK_THROWS_AS(make_split(corpus, {0, 5}, 2, 1), UsageError);
    CHECK_THROWS_AS(make_split(corpus, {0, 1}, 0, 1), UsageError);
}
