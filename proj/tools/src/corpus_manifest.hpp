#pragma once

#include "fsl/ingestion.hpp"

#include <filesystem>
#include <string>

namespace fsl::cli {

/// JSON listing of an image-folder corpus written by `ingest`: class names
/// plus (id, label, path, group) per item. `embed` reads it back.
std::string corpus_manifest_json(const LabeledCorpus& corpus, const std::filesystem::path& root);
LabeledCorpus read_corpus_manifest(const std::filesystem::path& path);

}  // namespace fsl::cli
