#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "owdisc/embedding.hpp"
#include "owdisc/prototype_bank.hpp"

namespace owdisc {

// CEF layout (little-endian):
//   0..3   magic "CEF1"
//   4..7   u32 n
//   8..11  u32 d
//   12     u8 has_labels
//   13..   n*d f32 row-major, then n u32 labels iff has_labels
inline constexpr std::size_t kCefHeaderBytes = 13;

std::vector<std::byte> encode_cef(const EmbeddingSet& set);
EmbeddingSet decode_cef(std::span<const std::byte> bytes);

// Dispatches on content: files starting with the CEF magic are decoded as
// CEF, files with a ".csv" extension are parsed as CSV, anything else is
// rejected with "bad magic".
EmbeddingSet load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);

// Header row required; d float columns plus an optional trailing "label".
EmbeddingSet parse_embeddings_csv(const std::string& text);

// Prototype banks are stored as CEF (one column per row) plus a JSON sidecar
// with the same stem holding the kind.
void save_prototypes(const PrototypeBank& bank, const std::filesystem::path& cef_path);
PrototypeBank load_prototypes(const std::filesystem::path& cef_path);

// truth.csv: "sample_index,label"
void save_labels_csv(const Labels& labels, const std::filesystem::path& path);
Labels load_labels_csv(const std::filesystem::path& path);

// predictions.csv: "sample_index,class_id,confidence"
void save_predictions_csv(const PredictionSet& predictions, const std::filesystem::path& path);
PredictionSet load_predictions_csv(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace owdisc
