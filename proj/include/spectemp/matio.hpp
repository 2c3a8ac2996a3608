#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "spectemp/tempering.hpp"
#include "spectemp/types.hpp"

namespace spectemp::matio {

/// TREC-style relevance judgments: query id -> [(doc id, graded relevance)].
/// Queries without a single positive judgment are dropped on load.
struct QrelsTable {
  std::map<std::string, std::vector<std::pair<std::string, int>>> entries;
  std::size_t dropped_queries = 0;  // judged queries with no positive label
};

// EMBF container: "EMBF", u32 version=1, u64 n, u64 d, u8 dtype (1 =
// float32), little-endian row-major payload. Round-trips are bit-exact.
EmbeddingMatrix load_embeddings(const std::string& path);
void save_embeddings(const EmbeddingMatrix& m, const std::string& path);

// STM1 container for fitted models; every field is persisted so a reload
// reproduces the model bit-for-bit.
tempering::SpectralModel load_model(const std::string& path);
void save_model(const tempering::SpectralModel& model, const std::string& path);

// Whitespace-separated `qid docid rel` lines; the 4-column TREC layout
// `qid 0 docid rel` is tolerated.
QrelsTable load_qrels(const std::string& path);

// Plain-text run output helper (reports, CSV exports).
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace spectemp::matio
