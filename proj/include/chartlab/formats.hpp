#pragma once

#include <filesystem>

#include <json.hpp>

#include "chartlab/chart.hpp"
#include "chartlab/dataset.hpp"
#include "chartlab/dissimilarity.hpp"
#include "chartlab/neural.hpp"

namespace chartlab {

// Every container is a 5-byte magic, a little-endian u32 header length, a
// UTF-8 JSON header and a raw little-endian payload. Readers throw DataError
// on a wrong magic, a malformed header or a truncated payload.

/// CCDS1: complex64 CSI [l][b][m][n], float64 positions [l][2], float64
/// timestamps [l]. Header offsets are relative to the start of the payload.
void write_dataset(const std::filesystem::path& path, const CsiDataset& ds);
CsiDataset read_dataset(const std::filesystem::path& path);

/// CCDM1: float32 upper triangle without the diagonal, row by row.
void write_matrix(const std::filesystem::path& path, const DissimilarityMatrix& D,
                  const nlohmann::json& params = nlohmann::json::object());
DissimilarityMatrix read_matrix(const std::filesystem::path& path, nlohmann::json* params = nullptr);

/// CCCH1: float64 coordinates [l][2].
void write_chart(const std::filesystem::path& path, const ChannelChart& chart);
ChannelChart read_chart(const std::filesystem::path& path);

/// CCNN1: float32 blob, per layer weight (column-major), bias, then batch-norm
/// scale, shift, running mean and running variance when present.
void write_model(const std::filesystem::path& path, const Mlp& model);
Mlp read_model(const std::filesystem::path& path);

/// Converter for CSI exported by other tools as text. Not implemented.
CsiDataset import_text_dataset(const std::filesystem::path& path);

}  // namespace chartlab
