#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agesynth/latent_set.hpp"

namespace agesynth {

// Binary layout, little-endian:
//   "LATW" | u16 version (1) | u32 n | u32 dim | n*dim float32, row-major
// Metadata lives in a CSV sidecar (sample_id,age_years,identity_id,age_group);
// an empty field means absent. A standardized set also carries a scaler JSON sidecar.
inline constexpr std::string_view kLatentMagic = "LATW";
inline constexpr std::uint16_t kLatentVersion = 1;
inline constexpr std::size_t kLatentHeaderSize = 4 + 2 + 4 + 4;

std::filesystem::path meta_sidecar_path(const std::filesystem::path& latents);
std::filesystem::path scaler_sidecar_path(const std::filesystem::path& latents);

/// Serializes the vectors (header + payload). Values are narrowed to float32.
std::string encode_latent_payload(const Matrix& vectors);
Matrix decode_latent_payload(std::string_view bytes);

std::string encode_metadata(const std::vector<SampleMeta>& meta);
std::vector<SampleMeta> decode_metadata(std::string_view csv_text);

/// Loads vectors plus sidecars. The metadata sidecar is joined row-by-row and must have
/// exactly n rows; without a sidecar, sample ids default to the row index.
LatentSet load_latents(const std::filesystem::path& path,
                       const std::optional<std::filesystem::path>& meta_path = std::nullopt);

/// Writes the binary file, the metadata sidecar, and the scaler sidecar when one is attached.
/// Files are written to a temporary name first and renamed into place.
void save_latents(const LatentSet& set, const std::filesystem::path& path);

/// Writes bytes to path via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace agesynth
