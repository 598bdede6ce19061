#include "agesynth/latent_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "agesynth/csv.hpp"
#include "agesynth/error.hpp"
#include "agesynth/json_io.hpp"

namespace agesynth {

namespace {

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<char>((v >> shift) & 0xFF));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int k = 3; k >= 0; --k) v = (v << 8) | static_cast<unsigned char>(bytes[offset + static_cast<std::size_t>(k)]);
  return v;
}

std::uint16_t get_u16(std::string_view bytes, std::size_t offset) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[offset]) |
                                    (static_cast<unsigned char>(bytes[offset + 1]) << 8));
}

}  // namespace

std::filesystem::path meta_sidecar_path(const std::filesystem::path& latents) {
  return std::filesystem::path(latents.string() + ".meta.csv");
}

std::filesystem::path scaler_sidecar_path(const std::filesystem::path& latents) {
  return std::filesystem::path(latents.string() + ".scaler.json");
}

std::string encode_latent_payload(const Matrix& vectors) {
  if (vectors.rows() > 0xFFFFFFFFll || vectors.cols() > 0xFFFFFFFFll) {
    fail(ErrorCode::FormatError, "latent matrix too large for u32 header");
  }
  std::string out;
  out.reserve(kLatentHeaderSize + static_cast<std::size_t>(vectors.size()) * 4);
  out.append(kLatentMagic);
  put_u16(out, kLatentVersion);
  put_u32(out, static_cast<std::uint32_t>(vectors.rows()));
  put_u32(out, static_cast<std::uint32_t>(vectors.cols()));
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
      const auto f = static_cast<float>(vectors(i, j));
      if (!std::isfinite(f)) fail(ErrorCode::NonFiniteValue, "value not representable as finite float32");
      put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
  }
  return out;
}

Matrix decode_latent_payload(std::string_view bytes) {
  if (bytes.size() < kLatentHeaderSize) {
    if (bytes.size() >= 4 && bytes.substr(0, 4) != kLatentMagic) fail(ErrorCode::MagicMismatch, "not a LATW file");
    fail(ErrorCode::TruncatedPayload, "file shorter than header");
  }
  if (bytes.substr(0, 4) != kLatentMagic) fail(ErrorCode::MagicMismatch, "not a LATW file");
  const std::uint16_t version = get_u16(bytes, 4);
  if (version != kLatentVersion) fail(ErrorCode::UnsupportedVersion, "LATW version " + std::to_string(version));
  const std::uint64_t n = get_u32(bytes, 6);
  const std::uint64_t dim = get_u32(bytes, 10);
  if (dim == 0) fail(ErrorCode::FormatError, "dim must be positive");
  const std::uint64_t expected = n * dim * 4;
  const std::uint64_t payload = bytes.size() - kLatentHeaderSize;
  if (payload < expected) {
    fail(ErrorCode::TruncatedPayload,
         "payload has " + std::to_string(payload) + " bytes, header declares " + std::to_string(expected));
  }
  if (payload > expected) fail(ErrorCode::TrailingBytes, std::to_string(payload - expected) + " bytes after payload");

  Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  std::size_t offset = kLatentHeaderSize;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j, offset += 4) {
      const float f = std::bit_cast<float>(get_u32(bytes, offset));
      if (!std::isfinite(f)) {
        fail(ErrorCode::NonFiniteValue, "non-finite value at row " + std::to_string(i) + ", column " + std::to_string(j));
      }
      out(i, j) = f;
    }
  }
  return out;
}

std::string encode_metadata(const std::vector<SampleMeta>& meta) {
  std::ostringstream out;
  csv::write_row(out, {"sample_id", "age_years", "identity_id", "age_group"});
  for (const auto& m : meta) {
    csv::write_row(out, {m.sample_id, m.age_years ? csv::format_double(*m.age_years) : "", m.identity_id.value_or(""),
                         m.age_group ? std::to_string(*m.age_group) : ""});
  }
  return out.str();
}

std::vector<SampleMeta> decode_metadata(std::string_view csv_text) {
  const auto rows = csv::parse(csv_text);
  if (rows.empty()) fail(ErrorCode::FormatError, "metadata CSV has no header");
  const csv::Header header(rows.front());
  const auto id_col = header.index("sample_id");
  const auto age_col = header.find("age_years");
  const auto identity_col = header.find("identity_id");
  const auto group_col = header.find("age_group");

  std::vector<SampleMeta> meta;
  meta.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto field = [&](std::optional<std::size_t> col) -> std::string_view {
      if (!col || *col >= row.size()) return {};
      return row[*col];
    };
    SampleMeta m;
    m.sample_id = std::string(field(id_col));
    if (m.sample_id.empty()) fail(ErrorCode::FormatError, "empty sample_id in metadata row " + std::to_string(r));
    m.age_years = csv::parse_optional_double(field(age_col), "age_years");
    if (auto id = field(identity_col); !id.empty()) m.identity_id = std::string(id);
    if (auto g = field(group_col); !g.empty()) {
      const long long group = csv::parse_int(g, "age_group");
      if (group < 0) fail(ErrorCode::FormatError, "negative age_group");
      m.age_group = static_cast<std::size_t>(group);
    }
    meta.push_back(std::move(m));
  }
  return meta;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoFailure, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) fail(ErrorCode::IoFailure, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot rename " + tmp.string() + ": " + ec.message());
}

LatentSet load_latents(const std::filesystem::path& path, const std::optional<std::filesystem::path>& meta_path) {
  Matrix vectors = decode_latent_payload(read_file_bytes(path));

  const std::filesystem::path sidecar = meta_path.value_or(meta_sidecar_path(path));
  std::vector<SampleMeta> meta;
  if (std::filesystem::exists(sidecar)) {
    meta = decode_metadata(read_file_bytes(sidecar));
  } else if (meta_path) {
    fail(ErrorCode::IoFailure, "metadata file not found: " + sidecar.string());
  } else {
    meta.resize(static_cast<std::size_t>(vectors.rows()));
    for (std::size_t i = 0; i < meta.size(); ++i) meta[i].sample_id = std::to_string(i);
  }

  std::optional<Scaler> scaler;
  if (const auto scaler_path = scaler_sidecar_path(path); std::filesystem::exists(scaler_path)) {
    scaler = scaler_from_json(read_json_file(scaler_path));
  }
  return {std::move(vectors), std::move(meta), std::move(scaler)};
}

void save_latents(const LatentSet& set, const std::filesystem::path& path) {
  write_file_atomic(path, encode_latent_payload(set.vectors()));
  write_file_atomic(meta_sidecar_path(path), encode_metadata(set.meta()));
  const auto scaler_path = scaler_sidecar_path(path);
  if (set.scaler()) {
    write_file_atomic(scaler_path, dump_json(to_json(*set.scaler())));
  } else {
    std::error_code ec;
    std::filesystem::remove(scaler_path, ec);
  }
}

}  // namespace agesynth
