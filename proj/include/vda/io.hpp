#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vda/phasefield.hpp"
#include "vda/types.hpp"

namespace vda {

/// Grid snapshot on disk: one line of JSON metadata (nx, ny, spacing, time,
/// layout, endianness, dtype, payload byte count and checksum), a newline,
/// then nx*ny little-endian IEEE-754 doubles in row-major order.
struct GridSnapshot {
  Index nx = 0;
  Index ny = 0;
  Real spacing = 1.0;
  Real time = 0.0;
  Vector data;  // row-major field values, size nx * ny
};

/// Writes atomically: payload goes to "<path>.partial" first and is renamed
/// into place only after a successful write, so failures never leave a
/// half-written file under the final name.
void write_snapshot(const std::filesystem::path& path, const GridSnapshot& snap);

/// Validates the header, payload length and checksum.
GridSnapshot read_snapshot(const std::filesystem::path& path);

/// FNV-1a 64-bit over raw bytes; checksums snapshot payloads and hashes
/// configs into output file names.
std::uint64_t fnv1a64(const void* data, std::size_t bytes);

/// CSV with a header row; every value formatted with enough digits to
/// round-trip.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns)
      : columns_(std::move(columns)) {}

  void row(const std::vector<Real>& values);
  void row_mixed(const std::vector<std::string>& values);

  /// Atomic write (.partial then rename), like snapshots.
  void save(const std::filesystem::path& path) const;

  std::string str() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> rows_;
};

/// Full-precision decimal text for a double (round-trips bit-exactly).
std::string format_real(Real value);

/// Writes text atomically via the .partial suffix + rename.
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content);

}  // namespace vda
