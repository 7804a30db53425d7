#include "vda/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "vda/errors.hpp"

namespace vda {

static_assert(std::endian::native == std::endian::little,
              "snapshot payloads are written little-endian verbatim");

std::uint64_t fnv1a64(const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < bytes; ++i) {
    hash ^= p[i];
    hash *= 0x100000001b3ull;
  }
  return hash;
}

namespace {

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

void rename_into_place(const std::filesystem::path& partial,
                       const std::filesystem::path& path) {
  std::error_code ec;
  std::filesystem::rename(partial, path, ec);
  if (ec) {
    throw IoError("rename failed for " + path.string() + ": " + ec.message());
  }
}

}  // namespace

void write_snapshot(const std::filesystem::path& path,
                    const GridSnapshot& snap) {
  if (snap.data.size() != snap.nx * snap.ny) {
    throw IoError("snapshot: data size does not match nx * ny");
  }
  const std::size_t payload_bytes =
      static_cast<std::size_t>(snap.data.size()) * sizeof(Real);

  nlohmann::json header;
  header["nx"] = snap.nx;
  header["ny"] = snap.ny;
  header["spacing"] = snap.spacing;
  header["time"] = snap.time;
  header["layout"] = "row-major";
  header["endianness"] = "little";
  header["dtype"] = "float64";
  header["payload_bytes"] = payload_bytes;
  header["payload_fnv1a64"] = hex64(fnv1a64(snap.data.data(), payload_bytes));

  const std::filesystem::path partial = path.string() + ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + partial.string());
    out << header.dump() << '\n';
    out.write(reinterpret_cast<const char*>(snap.data.data()),
              static_cast<std::streamsize>(payload_bytes));
    if (!out) throw IoError("write failed for " + partial.string());
  }
  rename_into_place(partial, path);
}

GridSnapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw IoError("missing snapshot header in " + path.string());
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& err) {
    throw IoError("bad snapshot header in " + path.string() + ": " +
                  err.what());
  }
  GridSnapshot snap;
  try {
    snap.nx = header.at("nx").get<Index>();
    snap.ny = header.at("ny").get<Index>();
    snap.spacing = header.at("spacing").get<Real>();
    snap.time = header.at("time").get<Real>();
    if (header.at("layout") != "row-major" ||
        header.at("endianness") != "little" ||
        header.at("dtype") != "float64") {
      throw IoError("unsupported snapshot encoding in " + path.string());
    }
    const auto payload_bytes = header.at("payload_bytes").get<std::size_t>();
    if (payload_bytes !=
        static_cast<std::size_t>(snap.nx * snap.ny) * sizeof(Real)) {
      throw IoError("snapshot payload size mismatch in " + path.string());
    }
    snap.data.resize(snap.nx * snap.ny);
    in.read(reinterpret_cast<char*>(snap.data.data()),
            static_cast<std::streamsize>(payload_bytes));
    if (static_cast<std::size_t>(in.gcount()) != payload_bytes) {
      throw IoError("truncated snapshot payload in " + path.string());
    }
    const std::string checksum =
        hex64(fnv1a64(snap.data.data(), payload_bytes));
    if (checksum != header.at("payload_fnv1a64").get<std::string>()) {
      throw IoError("snapshot checksum mismatch in " + path.string());
    }
  } catch (const nlohmann::json::exception& err) {
    throw IoError("bad snapshot header in " + path.string() + ": " +
                  err.what());
  }
  return snap;
}

std::string format_real(Real value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void CsvWriter::row(const std::vector<Real>& values) {
  if (values.size() != columns_.size()) {
    throw IoError("csv row width mismatch");
  }
  std::string line;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) line += ',';
    line += format_real(values[i]);
  }
  rows_.push_back(std::move(line));
}

void CsvWriter::row_mixed(const std::vector<std::string>& values) {
  if (values.size() != columns_.size()) {
    throw IoError("csv row width mismatch");
  }
  std::string line;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) line += ',';
    line += values[i];
  }
  rows_.push_back(std::move(line));
}

std::string CsvWriter::str() const {
  std::string out;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out += ',';
    out += columns_[i];
  }
  out += '\n';
  for (const std::string& row : rows_) {
    out += row;
    out += '\n';
  }
  return out;
}

void CsvWriter::save(const std::filesystem::path& path) const {
  write_text_atomic(path, str());
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  const std::filesystem::path partial = path.string() + ".partial";
  {
    std::ofstream out(partial, std::ios::trunc);
    if (!out) throw IoError("cannot open " + partial.string());
    out << content;
    if (!out) throw IoError("write failed for " + partial.string());
  }
  rename_into_place(partial, path);
}

}  // namespace vda
