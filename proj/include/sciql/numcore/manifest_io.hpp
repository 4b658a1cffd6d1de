#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sciql/errors.hpp"

namespace sciql::io {

static_assert(std::endian::native == std::endian::little,
              "blob formats are little-endian; big-endian hosts need byte swapping");

/// Text header of `key value...` lines terminated by `end`, followed by a
/// raw binary blob whose size is recorded under `blob_bytes`.
struct ManifestFile {
  std::vector<std::pair<std::string, std::string>> lines;
  std::vector<std::uint8_t> blob;

  void set(std::string key, std::string value) { lines.emplace_back(std::move(key), std::move(value)); }

  [[nodiscard]] const std::string& get(const std::string& key) const {
    for (const auto& [k, v] : lines) {
      if (k == key) return v;
    }
    throw FormatError("manifest: missing field '" + key + "'");
  }

  [[nodiscard]] std::vector<std::string> get_all(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : lines) {
      if (k == key) out.push_back(v);
    }
    return out;
  }

  [[nodiscard]] long long get_int(const std::string& key) const {
    const auto& v = get(key);
    try {
      std::size_t pos = 0;
      const long long out = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw FormatError("manifest: field '" + key + "' is not an integer: '" + v + "'");
    }
  }

  [[nodiscard]] double get_double(const std::string& key) const {
    const auto& v = get(key);
    try {
      std::size_t pos = 0;
      const double out = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw FormatError("manifest: field '" + key + "' is not a number: '" + v + "'");
    }
  }
};

inline void write_manifest_file(const std::filesystem::path& path, const ManifestFile& file,
                                const std::string& magic) {
  std::ostringstream header;
  header << magic << "\n";
  for (const auto& [k, v] : file.lines) header << k << " " << v << "\n";
  header << "blob_bytes " << file.blob.size() << "\n";
  header << "end\n";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  const auto text = header.str();
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(file.blob.data()),
            static_cast<std::streamsize>(file.blob.size()));
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline ManifestFile read_manifest_file(const std::filesystem::path& path, const std::string& magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != magic) {
    throw FormatError("'" + path.string() + "': bad magic, expected '" + magic + "'");
  }
  ManifestFile file;
  long long blob_bytes = -1;
  bool terminated = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      terminated = true;
      break;
    }
    const auto sp = line.find(' ');
    std::string key = line.substr(0, sp);
    std::string value = sp == std::string::npos ? std::string{} : line.substr(sp + 1);
    if (key == "blob_bytes") {
      try {
        blob_bytes = std::stoll(value);
      } catch (const std::exception&) {
        throw FormatError("'" + path.string() + "': field 'blob_bytes' is not an integer");
      }
      continue;
    }
    file.set(std::move(key), std::move(value));
  }
  if (!terminated) throw FormatError("'" + path.string() + "': header not terminated (field 'end')");
  if (blob_bytes < 0) throw FormatError("'" + path.string() + "': missing field 'blob_bytes'");
  file.blob.resize(static_cast<std::size_t>(blob_bytes));
  in.read(reinterpret_cast<char*>(file.blob.data()), blob_bytes);
  if (in.gcount() != blob_bytes) {
    throw FormatError("'" + path.string() + "': blob truncated (field 'blob_bytes' = " +
                      std::to_string(blob_bytes) + ", read " + std::to_string(in.gcount()) + ")");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("'" + path.string() + "': trailing bytes after blob (field 'blob_bytes')");
  }
  return file;
}

inline void append_floats(std::vector<std::uint8_t>& blob, std::span<const float> values) {
  const auto offset = blob.size();
  blob.resize(offset + values.size() * sizeof(float));
  std::memcpy(blob.data() + offset, values.data(), values.size() * sizeof(float));
}

inline std::vector<float> read_floats(const std::vector<std::uint8_t>& blob, std::size_t& offset,
                                      std::size_t count, const std::string& field) {
  if (offset + count * sizeof(float) > blob.size()) {
    throw FormatError("blob too short for field '" + field + "'");
  }
  std::vector<float> out(count);
  std::memcpy(out.data(), blob.data() + offset, count * sizeof(float));
  offset += count * sizeof(float);
  return out;
}

}  // namespace sciql::io
