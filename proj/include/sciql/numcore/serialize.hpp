#pragma once

#include <filesystem>
#include <sstream>
#include <string>

#include "sciql/numcore/manifest_io.hpp"
#include "sciql/numcore/parameter_set.hpp"

namespace sciql {

inline constexpr const char* kParamsMagic = "sciql-params 1";

namespace detail {

inline std::string entry_line(const std::string& name, const DenseArray& arr) {
  std::ostringstream os;
  os << name << " f32 " << arr.shape.size();
  for (auto d : arr.shape) os << " " << d;
  return os.str();
}

inline std::pair<std::string, std::vector<std::size_t>> parse_entry_line(const std::string& line) {
  std::istringstream is(line);
  std::string name, dtype;
  std::size_t rank = 0;
  if (!(is >> name >> dtype >> rank)) throw FormatError("params manifest: malformed field 'entry': " + line);
  if (dtype != "f32") throw FormatError("params manifest: unsupported dtype in field 'entry': " + dtype);
  std::vector<std::size_t> shape(rank);
  for (auto& d : shape) {
    if (!(is >> d)) throw FormatError("params manifest: truncated shape in field 'entry': " + line);
  }
  return {name, shape};
}

}  // namespace detail

/// Manifest lists parameters, then Adam first and second moments
/// (`adam_m/<name>`, `adam_v/<name>`); the blob holds their f32 values in
/// the same order.
inline io::ManifestFile params_to_manifest(const ParameterSet& params) {
  io::ManifestFile file;
  file.set("step_count", std::to_string(params.step_count));
  auto emit = [&](const std::string& prefix, const std::map<std::string, DenseArray>& group) {
    for (const auto& [name, arr] : group) {
      file.set("entry", detail::entry_line(prefix + name, arr));
      io::append_floats(file.blob, arr.data);
    }
  };
  emit("", params.entries);
  emit("adam_m/", params.adam_m);
  emit("adam_v/", params.adam_v);
  return file;
}

inline ParameterSet params_from_manifest(const io::ManifestFile& file) {
  ParameterSet params;
  params.step_count = file.get_int("step_count");
  if (params.step_count < 0) throw FormatError("params manifest: field 'step_count' is negative");
  std::size_t offset = 0;
  for (const auto& line : file.get_all("entry")) {
    auto [name, shape] = detail::parse_entry_line(line);
    auto values = io::read_floats(file.blob, offset, DenseArray::element_count(shape), name);
    DenseArray arr(shape, FloatBuffer(values.begin(), values.end()));
    if (name.starts_with("adam_m/")) {
      params.adam_m[name.substr(7)] = std::move(arr);
    } else if (name.starts_with("adam_v/")) {
      params.adam_v[name.substr(7)] = std::move(arr);
    } else {
      params.entries[name] = std::move(arr);
    }
  }
  if (offset != file.blob.size()) throw FormatError("params manifest: field 'blob_bytes' exceeds entries");
  for (const auto& [name, arr] : params.entries) {
    for (auto* group : {&params.adam_m, &params.adam_v}) {
      auto it = group->find(name);
      if (it == group->end() || !it->second.same_shape(arr)) {
        throw FormatError("params manifest: optimizer moments missing or misshapen for entry '" + name + "'");
      }
    }
  }
  return params;
}

inline void save_params(const std::filesystem::path& path, const ParameterSet& params) {
  io::write_manifest_file(path, params_to_manifest(params), kParamsMagic);
}

inline ParameterSet load_params(const std::filesystem::path& path) {
  return params_from_manifest(io::read_manifest_file(path, kParamsMagic));
}

}  // namespace sciql
