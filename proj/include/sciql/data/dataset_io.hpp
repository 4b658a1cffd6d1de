#pragma once

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>

#include "sciql/data/trajectory.hpp"
#include "sciql/errors.hpp"
#include "sciql/numcore/manifest_io.hpp"

namespace sciql::data {

inline constexpr const char* kDatasetFormat = "sciql-dataset-v1";

/// File layout: one line of JSON (the manifest), a newline, then a
/// little-endian f32 blob. Per episode, in order: (T+1)*12 observation
/// floats, T*2 action floats, T reward floats.
inline nlohmann::json header_to_json(const DatasetHeader& h) {
  return {
      {"format", kDatasetFormat},
      {"env_id", h.env_id},
      {"variant", h.variant},
      {"target", {{"cx", h.env.target.cx}, {"cy", h.env.target.cy}, {"radius", h.env.target.radius}}},
      {"reward_mode", env::to_string(h.env.reward_mode)},
      {"seed", h.seed},
      {"episode_count", h.episode_count},
      {"horizon", h.horizon},
      {"obs_dim", env::kObsDim},
      {"action_dim", env::kActionDim},
      {"return_bounds", {{"lo", h.return_bounds.lo}, {"hi", h.return_bounds.hi}}},
      {"layout", "per-episode: observations[(T+1)*obs_dim], actions[T*action_dim], rewards[T]"},
  };
}

namespace detail {

template <class T>
T field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("dataset manifest: missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(std::string("dataset manifest: field '") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline DatasetHeader header_from_json(const nlohmann::json& j) {
  using detail::field;
  if (field<std::string>(j, "format") != kDatasetFormat) {
    throw FormatError("dataset manifest: field 'format' is not " + std::string(kDatasetFormat));
  }
  DatasetHeader h;
  h.env_id = field<std::string>(j, "env_id");
  h.variant = field<std::string>(j, "variant");
  const auto target = field<nlohmann::json>(j, "target");
  h.env.target = {field<double>(target, "cx"), field<double>(target, "cy"), field<double>(target, "radius")};
  try {
    h.env.reward_mode = env::reward_mode_from_string(field<std::string>(j, "reward_mode"));
  } catch (const std::invalid_argument&) {
    throw FormatError("dataset manifest: field 'reward_mode' is invalid");
  }
  h.seed = field<std::uint64_t>(j, "seed");
  h.episode_count = field<std::size_t>(j, "episode_count");
  h.horizon = field<std::size_t>(j, "horizon");
  h.env.horizon = static_cast<int>(h.horizon);
  if (field<std::size_t>(j, "obs_dim") != env::kObsDim) throw FormatError("dataset manifest: field 'obs_dim' mismatch");
  if (field<std::size_t>(j, "action_dim") != env::kActionDim) {
    throw FormatError("dataset manifest: field 'action_dim' mismatch");
  }
  const auto bounds = field<nlohmann::json>(j, "return_bounds");
  h.return_bounds = {field<double>(bounds, "lo"), field<double>(bounds, "hi")};
  return h;
}

inline void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  if (ds.episodes.empty()) throw std::invalid_argument("write_dataset: dataset has no episodes");
  std::vector<std::uint8_t> blob;
  for (const auto& ep : ds.episodes) {
    if (ep.length() != ds.header.horizon || ep.observations.size() != (ep.length() + 1) * env::kObsDim ||
        ep.actions.size() != ep.length() * env::kActionDim) {
      throw std::invalid_argument("write_dataset: episode does not match header horizon");
    }
    io::append_floats(blob, ep.observations);
    io::append_floats(blob, ep.actions);
    io::append_floats(blob, ep.rewards);
  }
  auto manifest = header_to_json(ds.header);
  manifest["episode_count"] = ds.episodes.size();
  manifest["blob_bytes"] = blob.size();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  const auto text = manifest.dump() + "\n";
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open dataset '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError("'" + path.string() + "': empty file");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw FormatError("'" + path.string() + "': manifest is not valid JSON");
  }
  Dataset ds;
  ds.header = header_from_json(manifest);
  const auto blob_bytes = detail::field<std::size_t>(manifest, "blob_bytes");
  const std::size_t horizon = ds.header.horizon;
  const std::size_t per_episode = ((horizon + 1) * env::kObsDim + horizon * env::kActionDim + horizon) * sizeof(float);
  if (per_episode * ds.header.episode_count != blob_bytes) {
    throw FormatError("'" + path.string() + "': field 'blob_bytes' inconsistent with episode_count x horizon");
  }
  std::vector<std::uint8_t> blob(blob_bytes);
  in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(blob_bytes));
  if (static_cast<std::size_t>(in.gcount()) != blob_bytes) {
    throw FormatError("'" + path.string() + "': blob truncated (field 'blob_bytes' = " +
                      std::to_string(blob_bytes) + ", read " + std::to_string(in.gcount()) + ")");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("'" + path.string() + "': trailing bytes after blob (field 'blob_bytes')");
  }
  std::size_t offset = 0;
  ds.episodes.resize(ds.header.episode_count);
  for (auto& ep : ds.episodes) {
    ep.observations = io::read_floats(blob, offset, (horizon + 1) * env::kObsDim, "observations");
    ep.actions = io::read_floats(blob, offset, horizon * env::kActionDim, "actions");
    ep.rewards = io::read_floats(blob, offset, horizon, "rewards");
  }
  return ds;
}

}  // namespace sciql::data
