#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "grape/ad/adam.hpp"
#include "grape/ad/params.hpp"

namespace grape::ad {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kCheckpointFormat = "grape-checkpoint/1";

/// <stem>.json holds names, shapes, offsets and caller metadata; <stem>.bin holds the
/// parameter values followed by the Adam moments, as little-endian float32.
struct CheckpointPaths {
  std::filesystem::path manifest, blob;
  explicit CheckpointPaths(const std::filesystem::path& stem)
      : manifest(stem.string() + ".json"), blob(stem.string() + ".bin") {}
};

namespace detail {
inline void put_f32(std::vector<char>& out, float f) {
  std::uint32_t u = std::bit_cast<std::uint32_t>(f);
  if constexpr (std::endian::native == std::endian::big)
    u = (u >> 24) | ((u >> 8) & 0xff00u) | ((u << 8) & 0xff0000u) | (u << 24);
  char b[4];
  std::memcpy(b, &u, 4);
  out.insert(out.end(), b, b + 4);
}
inline float get_f32(const char* p) {
  std::uint32_t u;
  std::memcpy(&u, p, 4);
  if constexpr (std::endian::native == std::endian::big)
    u = (u >> 24) | ((u >> 8) & 0xff00u) | ((u << 8) & 0xff0000u) | (u << 24);
  return std::bit_cast<float>(u);
}
}  // namespace detail

template <std::floating_point T>
void save_checkpoint(const std::filesystem::path& stem, const ParamStore<T>& params, const AdamState<T>* adam,
                     const nlohmann::json& meta = {}) {
  CheckpointPaths paths(stem);
  std::vector<char> blob;
  nlohmann::json man;
  man["format"] = kCheckpointFormat;
  man["dtype"] = "float32";
  man["endian"] = "little";
  auto& plist = man["params"] = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& e : params.entries()) {
    plist.push_back({{"name", e.name},
                     {"shape", {e.tensor.rows(), e.tensor.cols()}},
                     {"offset", offset},
                     {"count", e.tensor.size()}});
    for (T v : e.tensor.values()) detail::put_f32(blob, static_cast<float>(v));
    offset += e.tensor.size();
  }
  man["param_count"] = offset;
  if (adam && adam->m.size() == params.size()) {
    man["adam"] = {{"step", adam->step}, {"m_offset", offset}, {"v_offset", 2 * offset}};
    for (const auto& m : adam->m)
      for (T v : m) detail::put_f32(blob, static_cast<float>(v));
    for (const auto& vv : adam->v)
      for (T v : vv) detail::put_f32(blob, static_cast<float>(v));
  }
  man["meta"] = meta;
  {
    std::ofstream b(paths.blob, std::ios::binary);
    if (!b) throw CheckpointError("cannot write " + paths.blob.string());
    b.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  }
  std::ofstream m(paths.manifest);
  if (!m) throw CheckpointError("cannot write " + paths.manifest.string());
  m << man.dump(2) << '\n';
}

inline nlohmann::json read_manifest(const std::filesystem::path& stem) {
  CheckpointPaths paths(stem);
  std::ifstream in(paths.manifest);
  if (!in) throw CheckpointError("cannot open checkpoint manifest " + paths.manifest.string());
  auto j = nlohmann::json::parse(in);
  if (j.value("format", "") != kCheckpointFormat) throw CheckpointError("unknown checkpoint format");
  return j;
}

/// Loads values into an already-shaped parameter set; names and shapes must match.
/// Returns the manifest.
template <std::floating_point T>
nlohmann::json load_checkpoint(const std::filesystem::path& stem, ParamStore<T>& params, AdamState<T>* adam = nullptr) {
  const auto man = read_manifest(stem);
  CheckpointPaths paths(stem);
  std::ifstream in(paths.blob, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint blob " + paths.blob.string());
  std::vector<char> blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  const auto& plist = man.at("params");
  if (plist.size() != params.size())
    throw CheckpointError("checkpoint has " + std::to_string(plist.size()) + " parameters, model has " +
                          std::to_string(params.size()));
  auto read = [&](std::size_t idx) {
    if ((idx + 1) * 4 > blob.size()) throw CheckpointError("checkpoint blob truncated");
    return detail::get_f32(blob.data() + idx * 4);
  };
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto& e = params.entries()[p];
    const auto& j = plist[p];
    if (j.at("name").get<std::string>() != e.name) throw CheckpointError("parameter name mismatch at " + e.name);
    if (j.at("shape")[0].get<std::size_t>() != e.tensor.rows() || j.at("shape")[1].get<std::size_t>() != e.tensor.cols())
      throw CheckpointError("shape mismatch for parameter " + e.name);
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto t = params.entries()[p].tensor;
    const auto off = plist[p].at("offset").get<std::size_t>();
    for (std::size_t i = 0; i < t.size(); ++i) t.values()[i] = static_cast<T>(read(off + i));
  }
  if (adam && man.contains("adam")) {
    const auto& a = man["adam"];
    *adam = AdamState<T>{};
    adam->ensure(params);
    adam->step = a.at("step").get<std::uint64_t>();
    const auto mo = a.at("m_offset").get<std::size_t>(), vo = a.at("v_offset").get<std::size_t>();
    for (std::size_t p = 0; p < params.size(); ++p) {
      const auto off = plist[p].at("offset").get<std::size_t>();
      for (std::size_t i = 0; i < adam->m[p].size(); ++i) {
        adam->m[p][i] = static_cast<T>(read(mo + off + i));
        adam->v[p][i] = static_cast<T>(read(vo + off + i));
      }
    }
  }
  return man;
}

}  // namespace grape::ad
