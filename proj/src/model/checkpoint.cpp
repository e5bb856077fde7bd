#include "tsam/model/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "tsam/model/model.hpp"

namespace tsam {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'A', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw Error("truncated checkpoint '" + path + "'");
  return v;
}

std::string get_string(std::istream& in, std::size_t len, const std::string& path) {
  std::string s(len, '\0');
  if (len > 0 && !in.read(s.data(), static_cast<std::streamsize>(len)))
    throw Error("truncated checkpoint '" + path + "'");
  return s;
}

}  // namespace

template <typename S>
void save_checkpoint(const std::string& path, const ModelConfig& cfg, const ModelParams<S>& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint '" + path + "'");
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, sizeof(S));
  const std::string json = to_json(cfg);
  put<std::uint64_t>(out, json.size());
  out.write(json.data(), static_cast<std::streamsize>(json.size()));

  std::uint64_t count = 0;
  for_each_param(params, [&count](const std::string&, const Matrix<S>&) { ++count; });
  put<std::uint64_t>(out, count);
  for_each_param(params, [&out](const std::string& name, const Matrix<S>& m) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(S)));
  });
  if (!out) throw Error("failed writing checkpoint '" + path + "'");
}

template <typename S>
Checkpoint<S> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw Error("'" + path + "' is not a checkpoint");
  if (get<std::uint32_t>(in, path) != kVersion) throw Error("unsupported checkpoint version in '" + path + "'");
  const auto width = get<std::uint32_t>(in, path);
  if (width != sizeof(S))
    throw Error("checkpoint '" + path + "' holds " + std::to_string(width * 8) + "-bit values, expected " +
                std::to_string(sizeof(S) * 8));

  Checkpoint<S> ck;
  ck.config = model_config_from_json(get_string(in, get<std::uint64_t>(in, path), path));
  ck.params = zero_params<S>(ck.config);
  const auto count = get<std::uint64_t>(in, path);
  std::uint64_t seen = 0;
  for_each_param(ck.params, [&](const std::string& name, Matrix<S>& m) {
    ++seen;
    if (seen > count) throw Error("checkpoint '" + path + "' is missing tensor '" + name + "'");
    const auto stored = get_string(in, get<std::uint32_t>(in, path), path);
    if (stored != name) throw Error("checkpoint '" + path + "': expected tensor '" + name + "', found '" + stored + "'");
    const auto rows = get<std::uint64_t>(in, path);
    const auto cols = get<std::uint64_t>(in, path);
    if (rows != static_cast<std::uint64_t>(m.rows()) || cols != static_cast<std::uint64_t>(m.cols()))
      throw DimensionError("checkpoint tensor '" + name + "' has shape [" + std::to_string(rows) + "x" +
                           std::to_string(cols) + "], config expects " + shape_str(m));
    if (!in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(S))))
      throw Error("truncated checkpoint '" + path + "'");
  });
  if (seen != count) throw Error("checkpoint '" + path + "' has extra tensors");
  return ck;
}

template void save_checkpoint(const std::string&, const ModelConfig&, const ModelParams<float>&);
template void save_checkpoint(const std::string&, const ModelConfig&, const ModelParams<double>&);
template Checkpoint<float> load_checkpoint<float>(const std::string&);
template Checkpoint<double> load_checkpoint<double>(const std::string&);

}  // namespace tsam
