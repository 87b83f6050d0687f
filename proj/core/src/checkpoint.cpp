#include "dualdec/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>

#include <nlohmann/json.hpp>

#include "dualdec/errors.hpp"
#include "dualdec/text.hpp"

namespace dualdec {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const std::string& in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

nlohmann::json dims_json(const ModelDims& d) {
  return {{"post_vocab", d.post_vocab},       {"resp_vocab", d.resp_vocab},
          {"embedding_dim", d.embedding_dim}, {"hidden_dim", d.hidden_dim},
          {"max_src_len", d.max_src_len},     {"max_tgt_len", d.max_tgt_len}};
}

ModelDims dims_from_json(const nlohmann::json& j) {
  ModelDims d;
  d.post_vocab = j.at("post_vocab").get<std::size_t>();
  d.resp_vocab = j.at("resp_vocab").get<std::size_t>();
  d.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  d.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  d.max_src_len = j.at("max_src_len").get<std::size_t>();
  d.max_tgt_len = j.at("max_tgt_len").get<std::size_t>();
  return d;
}

}  // namespace

template <typename T>
std::string serialize_checkpoint(const ResponseModel<T>& model) {
  nlohmann::json manifest;
  manifest["model_kind"] = to_string(model.kind());
  manifest["dims"] = dims_json(model.dims());
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& p : model.parameters()) {
    tensors.push_back({{"name", p.name}, {"shape", p.value.shape()}, {"offset", offset}});
    offset += p.value.size() * sizeof(float);
  }
  manifest["tensors"] = std::move(tensors);
  const std::string text = manifest.dump();

  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  out.push_back(static_cast<char>(kCheckpointVersion));
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  out.reserve(out.size() + offset);
  for (const auto& p : model.parameters()) {
    for (T v : p.value.values()) {
      const float f = static_cast<float>(v);
      char buf[sizeof(float)];
      std::memcpy(buf, &f, sizeof(float));
      out.append(buf, sizeof(float));
    }
  }
  return out;
}

template <typename T>
std::unique_ptr<ResponseModel<T>> deserialize_checkpoint(const std::string& bytes) {
  constexpr std::size_t kHeader = sizeof(kCheckpointMagic) + 1 + 4;
  if (bytes.size() < kHeader || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  if (static_cast<unsigned char>(bytes[4]) != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(static_cast<unsigned char>(bytes[4])));
  }
  const std::uint32_t manifest_len = get_u32(bytes, 5);
  if (bytes.size() < kHeader + manifest_len) throw FormatError("truncated checkpoint manifest");

  nlohmann::json manifest;
  ModelKind kind;
  ModelDims dims;
  try {
    manifest = nlohmann::json::parse(bytes.substr(kHeader, manifest_len));
    kind = model_kind_from_string(manifest.at("model_kind").get<std::string>());
    dims = dims_from_json(manifest.at("dims"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad checkpoint manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("bad checkpoint manifest: ") + e.what());
  }

  auto model = std::make_unique<ResponseModel<T>>(kind, dims);
  auto& params = model->parameters();
  const auto& entries = manifest.at("tensors");
  if (!entries.is_array() || entries.size() != params.size()) {
    throw ModelMismatchError("checkpoint lists " + std::to_string(entries.size()) + " tensors, a " +
                             to_string(kind) + " model has " + std::to_string(params.size()));
  }
  const std::size_t data_start = kHeader + manifest_len;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params.at(i);
    std::string name;
    Shape shape;
    std::size_t offset = 0;
    try {
      name = entries[i].at("name").get<std::string>();
      shape = entries[i].at("shape").get<Shape>();
      offset = entries[i].at("offset").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad tensor entry: ") + e.what());
    }
    if (name != p.name || shape != p.value.shape()) {
      throw ModelMismatchError("checkpoint tensor " + name + shape_string(shape) + " does not match expected " +
                               p.name + shape_string(p.value.shape()));
    }
    const std::size_t n = p.value.size();
    if (data_start + offset + n * sizeof(float) > bytes.size()) {
      throw FormatError("truncated tensor data for " + name);
    }
    const char* src = bytes.data() + data_start + offset;
    for (std::size_t k = 0; k < n; ++k) {
      float f;
      std::memcpy(&f, src + k * sizeof(float), sizeof(float));
      p.value[k] = static_cast<T>(f);
    }
    if (!p.value.all_finite()) throw NonFiniteError("checkpoint tensor " + name + " holds non-finite values");
  }
  return model;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ResponseModel<T>& model) {
  write_file(path, serialize_checkpoint(model));
}

template <typename T>
std::unique_ptr<ResponseModel<T>> load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint<T>(read_file(path));
}

template <typename T>
std::unique_ptr<ResponseModel<T>> load_checkpoint(const std::filesystem::path& path, ModelKind expected) {
  auto model = load_checkpoint<T>(path);
  if (model->kind() != expected) {
    throw ModelMismatchError(std::string("checkpoint holds a ") + to_string(model->kind()) + " model, requested " +
                             to_string(expected));
  }
  return model;
}

#define DUALDEC_INSTANTIATE_CKPT(T)                                                                  \
  template std::string serialize_checkpoint<T>(const ResponseModel<T>&);                             \
  template std::unique_ptr<ResponseModel<T>> deserialize_checkpoint<T>(const std::string&);          \
  template void save_checkpoint<T>(const std::filesystem::path&, const ResponseModel<T>&);           \
  template std::unique_ptr<ResponseModel<T>> load_checkpoint<T>(const std::filesystem::path&);       \
  template std::unique_ptr<ResponseModel<T>> load_checkpoint<T>(const std::filesystem::path&, ModelKind);

DUALDEC_INSTANTIATE_CKPT(float)
DUALDEC_INSTANTIATE_CKPT(double)

#undef DUALDEC_INSTANTIATE_CKPT

}  // namespace dualdec
