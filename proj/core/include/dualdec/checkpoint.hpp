#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "dualdec/model.hpp"

namespace dualdec {

// Binary layout:
//   "DDCK" | version byte (1) | u32 LE manifest length | manifest (UTF-8 JSON)
//   | float32 LE tensors concatenated in manifest order.
// The manifest holds the model kind, its dimensions and one
// {name, shape, offset} entry per tensor, offsets relative to the data block.

inline constexpr char kCheckpointMagic[4] = {'D', 'D', 'C', 'K'};
inline constexpr unsigned char kCheckpointVersion = 1;

template <typename T>
std::string serialize_checkpoint(const ResponseModel<T>& model);

/// Rebuilds a model of the recorded architecture. FormatError on a corrupt
/// file; ModelMismatchError when tensors disagree with the architecture.
template <typename T>
std::unique_ptr<ResponseModel<T>> deserialize_checkpoint(const std::string& bytes);

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ResponseModel<T>& model);

template <typename T = float>
std::unique_ptr<ResponseModel<T>> load_checkpoint(const std::filesystem::path& path);

/// Like load_checkpoint, but throws ModelMismatchError unless the stored kind
/// equals `expected`.
template <typename T = float>
std::unique_ptr<ResponseModel<T>> load_checkpoint(const std::filesystem::path& path,
                                                  ModelKind expected);

}  // namespace dualdec
