#include <cstring>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "dualdec/checkpoint.hpp"
#include "dualdec/errors.hpp"
#include "dualdec/text.hpp"
#include "temp_dir.hpp"

using namespace dualdec;

namespace {

constexpr ModelDims kDims{12, 14, 3, 2, 10, 10};

std::uint32_t manifest_length(const std::string& bytes) {
  std::uint32_t n = 0;
  std::memcpy(&n, bytes.data() + 5, 4);
  return n;
}

nlohmann::json manifest_of(const std::string& bytes) {
  return nlohmann::json::parse(bytes.substr(9, manifest_length(bytes)));
}

std::string with_manifest(const std::string& bytes, const nlohmann::json& manifest) {
  const std::string m = manifest.dump();
  const auto n = static_cast<std::uint32_t>(m.size());
  std::string out = bytes.substr(0, 5);
  out.append(reinterpret_cast<const char*>(&n), 4);
  out += m;
  out += bytes.substr(9 + manifest_length(bytes));
  return out;
}

}  // namespace

TEST(Checkpoint, HeaderLayout) {
  ResponseModel<float> m(ModelKind::kDual, kDims);
  m.initialize(1);
  const std::string bytes = serialize_checkpoint(m);
  EXPECT_EQ(bytes.substr(0, 4), "DDCK");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);
  const auto manifest = manifest_of(bytes);
  EXPECT_EQ(manifest.at("model_kind"), "dual");
  EXPECT_EQ(manifest.at("tensors").size(), m.parameters().size());
  EXPECT_EQ(bytes.size(), 9 + manifest_length(bytes) + 4 * m.parameters().element_count());
}

TEST(Checkpoint, RoundTripIsExact) {
  for (ModelKind kind : {ModelKind::kDual, ModelKind::kSeq2SeqAtt, ModelKind::kSeq2SeqAttSent}) {
    ResponseModel<float> m(kind, kDims);
    m.initialize(4);
    const auto back = deserialize_checkpoint<float>(serialize_checkpoint(m));
    EXPECT_EQ(back->kind(), kind);
    EXPECT_EQ(back->dims(), kDims);
    ASSERT_EQ(back->parameters().size(), m.parameters().size());
    for (std::size_t i = 0; i < m.parameters().size(); ++i) {
      EXPECT_EQ(back->parameters().at(i).name, m.parameters().at(i).name);
      EXPECT_EQ(back->parameters().at(i).value, m.parameters().at(i).value);
    }
    EXPECT_EQ(serialize_checkpoint(*back), serialize_checkpoint(m));
  }
}

TEST(Checkpoint, DoubleModelsStoreFloat32) {
  ResponseModel<double> m(ModelKind::kSeq2SeqAtt, kDims);
  m.initialize(2);
  const auto back = deserialize_checkpoint<double>(serialize_checkpoint(m));
  const auto& a = m.parameters().at(0).value;
  const auto& b = back->parameters().at(0).value;
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(b[k], static_cast<double>(static_cast<float>(a[k])));
}

TEST(Checkpoint, FileRoundTripAndKindCheck) {
  fixtures::TempDir dir;
  ResponseModel<float> m(ModelKind::kSeq2SeqAtt, kDims);
  m.initialize(3);
  save_checkpoint(dir / "m.ckpt", m);
  EXPECT_EQ(load_checkpoint(dir / "m.ckpt")->kind(), ModelKind::kSeq2SeqAtt);
  EXPECT_NO_THROW(load_checkpoint(dir / "m.ckpt", ModelKind::kSeq2SeqAtt));
  EXPECT_THROW(load_checkpoint(dir / "m.ckpt", ModelKind::kDual), ModelMismatchError);
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), IoError);
}

TEST(Checkpoint, ShapeOrNameMismatchIsReported) {
  ResponseModel<float> m(ModelKind::kDual, kDims);
  const std::string bytes = serialize_checkpoint(m);
  auto manifest = manifest_of(bytes);
  manifest["tensors"][0]["shape"] = {1, 1};
  EXPECT_THROW(deserialize_checkpoint<float>(with_manifest(bytes, manifest)), ModelMismatchError);
  manifest = manifest_of(bytes);
  manifest["tensors"][1]["name"] = "renamed";
  EXPECT_THROW(deserialize_checkpoint<float>(with_manifest(bytes, manifest)), ModelMismatchError);
}

TEST(Checkpoint, CorruptInputsAreFormatErrors) {
  ResponseModel<float> m(ModelKind::kDual, kDims);
  const std::string bytes = serialize_checkpoint(m);
  EXPECT_THROW(deserialize_checkpoint<float>("XXXX"), FormatError);
  std::string bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(deserialize_checkpoint<float>(bad_version), FormatError);
  EXPECT_THROW(deserialize_checkpoint<float>(bytes.substr(0, bytes.size() - 3)), FormatError);
  EXPECT_THROW(deserialize_checkpoint<float>(bytes.substr(0, 20)), FormatError);
}
