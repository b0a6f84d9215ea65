// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#include "saicl/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "saicl/error.hpp"

namespace saicl {
namespace {

constexpr char kMagic[8] = {'S', 'A', 'I', 'C', 'L', 'C', 'K', '1'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
    throw FormatError("checkpoint truncated");
  return value;
}

std::string get_string(std::istream& in, std::uint64_t n) {
  if (n > (1u << 24)) throw FormatError("checkpoint string length is implausible");
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n)))
    throw FormatError("checkpoint truncated");
  return s;
}

nlohmann::json buckets_json(const BucketParams& b) {
  return {{"buckets", b.buckets}, {"max_distance", b.max_distance},
          {"bidirectional", b.bidirectional}};
}

BucketParams buckets_from(const nlohmann::json& j) {
  return {j.at("buckets").get<int>(), j.at("max_distance").get<int>(),
          j.at("bidirectional").get<bool>()};
}

}  // namespace

std::string config_to_json(const ModelConfig& c) {
  nlohmann::json j = {{"vocab", c.vocab},
                      {"d_model", c.d_model},
                      {"heads", c.heads},
                      {"encoder_layers", c.encoder_layers},
                      {"decoder_layers", c.decoder_layers},
                      {"d_ff", c.d_ff},
                      {"variant", std::string(variant_name(c.variant))},
                      {"encoder_buckets", buckets_json(c.encoder_buckets)},
                      {"decoder_buckets", buckets_json(c.decoder_buckets)},
                      {"dropout", c.dropout},
                      {"init_std", c.init_std},
                      {"seed", c.seed}};
  return j.dump();
}

ModelConfig config_from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    ModelConfig c;
    c.vocab = j.at("vocab").get<std::size_t>();
    c.d_model = j.at("d_model").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.encoder_layers = j.at("encoder_layers").get<std::size_t>();
    c.decoder_layers = j.at("decoder_layers").get<std::size_t>();
    c.d_ff = j.at("d_ff").get<std::size_t>();
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.encoder_buckets = buckets_from(j.at("encoder_buckets"));
    c.decoder_buckets = buckets_from(j.at("decoder_buckets"));
    c.dropout = j.at("dropout").get<double>();
    c.init_std = j.at("init_std").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }
}

void save_checkpoint(const Model& model, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string header = config_to_json(model.config());
  put<std::uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  put<std::uint64_t>(out, model.parameters().size());
  for (const auto& [name, t] : model.parameters()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape().size()));
    for (std::size_t d : t.shape()) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.numel() * sizeof(double)));
  }
  if (!out) throw Error("failed writing checkpoint");
}

void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  save_checkpoint(model, out);
}

Model load_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw FormatError("not a checkpoint (bad magic)");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  Model model(config_from_json(get_string(in, get<std::uint64_t>(in))));
  auto& params = model.parameters();
  const auto count = get<std::uint64_t>(in);
  if (count != params.size())
    throw FormatError("checkpoint has " + std::to_string(count) + " tensors, model expects " +
                      std::to_string(params.size()));
  for (auto& [name, t] : params) {
    const std::string stored = get_string(in, get<std::uint32_t>(in));
    if (stored != name) throw FormatError("expected tensor '" + name + "', found '" + stored + "'");
    const auto rank = get<std::uint32_t>(in);
    Shape shape(rank);
    for (auto& d : shape) d = get<std::uint64_t>(in);
    if (shape != t.shape())
      throw FormatError("tensor '" + name + "' has shape " + shape_string(shape) +
                        ", expected " + shape_string(t.shape()));
    auto dst = t.mutable_data();
    if (!in.read(reinterpret_cast<char*>(dst.data()),
                 static_cast<std::streamsize>(dst.size() * sizeof(double))))
      throw FormatError("checkpoint truncated in '" + name + "'");
  }
  return model;
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  return load_checkpoint(in);
}

}  // namespace saicl
