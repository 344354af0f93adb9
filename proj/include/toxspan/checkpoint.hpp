#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <string>

#include "toxspan/encoder.hpp"
#include "toxspan/error.hpp"

// Model checkpoint serialization.
//
// Layout (all integers little-endian):
//   8 bytes   magic "TOXSPANC"
//   u32       format version (currently 1)
//   u64       header length in bytes
//   ...       JSON header: config, seed, epoch, trial_f1, vocab_fingerprint
//   u32       tensor count
//   per tensor:
//     u16     name length, then name bytes
//     u32     rows, u32 cols
//     f32[]   values, row-major
//
// Tensors are stored as f32 regardless of the scalar type used in memory.
// The vocab fingerprint ties a checkpoint to the vocabulary it was
// trained with; loading with a different vocab is rejected downstream.

namespace toxspan {

inline void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = nlohmann::json{{"vocab_size", c.vocab_size},     {"hidden_dim", c.hidden_dim},
                     {"num_blocks", c.num_blocks},     {"num_heads", c.num_heads},
                     {"ff_dim", c.ff_dim},             {"max_len", c.max_len},
                     {"depth_set", c.depth_set},       {"dropout_rate", c.dropout_rate},
                     {"num_classes", c.num_classes}};
}

inline void from_json(const nlohmann::json& j, EncoderConfig& c) {
  j.at("vocab_size").get_to(c.vocab_size);
  j.at("hidden_dim").get_to(c.hidden_dim);
  j.at("num_blocks").get_to(c.num_blocks);
  j.at("num_heads").get_to(c.num_heads);
  j.at("ff_dim").get_to(c.ff_dim);
  j.at("max_len").get_to(c.max_len);
  j.at("depth_set").get_to(c.depth_set);
  j.at("dropout_rate").get_to(c.dropout_rate);
  j.at("num_classes").get_to(c.num_classes);
}

struct Checkpoint {
  EncoderConfig config;
  uint64_t seed = 0;
  int32_t epoch = 0;
  double trial_f1 = 0.0;
  uint64_t vocab_fingerprint = 0;
  Parameters<float> params;
};

namespace detail {

constexpr char kCheckpointMagic[8] = {'T', 'O', 'X', 'S', 'P', 'A', 'N', 'C'};
constexpr uint32_t kCheckpointVersion = 1;

inline void write_bytes(std::ostream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  unsigned char buf[sizeof(T)];
  auto u = static_cast<std::make_unsigned_t<T>>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(u >> (8 * i));
  write_bytes(out, buf, sizeof(T));
}

inline void write_f32le(std::ostream& out, float value) {
  write_le(out, std::bit_cast<uint32_t>(value));
}

inline void read_bytes(std::istream& in, void* data, std::size_t n, const char* what) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw Error(std::string("checkpoint truncated while reading ") + what);
  }
}

template <typename T>
T read_le(std::istream& in, const char* what) {
  static_assert(std::is_integral_v<T>);
  unsigned char buf[sizeof(T)];
  read_bytes(in, buf, sizeof(T), what);
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    u |= static_cast<std::make_unsigned_t<T>>(buf[i]) << (8 * i);
  }
  return static_cast<T>(u);
}

inline float read_f32le(std::istream& in, const char* what) {
  return std::bit_cast<float>(read_le<uint32_t>(in, what));
}

inline std::string fingerprint_hex(uint64_t fp) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(fp));
  return buf;
}

inline uint64_t parse_fingerprint_hex(const std::string& s) {
  if (s.size() != 18 || s[0] != '0' || s[1] != 'x') {
    throw Error("checkpoint header has malformed vocab_fingerprint '" + s + "'");
  }
  return std::strtoull(s.c_str() + 2, nullptr, 16);
}

}  // namespace detail

inline void save_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  nlohmann::json header = {{"config", ckpt.config},
                           {"seed", ckpt.seed},
                           {"epoch", ckpt.epoch},
                           {"trial_f1", ckpt.trial_f1},
                           {"vocab_fingerprint", detail::fingerprint_hex(ckpt.vocab_fingerprint)}};
  const std::string header_bytes = header.dump();

  detail::write_bytes(out, detail::kCheckpointMagic, sizeof(detail::kCheckpointMagic));
  detail::write_le(out, detail::kCheckpointVersion);
  detail::write_le(out, static_cast<uint64_t>(header_bytes.size()));
  detail::write_bytes(out, header_bytes.data(), header_bytes.size());

  uint32_t count = 0;
  ckpt.params.for_each_tensor([&](const std::string&, const Mat<float>&) { ++count; });
  detail::write_le(out, count);
  ckpt.params.for_each_tensor([&](const std::string& name, const Mat<float>& m) {
    detail::write_le(out, static_cast<uint16_t>(name.size()));
    detail::write_bytes(out, name.data(), name.size());
    detail::write_le(out, static_cast<uint32_t>(m.rows()));
    detail::write_le(out, static_cast<uint32_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) detail::write_f32le(out, m(r, c));
    }
  });
  if (!out) throw Error("checkpoint write failed");
}

inline Checkpoint load_checkpoint(std::istream& in) {
  char magic[8];
  detail::read_bytes(in, magic, sizeof(magic), "magic");
  if (!std::equal(magic, magic + 8, detail::kCheckpointMagic)) {
    throw Error("not a checkpoint file (bad magic)");
  }
  const uint32_t version = detail::read_le<uint32_t>(in, "version");
  if (version != detail::kCheckpointVersion) {
    throw Error("unsupported checkpoint version " + std::to_string(version));
  }
  const uint64_t header_len = detail::read_le<uint64_t>(in, "header length");
  std::string header_bytes(header_len, '\0');
  detail::read_bytes(in, header_bytes.data(), header_len, "header");

  Checkpoint ckpt;
  try {
    const nlohmann::json header = nlohmann::json::parse(header_bytes);
    header.at("config").get_to(ckpt.config);
    header.at("seed").get_to(ckpt.seed);
    header.at("epoch").get_to(ckpt.epoch);
    header.at("trial_f1").get_to(ckpt.trial_f1);
    ckpt.vocab_fingerprint =
        detail::parse_fingerprint_hex(header.at("vocab_fingerprint").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("checkpoint header invalid: ") + e.what());
  }
  ckpt.config.validate();

  ckpt.params = Parameters<float>::zeros(ckpt.config);
  const uint32_t count = detail::read_le<uint32_t>(in, "tensor count");
  uint32_t expected = 0;
  ckpt.params.for_each_tensor([&](const std::string&, const Mat<float>&) { ++expected; });
  if (count != expected) {
    throw Error("checkpoint has " + std::to_string(count) + " tensors, config implies " +
                std::to_string(expected));
  }
  ckpt.params.for_each_tensor([&](const std::string& name, Mat<float>& m) {
    const uint16_t name_len = detail::read_le<uint16_t>(in, "tensor name length");
    std::string stored(name_len, '\0');
    detail::read_bytes(in, stored.data(), name_len, "tensor name");
    if (stored != name) {
      throw Error("checkpoint tensor '" + stored + "' where '" + name + "' was expected");
    }
    const auto rows = detail::read_le<uint32_t>(in, "tensor rows");
    const auto cols = detail::read_le<uint32_t>(in, "tensor cols");
    if (rows != static_cast<uint32_t>(m.rows()) || cols != static_cast<uint32_t>(m.cols())) {
      throw Error("checkpoint tensor '" + name + "' is " + std::to_string(rows) + "x" +
                  std::to_string(cols) + ", config implies " + std::to_string(m.rows()) + "x" +
                  std::to_string(m.cols()));
    }
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = detail::read_f32le(in, "tensor data");
    }
  });
  return ckpt;
}

inline void save_checkpoint_file(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open checkpoint file for writing: " + path);
  save_checkpoint(out, ckpt);
  out.close();
  if (!out) throw Error("checkpoint write failed: " + path);
}

inline Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint file: " + path);
  return load_checkpoint(in);
}

}  // namespace toxspan
