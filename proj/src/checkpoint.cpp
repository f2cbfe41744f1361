// Copyright 2026  The gnt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Checkpoint layout, all integers and floats little-endian:
//
//   bytes 0..7    magic "GNTCKPT\0"
//   u32           format version (1)
//   u32           number of header integers H (10)
//   i64 x H       feature_dim context encoder_hidden model_dim embed_dim
//                 joiner_dim vocab predictor_kind history_order value_count
//   f64           interpolation weight alpha
//   f64 x value_count   tensors in tensors() order, each row-major

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gnt/model.hpp"

namespace gnt {

namespace {

constexpr std::array<char, 8> kMagic = {'G', 'N', 'T', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint32_t kHeaderInts = 10;

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    if (pos_ + sizeof(U) > bytes_.size()) {
      throw Error(ErrorCode::kCheckpointTruncated, "checkpoint is truncated");
    }
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      bits |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i]))
              << (8 * i);
    }
    pos_ += sizeof(U);
    return std::bit_cast<T>(bits);
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }
  void skip(std::size_t n) { pos_ += n; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path,
                     double alpha) {
  const ModelConfig& c = params.config;
  std::string out(kMagic.begin(), kMagic.end());
  put_le(out, kFormatVersion);
  put_le(out, kHeaderInts);
  for (std::int64_t v :
       {std::int64_t{c.feature_dim}, std::int64_t{c.context},
        std::int64_t{c.encoder_hidden}, std::int64_t{c.model_dim},
        std::int64_t{c.embed_dim}, std::int64_t{c.joiner_dim},
        std::int64_t{c.vocab}, static_cast<std::int64_t>(c.predictor),
        std::int64_t{c.history_order},
        static_cast<std::int64_t>(params.num_values())}) {
    put_le(out, v);
  }
  put_le(out, alpha);
  for (const auto& t : tensors(params)) {
    const Matrix& m = *t.value;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index k = 0; k < m.cols(); ++k) put_le(out, m(r, k));
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIo, "cannot write checkpoint " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorCode::kIo, "short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open checkpoint " + path);
  const std::string bytes((std::istreambuf_iterator<char>(f)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() < kMagic.size() + 8 ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw Error(ErrorCode::kCheckpointVersion,
                path + ": not a checkpoint (bad magic)");
  }
  Reader in(bytes);
  in.skip(kMagic.size());
  const auto version = in.get<std::uint32_t>();
  if (version != kFormatVersion) {
    throw Error(ErrorCode::kCheckpointVersion,
                path + ": unsupported checkpoint version " +
                    std::to_string(version));
  }
  if (in.get<std::uint32_t>() != kHeaderInts) {
    throw Error(ErrorCode::kCheckpointHeader, path + ": bad header length");
  }
  std::array<std::int64_t, kHeaderInts> h{};
  for (auto& v : h) v = in.get<std::int64_t>();

  ModelConfig c;
  c.feature_dim = static_cast<int>(h[0]);
  c.context = static_cast<int>(h[1]);
  c.encoder_hidden = static_cast<int>(h[2]);
  c.model_dim = static_cast<int>(h[3]);
  c.embed_dim = static_cast<int>(h[4]);
  c.joiner_dim = static_cast<int>(h[5]);
  c.vocab = static_cast<int>(h[6]);
  if (h[7] != 0 && h[7] != 1) {
    throw Error(ErrorCode::kCheckpointHeader, path + ": bad predictor kind");
  }
  c.predictor = static_cast<PredictorKind>(h[7]);
  c.history_order = static_cast<int>(h[8]);

  Checkpoint ck;
  try {
    ck.params = ModelParams::zeros(c);
  } catch (const Error& e) {
    throw Error(ErrorCode::kCheckpointHeader, path + ": " + e.what());
  }
  ck.alpha = in.get<double>();
  const auto expected = static_cast<std::int64_t>(ck.params.num_values());
  if (h[9] != expected) {
    throw Error(ErrorCode::kCheckpointHeader,
                path + ": header dimensions imply " + std::to_string(expected) +
                    " values but header declares " + std::to_string(h[9]));
  }
  const auto payload = static_cast<std::size_t>(expected) * 8;
  if (in.remaining() < payload) {
    throw Error(ErrorCode::kCheckpointTruncated,
                path + ": payload shorter than header declares");
  }
  if (in.remaining() > payload) {
    throw Error(ErrorCode::kCheckpointHeader,
                path + ": payload longer than header declares");
  }
  for (auto& t : tensors(ck.params)) {
    Matrix& m = *t.value;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index k = 0; k < m.cols(); ++k) m(r, k) = in.get<double>();
    }
  }
  return ck;
}

}  // namespace gnt
