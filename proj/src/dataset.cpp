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

#include "gnt/dataset.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

namespace gnt {

std::uint64_t derive_seed(std::uint64_t seed, const std::string& stream) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : stream) {
    h ^= c;
    h *= 1099511628211ull;
  }
  // splitmix64 finalizer over the combination.
  std::uint64_t z = seed ^ (h + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

namespace mail_nail {
const char* word(int token) {
  switch (token) {
    case kMail: return "mail";
    case kNail: return "nail";
    case kOrder: return "order";
    case kPolish: return "polish";
    default: return "?";
  }
}
}  // namespace mail_nail

Dataset make_mail_nail_dataset(double ambiguity, int copies, std::uint64_t seed) {
  using namespace mail_nail;
  if (!(ambiguity >= 0.0 && ambiguity <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "ambiguity outside [0, 1]");
  }
  std::mt19937_64 rng(derive_seed(seed, "dataset"));
  std::uniform_real_distribution<double> noise(-0.3, 0.3);
  const int D = kFeatureDim;
  const int T = 2 * kChunkFrames;

  auto draw = [&](int rows) {
    Matrix m(rows, D);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = noise(rng);
    return m;
  };
  // First-chunk class offsets live on dim 0, second-chunk identities on
  // dims 1..2.
  Eigen::RowVectorXd first_offset(D), order_proto(D), polish_proto(D);
  first_offset << 1.0, 0.0, 0.0, 0.0;
  order_proto << 0.0, 1.0, 1.0, 0.0;
  polish_proto << 0.0, -1.0, -1.0, 0.0;
  const double separation = 1.0 - ambiguity;

  Dataset out;
  out.reserve(static_cast<std::size_t>(2 * copies));
  char id[32];
  for (int i = 0; i < copies; ++i) {
    const Matrix shared = draw(kChunkFrames);
    for (int cls = 0; cls < 2; ++cls) {
      const bool mail = cls == 0;
      Utterance u;
      std::snprintf(id, sizeof(id), "%s-%04d", mail ? "mail" : "nail", i);
      u.id = id;
      u.features.resize(T, D);
      const double sign = mail ? 1.0 : -1.0;
      u.features.topRows(kChunkFrames) =
          shared.rowwise() + (sign * separation) * first_offset;
      Matrix second = draw(kChunkFrames);
      second.rowwise() += mail ? order_proto : polish_proto;
      u.features.bottomRows(kChunkFrames) = second;
      u.tokens = mail ? TokenSequence{kMail, kOrder} : TokenSequence{kNail, kPolish};
      u.deadlines = {kChunkFrames - 1};
      out.push_back(std::move(u));
    }
  }
  return out;
}

Matrix synthetic_token_embeddings(const SyntheticSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, "embeddings"));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Matrix e(spec.vocab + 1, spec.feature_dim);
  for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = unit(rng);
  return e;
}

Dataset make_synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.vocab < 2) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic task needs K >= 2");
  }
  if (spec.min_tokens < 0 || spec.max_tokens < spec.min_tokens ||
      spec.frames_per_token < 1 || spec.noise < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "bad synthetic dataset spec");
  }
  const Matrix embed = synthetic_token_embeddings(spec, seed);
  std::mt19937_64 rng(derive_seed(seed, "dataset"));
  std::uniform_int_distribution<int> length(spec.min_tokens, spec.max_tokens);
  std::uniform_int_distribution<int> token(1, spec.vocab);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);

  Dataset out;
  out.reserve(static_cast<std::size_t>(spec.count));
  char id[32];
  for (int i = 0; i < spec.count; ++i) {
    Utterance u;
    std::snprintf(id, sizeof(id), "syn-%05d", i);
    u.id = id;
    const int U = length(rng);
    for (int k = 0; k < U; ++k) u.tokens.push_back(token(rng));
    u.features.resize(U * spec.frames_per_token, spec.feature_dim);
    for (int k = 0; k < U; ++k) {
      for (int f = 0; f < spec.frames_per_token; ++f) {
        auto row = u.features.row(k * spec.frames_per_token + f);
        row = embed.row(u.tokens[static_cast<std::size_t>(k)]);
        if (spec.noise > 0.0) {
          for (Eigen::Index d = 0; d < row.size(); ++d) {
            row(d) += spec.noise * noise(rng);
          }
        }
      }
    }
    out.push_back(std::move(u));
  }
  return out;
}

Split split_dataset(const Dataset& data, int stride) {
  if (stride < 2) {
    throw Error(ErrorCode::kInvalidArgument, "split stride must be >= 2");
  }
  Split s;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (i % static_cast<std::size_t>(stride) == 0 ? s.held_out : s.train)
        .push_back(data[i]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Container IO

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class ByteReader {
 public:
  ByteReader(const std::string& bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

  std::uint64_t get(int width) {
    if (pos_ + static_cast<std::size_t>(width) > bytes_.size()) {
      throw Error(ErrorCode::kParse, "dataset file is truncated");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string str(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw Error(ErrorCode::kParse, "dataset file is truncated");
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_;
};

}  // namespace

void save_dataset(const Dataset& data, const std::string& path) {
  const int dim = data.empty() ? 0 : static_cast<int>(data.front().features.cols());
  std::string out = "GNTDATA 1 " + std::to_string(data.size()) + " " +
                    std::to_string(dim) + "\n";
  for (const Utterance& u : data) {
    if (u.frames() > 0 && u.features.cols() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "mixed feature dims in dataset");
    }
    put_u32(out, static_cast<std::uint32_t>(u.id.size()));
    out += u.id;
    put_u32(out, static_cast<std::uint32_t>(u.frames()));
    put_u32(out, static_cast<std::uint32_t>(u.tokens.size()));
    put_u32(out, static_cast<std::uint32_t>(u.deadlines.size()));
    for (int t : u.tokens) put_u32(out, static_cast<std::uint32_t>(t));
    for (int d : u.deadlines) put_u32(out, static_cast<std::uint32_t>(d));
    for (Eigen::Index r = 0; r < u.features.rows(); ++r) {
      for (Eigen::Index c = 0; c < u.features.cols(); ++c) put_f64(out, u.features(r, c));
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIo, "cannot write dataset " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

Dataset load_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open dataset " + path);
  const std::string bytes((std::istreambuf_iterator<char>(f)),
                          std::istreambuf_iterator<char>());
  const auto eol = bytes.find('\n');
  if (eol == std::string::npos) throw Error(ErrorCode::kParse, path + ": missing header");
  std::istringstream header(bytes.substr(0, eol));
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  int dim = 0;
  if (!(header >> magic >> version >> count >> dim) || magic != "GNTDATA") {
    throw Error(ErrorCode::kParse, path + ": bad dataset header");
  }
  if (version != 1) {
    throw Error(ErrorCode::kParse, path + ": unsupported dataset version");
  }
  ByteReader in(bytes, eol + 1);
  Dataset data;
  data.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Utterance u;
    u.id = in.str(in.u32());
    const auto frames = in.u32();
    const auto tokens = in.u32();
    const auto deadlines = in.u32();
    for (std::uint32_t k = 0; k < tokens; ++k) u.tokens.push_back(in.i32());
    for (std::uint32_t k = 0; k < deadlines; ++k) u.deadlines.push_back(in.i32());
    u.features.resize(frames, dim);
    for (Eigen::Index r = 0; r < u.features.rows(); ++r) {
      for (Eigen::Index c = 0; c < u.features.cols(); ++c) u.features(r, c) = in.f64();
    }
    data.push_back(std::move(u));
  }
  if (!in.done()) throw Error(ErrorCode::kParse, path + ": trailing bytes");
  return data;
}

}  // namespace gnt
