#include "cubesort/tensornet/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace cubesort::nn {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'N', 'N'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool done() const noexcept { return pos_ == bytes_.size(); }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::BadWeights, std::string("truncated ") + what);
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_weights(std::span<const NamedTensor> tensors) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kWeightsVersion);
  for (const NamedTensor& t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put_u32(out, static_cast<std::uint32_t>(t.value.rank()));
    for (std::size_t e : t.value.shape()) put_u32(out, static_cast<std::uint32_t>(e));
    for (float f : t.value.data()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

std::vector<NamedTensor> decode_weights(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::BadWeights, "missing CSNN magic");
  }
  Reader in(bytes.subspan(4));
  const std::uint32_t version = in.u32("version");
  if (version != kWeightsVersion) {
    throw Error(ErrorCode::BadWeights, "unsupported version " + std::to_string(version));
  }
  std::vector<NamedTensor> tensors;
  while (!in.done()) {
    const std::uint32_t name_len = in.u32("name length");
    const auto name = in.take(name_len, "name");
    const std::uint32_t rank = in.u32("rank");
    if (rank > 8) throw Error(ErrorCode::BadWeights, "implausible rank " + std::to_string(rank));
    Shape shape;
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::uint32_t e = in.u32("extent");
      if (e == 0) throw Error(ErrorCode::BadWeights, "zero extent");
      count *= e;
      if (count > (std::uint64_t{1} << 32)) throw Error(ErrorCode::BadWeights, "tensor too large");
      shape.push_back(e);
    }
    const auto raw = in.take(static_cast<std::size_t>(count) * 4, "tensor data");
    std::vector<float> data(static_cast<std::size_t>(count));
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::uint32_t v = 0;
      for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(raw[4 * i + b]) << (8 * b);
      data[i] = std::bit_cast<float>(v);
    }
    tensors.push_back({std::string(name.begin(), name.end()), Tensor(std::move(shape), std::move(data))});
  }
  return tensors;
}

void write_weights_file(const std::string& path, std::span<const NamedTensor> tensors) {
  const auto bytes = encode_weights(tensors);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

std::vector<NamedTensor> read_weights_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

}  // namespace cubesort::nn
