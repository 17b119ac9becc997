#include "ssgn/checkpoint.hpp"

#include <bit>
#include <fstream>

#include "ssgn/error.hpp"

namespace ssgn {

namespace {

constexpr char kMagic[4] = {'S', 'S', 'G', 'N'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<uint64_t>(v)); }

void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  Reader(std::string data) : data_(std::move(data)) {}

  uint8_t u8() {
    need(1);
    return byte();
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(byte()) << (8 * i);
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(byte()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const uint32_t len = u32();
    need(len);
    std::string s = data_.substr(pos_, len);
    pos_ += len;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  uint8_t byte() { return static_cast<uint8_t>(data_[pos_++]); }
  void need(size_t n) {
    if (pos_ + n > data_.size()) throw DataError("checkpoint: truncated file");
  }
  std::string data_;
  size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u64(out, static_cast<uint64_t>(ckpt.step));
  put_str(out, ckpt.config_text);
  put_u32(out, static_cast<uint32_t>(ckpt.vocab_words.size()));
  for (const auto& w : ckpt.vocab_words) put_str(out, w);
  put_u32(out, static_cast<uint32_t>(ckpt.params.size()));
  for (const auto& [name, t] : ckpt.params) {
    put_str(out, name);
    put_u32(out, static_cast<uint32_t>(t->rows));
    put_u32(out, static_cast<uint32_t>(t->cols));
    for (double v : t->values) put_f64(out, v);
  }
  out.push_back(ckpt.has_adam ? 1 : 0);
  if (ckpt.has_adam) {
    put_u64(out, static_cast<uint64_t>(ckpt.adam_step));
    for (const auto& [name, t] : ckpt.params) {
      auto it = ckpt.adam_moments.find(name);
      if (it == ckpt.adam_moments.end() || it->second.m.size() != t->size()) {
        throw DataError("checkpoint: optimizer moments missing for " + name);
      }
      for (double v : it->second.m) put_f64(out, v);
      for (double v : it->second.v) put_f64(out, v);
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("checkpoint: cannot open " + path + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (data.size() < 8 || data.compare(0, 4, kMagic, 4) != 0) {
    throw DataError("checkpoint: bad magic in " + path);
  }
  Reader r(data.substr(4));
  const uint32_t version = r.u32();
  if (version != kVersion) {
    throw DataError("checkpoint: unsupported format version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.step = static_cast<long long>(r.u64());
  ckpt.config_text = r.str();
  const uint32_t vocab_count = r.u32();
  ckpt.vocab_words.reserve(vocab_count);
  for (uint32_t i = 0; i < vocab_count; ++i) ckpt.vocab_words.push_back(r.str());
  const uint32_t param_count = r.u32();
  std::vector<std::string> order;
  order.reserve(param_count);
  for (uint32_t i = 0; i < param_count; ++i) {
    const std::string name = r.str();
    const int rows = static_cast<int>(r.u32());
    const int cols = static_cast<int>(r.u32());
    auto t = make_tensor(rows, cols, true);
    for (double& v : t->values) v = r.f64();
    ckpt.params[name] = t;
    order.push_back(name);
  }
  ckpt.has_adam = r.u8() != 0;
  if (ckpt.has_adam) {
    ckpt.adam_step = static_cast<long long>(r.u64());
    for (const std::string& name : order) {
      Adam::Moments mom;
      const size_t n = ckpt.params[name]->size();
      mom.m.resize(n);
      mom.v.resize(n);
      for (double& v : mom.m) v = r.f64();
      for (double& v : mom.v) v = r.f64();
      ckpt.adam_moments[name] = std::move(mom);
    }
  }
  if (!r.done()) throw DataError("checkpoint: trailing bytes in " + path);
  return ckpt;
}

}  // namespace ssgn
