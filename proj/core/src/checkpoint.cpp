#include "astgan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace astgan {

namespace {

static_assert(std::numeric_limits<float>::is_iec559);

template <class U>
void put(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <class U>
  U get(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return v;
  }

  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(CheckpointError::Kind::Truncated,
                            std::string("checkpoint truncated while reading ") + what);
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out = "GANC";
  put<std::uint32_t>(out, ckpt.version);
  put<std::uint64_t>(out, ckpt.grammar_hash);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.echo.size()));
  out += ckpt.echo;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const auto& e : ckpt.entries) {
    if (e.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw CheckpointError(CheckpointError::Kind::Malformed, "parameter name too long: " + e.name);
    }
    if (numel(e.shape) != e.data.size()) {
      throw CheckpointError(CheckpointError::Kind::Malformed, "shape/data mismatch for " + e.name);
    }
    put<std::uint16_t>(out, static_cast<std::uint16_t>(e.name.size()));
    out += e.name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(e.shape.size()));
    for (std::size_t d : e.shape) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (float f : e.data) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "GANC") != 0) {
    throw CheckpointError(CheckpointError::Kind::BadMagic, "not a checkpoint (bad magic)");
  }
  Reader r(bytes);
  r.bytes(4, "magic");
  Checkpoint ckpt;
  ckpt.version = r.get<std::uint32_t>("version");
  if (ckpt.version != kCheckpointVersion) {
    throw CheckpointError(CheckpointError::Kind::VersionMismatch,
                          "checkpoint version " + std::to_string(ckpt.version) + ", expected " +
                              std::to_string(kCheckpointVersion));
  }
  ckpt.grammar_hash = r.get<std::uint64_t>("grammar hash");
  const auto echo_len = r.get<std::uint32_t>("echo length");
  ckpt.echo = r.bytes(echo_len, "config echo");
  const auto count = r.get<std::uint32_t>("entry count");
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    const auto name_len = r.get<std::uint16_t>("entry name length");
    e.name = r.bytes(name_len, "entry name");
    const auto rank = r.get<std::uint8_t>("entry rank");
    for (std::uint8_t d = 0; d < rank; ++d) e.shape.push_back(r.get<std::uint32_t>("entry dims"));
    const std::size_t n = numel(e.shape);
    e.data.reserve(n);
    for (std::size_t k = 0; k < n; ++k) e.data.push_back(std::bit_cast<float>(r.get<std::uint32_t>("entry data")));
    ckpt.entries.push_back(std::move(e));
  }
  if (!r.at_end()) throw CheckpointError(CheckpointError::Kind::Malformed, "trailing bytes after last entry");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointError::Kind::Io, "cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointError::Kind::Io, "failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<std::uint64_t> expected_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::Io, "cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  Checkpoint ckpt = deserialize_checkpoint(ss.str());
  if (expected_hash && *expected_hash != ckpt.grammar_hash) {
    throw CheckpointError(CheckpointError::Kind::HashMismatch,
                          "checkpoint was trained on a different grammar (hash mismatch)");
  }
  return ckpt;
}

}  // namespace astgan
