#include "signrec/cues/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "signrec/errors.hpp"

namespace signrec::cues {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::string encode_pgm(const BinaryImage& img) {
  const std::string side = std::to_string(img.side());
  std::string out = "P5\n" + side + " " + side + "\n255\n";
  out.reserve(out.size() + img.bits().size());
  for (auto b : img.bits()) out.push_back(b ? static_cast<char>(255) : '\0');
  return out;
}

BinaryImage decode_pgm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (!in || magic != "P5") throw SchemaError("not a binary PGM (P5) image");
  if (w != h || w == 0) throw SchemaError("PGM must be square, got " + std::to_string(w) + "x" + std::to_string(h));
  if (maxval != 255) throw SchemaError("PGM maxval must be 255");
  in.get();  // single whitespace before the raster
  const auto offset = static_cast<std::size_t>(in.tellg());
  if (bytes.size() != offset + w * h) throw SchemaError("PGM raster has the wrong length");
  BinaryImage img(w);
  for (std::size_t i = 0; i < w * h; ++i) {
    const auto v = static_cast<unsigned char>(bytes[offset + i]);
    if (v == 255) {
      img.set(i % w, i / w);
    } else if (v != 0) {
      throw SchemaError("PGM pixel value " + std::to_string(v) + " is not 0 or 255");
    }
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const BinaryImage& img) { write_file(path, encode_pgm(img)); }

BinaryImage read_pgm(const std::filesystem::path& path) {
  try {
    return decode_pgm(read_file(path));
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  const char* take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw SchemaError("cue cache is truncated");
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() {
    const auto* p = reinterpret_cast<const unsigned char*>(take(4));
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_cues(const CueSequences& cues) {
  const std::size_t T = cues.frames(), S = cues.side();
  std::string out = "CUES";
  put_u32(out, kCueCacheVersion);
  put_u32(out, static_cast<std::uint32_t>(T));
  put_u32(out, static_cast<std::uint32_t>(S));
  for (const HandCues* h : {&cues.left, &cues.right}) {
    for (float v : h->images.data()) out.push_back(v != 0.0f ? '\1' : '\0');
    for (float v : h->displacement.data()) put_f32(out, v);
    for (float v : h->location.data()) put_f32(out, v);
  }
  return out;
}

CueSequences decode_cues(const std::string& bytes) {
  Reader r(bytes);
  if (std::memcmp(r.take(4), "CUES", 4) != 0) throw SchemaError("not a cue cache (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCueCacheVersion) {
    throw SchemaError("cue cache version " + std::to_string(version) + " is not supported");
  }
  const std::size_t T = r.u32(), S = r.u32();
  if (T == 0 || S == 0) throw SchemaError("cue cache has zero extent");
  CueSequences cues;
  for (HandCues* h : {&cues.left, &cues.right}) {
    h->images = nn::Tensor<float>({T, 1, S, S});
    const char* raw = r.take(T * S * S);
    for (std::size_t i = 0; i < T * S * S; ++i) {
      if (raw[i] != 0 && raw[i] != 1) throw SchemaError("cue cache image byte is not 0/1");
      h->images[i] = static_cast<float>(raw[i]);
    }
    h->displacement = nn::Tensor<float>({T, 2});
    for (auto& v : h->displacement.data()) v = r.f32();
    h->location = nn::Tensor<float>({T, 3});
    for (auto& v : h->location.data()) v = r.f32();
  }
  if (!r.done()) throw SchemaError("cue cache has trailing bytes");
  return cues;
}

void save_cues(const std::filesystem::path& path, const CueSequences& cues) {
  write_file(path, encode_cues(cues));
}

CueSequences load_cues(const std::filesystem::path& path) {
  try {
    return decode_cues(read_file(path));
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

}  // namespace signrec::cues
