#include "rsv/io.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rsv/error.hpp"

namespace rsv {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "float32 payloads assume a little-endian host");

fs::path sidecar_path(const fs::path& data_path) {
  fs::path p = data_path;
  p.replace_extension(".json");
  return p;
}

std::string sidecar_to_json(const Sidecar& s) {
  json j;
  j["height"] = s.height;
  j["width"] = s.width;
  j["resolution_m_per_px"] = s.meta.resolution_m_per_px;
  j["origin_row"] = s.meta.origin_row;
  j["origin_col"] = s.meta.origin_col;
  return j.dump() + "\n";
}

Sidecar sidecar_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("sidecar is not valid JSON: ") + e.what(), e.byte);
  }
  if (!j.is_object()) throw ValidationError("sidecar must be a JSON object");
  auto require = [&](const char* key) -> const json& {
    auto it = j.find(key);
    if (it == j.end()) throw ValidationError(std::string("sidecar missing field '") + key + "'");
    if (!it->is_number()) throw ValidationError(std::string("sidecar field '") + key + "' must be a number");
    return *it;
  };
  Sidecar s;
  s.height = require("height").get<int>();
  s.width = require("width").get<int>();
  if (j.contains("resolution_row_m_per_px") || j.contains("resolution_col_m_per_px")) {
    const double r = j.value("resolution_row_m_per_px", -1.0);
    const double c = j.value("resolution_col_m_per_px", -1.0);
    if (r != c) throw ValidationError("anisotropic resolution is not supported");
    s.meta.resolution_m_per_px = r;
  }
  if (j.contains("resolution_m_per_px")) s.meta.resolution_m_per_px = require("resolution_m_per_px").get<double>();
  if (j.contains("origin_row")) s.meta.origin_row = require("origin_row").get<std::int64_t>();
  if (j.contains("origin_col")) s.meta.origin_col = require("origin_col").get<std::int64_t>();
  if (s.height <= 0 || s.width <= 0) throw ValidationError("sidecar dimensions must be positive");
  s.meta.validate();
  return s;
}

Sidecar read_sidecar(const fs::path& json_path) {
  const auto bytes = read_file_bytes(json_path);
  return sidecar_from_json(std::string(bytes.begin(), bytes.end()));
}

void write_sidecar(const Sidecar& s, const fs::path& json_path) { write_text_atomic(json_path, sidecar_to_json(s)); }

// --- PNM ------------------------------------------------------------------

std::vector<std::uint8_t> encode_pnm(const Raster& r) {
  std::ostringstream head;
  head << (r.channels() == 3 ? "P6" : "P5") << "\n" << r.width() << " " << r.height() << "\n255\n";
  const std::string h = head.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  out.insert(out.end(), r.data().begin(), r.data().end());
  return out;
}

namespace {

class PnmHeaderReader {
 public:
  explicit PnmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = static_cast<char>(bytes_[pos_]);
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_int(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000'000L) throw ParseError(std::string("PNM ") + what + " is too large", start);
      ++pos_;
    }
    if (pos_ == start) throw ParseError(std::string("PNM header: expected ") + what, start);
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Raster decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw ParseError("unsupported magic number (expected P5 or P6)", 0);
  }
  const int channels = bytes[1] == '6' ? 3 : 1;
  PnmHeaderReader rd(bytes);
  rd.advance(2);
  const long width = rd.read_int("width");
  const long height = rd.read_int("height");
  const std::size_t maxval_at = rd.pos();
  const long maxval = rd.read_int("maxval");
  if (maxval != 255) throw ParseError("maxval must be 255, got " + std::to_string(maxval), maxval_at);
  if (width <= 0 || height <= 0) throw ParseError("PNM dimensions must be positive", maxval_at);
  if (rd.pos() >= bytes.size() || !std::isspace(bytes[rd.pos()])) {
    throw ParseError("expected single whitespace before pixel data", rd.pos());
  }
  rd.advance(1);
  const std::size_t need = static_cast<std::size_t>(width) * height * channels;
  const std::size_t have = bytes.size() - rd.pos();
  if (have < need) {
    throw ParseError("truncated pixel data: need " + std::to_string(need) + " bytes, have " + std::to_string(have),
                     bytes.size());
  }
  if (have > need) throw ParseError("trailing bytes after pixel data", rd.pos() + need);
  std::vector<std::uint8_t> data(bytes.begin() + static_cast<std::ptrdiff_t>(rd.pos()), bytes.end());
  return Raster(static_cast<int>(height), static_cast<int>(width), channels, std::move(data));
}

namespace {

GeoMeta load_meta_for(const fs::path& path, int height, int width, bool required) {
  const fs::path sc = sidecar_path(path);
  if (!fs::exists(sc)) {
    if (required) throw IoError("missing sidecar " + sc.string());
    return {};
  }
  const Sidecar s = read_sidecar(sc);
  if (s.height != height || s.width != width) {
    throw ValidationError("sidecar " + sc.string() + " dimensions " + std::to_string(s.height) + "x" +
                          std::to_string(s.width) + " do not match data " + std::to_string(height) + "x" +
                          std::to_string(width));
  }
  return s.meta;
}

}  // namespace

Raster read_raster(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  Raster r = decode_pnm(bytes);
  r.meta() = load_meta_for(path, r.height(), r.width(), false);
  return r;
}

void write_raster(const Raster& r, const fs::path& path) {
  write_file_atomic(path, encode_pnm(r));
  write_sidecar({r.height(), r.width(), r.meta()}, sidecar_path(path));
}

BinaryMask read_mask(const fs::path& path) {
  const Raster r = read_raster(path);
  if (r.channels() != 1) throw ValidationError("mask file must be single-channel (P5): " + path.string());
  BinaryMask m(r.height(), r.width(), false, r.meta());
  for (std::size_t i = 0; i < m.size(); ++i) m.bits()[i] = r.data()[i] ? 1 : 0;
  return m;
}

void write_mask(const BinaryMask& m, const fs::path& path) {
  std::vector<std::uint8_t> data(m.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = m.bits()[i] ? 255 : 0;
  write_raster(Raster(m.height(), m.width(), 1, std::move(data), m.meta()), path);
}

LabelMask read_label_mask(const fs::path& path) {
  const Raster r = read_raster(path);
  if (r.channels() != 1) throw ValidationError("label file must be single-channel (P5): " + path.string());
  return {r.height(), r.width(), r.data(), r.meta()};
}

void write_label_mask(const LabelMask& m, const fs::path& path) {
  write_raster(Raster(m.height, m.width, 1, m.labels, m.meta), path);
}

// --- float32 probability maps ---------------------------------------------

std::vector<std::uint8_t> encode_f32(const ProbMap& p) {
  std::vector<std::uint8_t> out(p.probs().size() * sizeof(float));
  std::memcpy(out.data(), p.probs().data(), out.size());
  return out;
}

ProbMap decode_f32(std::span<const std::uint8_t> bytes, const Sidecar& header) {
  const std::size_t need = static_cast<std::size_t>(header.height) * header.width * sizeof(float);
  if (bytes.size() != need) {
    throw ValidationError("float32 payload length " + std::to_string(bytes.size()) + " != " + std::to_string(need) +
                          " expected for " + std::to_string(header.height) + "x" + std::to_string(header.width));
  }
  std::vector<float> probs(static_cast<std::size_t>(header.height) * header.width);
  std::memcpy(probs.data(), bytes.data(), need);
  return ProbMap(header.height, header.width, std::move(probs), header.meta);
}

ProbMap read_prob_map(const fs::path& path) {
  const fs::path sc = sidecar_path(path);
  if (!fs::exists(sc)) throw IoError("missing sidecar " + sc.string());
  const Sidecar header = read_sidecar(sc);
  return decode_f32(read_file_bytes(path), header);
}

void write_prob_map(const ProbMap& p, const fs::path& path) {
  p.validate();
  write_file_atomic(path, encode_f32(p));
  write_sidecar({p.height(), p.width(), p.meta()}, sidecar_path(path));
}

// --- files ----------------------------------------------------------------

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  fs::path partial = path;
  partial += ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + partial.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + partial.string());
  }
  std::error_code ec;
  fs::rename(partial, path, ec);
  if (ec) throw IoError("cannot rename " + partial.string() + " -> " + path.string() + ": " + ec.message());
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace rsv
