#include "fashioncut/image.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fashioncut {

namespace {

uint32_t crc_table_entry(uint32_t n) {
  uint32_t c = n;
  for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
  return c;
}

uint32_t png_crc(const uint8_t* buf, size_t len, uint32_t crc = 0xffffffffu) {
  static uint32_t table[256];
  static bool made = [] {
    for (uint32_t n = 0; n < 256; ++n) table[n] = crc_table_entry(n);
    return true;
  }();
  (void)made;
  for (size_t i = 0; i < len; ++i) crc = table[(crc ^ buf[i]) & 0xff] ^ (crc >> 8);
  return crc;
}

void put_be32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

uint32_t get_be32(const uint8_t* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

void append_chunk(std::vector<uint8_t>& out, const char type[4], const uint8_t* data, size_t len) {
  put_be32(out, static_cast<uint32_t>(len));
  size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  if (len) out.insert(out.end(), data, data + len);
  uint32_t crc = png_crc(out.data() + start, out.size() - start) ^ 0xffffffffu;
  put_be32(out, crc);
}

const uint8_t kSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

std::vector<uint8_t> zlib_compress(const std::vector<uint8_t>& raw) {
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> out(bound);
  if (compress2(out.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw std::runtime_error("png: zlib compression failed");
  out.resize(bound);
  return out;
}

std::vector<uint8_t> zlib_uncompress(const std::vector<uint8_t>& comp, size_t expected) {
  std::vector<uint8_t> out(expected);
  uLongf out_len = static_cast<uLongf>(expected);
  int rc = uncompress(out.data(), &out_len, comp.data(), static_cast<uLong>(comp.size()));
  if (rc != Z_OK || out_len != expected)
    throw std::runtime_error("png: zlib decompression failed");
  return out;
}

uint8_t paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return static_cast<uint8_t>(a);
  if (pb <= pc) return static_cast<uint8_t>(b);
  return static_cast<uint8_t>(c);
}

}  // namespace

std::vector<uint8_t> encode_png(const ImageU8& img) {
  if (img.height <= 0 || img.width <= 0 ||
      img.pixels.size() != static_cast<size_t>(img.height) * img.width * 3)
    throw std::invalid_argument("png: bad image dimensions");

  std::vector<uint8_t> out(kSignature, kSignature + 8);

  uint8_t ihdr[13];
  ihdr[0] = static_cast<uint8_t>(img.width >> 24);
  ihdr[1] = static_cast<uint8_t>(img.width >> 16);
  ihdr[2] = static_cast<uint8_t>(img.width >> 8);
  ihdr[3] = static_cast<uint8_t>(img.width);
  ihdr[4] = static_cast<uint8_t>(img.height >> 24);
  ihdr[5] = static_cast<uint8_t>(img.height >> 16);
  ihdr[6] = static_cast<uint8_t>(img.height >> 8);
  ihdr[7] = static_cast<uint8_t>(img.height);
  ihdr[8] = 8;   // bit depth
  ihdr[9] = 2;   // color type: truecolor
  ihdr[10] = 0;  // compression
  ihdr[11] = 0;  // filter
  ihdr[12] = 0;  // interlace
  append_chunk(out, "IHDR", ihdr, sizeof(ihdr));

  // filter type 0 per scanline
  const size_t stride = static_cast<size_t>(img.width) * 3;
  std::vector<uint8_t> raw;
  raw.reserve((stride + 1) * img.height);
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);
    const uint8_t* row = img.pixels.data() + y * stride;
    raw.insert(raw.end(), row, row + stride);
  }
  std::vector<uint8_t> idat = zlib_compress(raw);
  append_chunk(out, "IDAT", idat.data(), idat.size());
  append_chunk(out, "IEND", nullptr, 0);
  return out;
}

ImageU8 decode_png(const uint8_t* data, size_t size) {
  if (size < 8 || std::memcmp(data, kSignature, 8) != 0)
    throw std::runtime_error("png: bad signature");
  size_t pos = 8;
  int width = 0, height = 0;
  bool have_ihdr = false;
  std::vector<uint8_t> idat;
  while (pos + 12 <= size) {
    uint32_t len = get_be32(data + pos);
    if (pos + 12 + len > size) throw std::runtime_error("png: truncated chunk");
    const char* type = reinterpret_cast<const char*>(data + pos + 4);
    const uint8_t* payload = data + pos + 8;
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw std::runtime_error("png: bad IHDR");
      width = static_cast<int>(get_be32(payload));
      height = static_cast<int>(get_be32(payload + 4));
      if (payload[8] != 8 || payload[9] != 2 || payload[12] != 0)
        throw std::runtime_error("png: only 8-bit non-interlaced RGB supported");
      have_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    pos += 12 + len;
  }
  if (!have_ihdr || width <= 0 || height <= 0) throw std::runtime_error("png: missing IHDR");

  const size_t stride = static_cast<size_t>(width) * 3;
  std::vector<uint8_t> raw = zlib_uncompress(idat, (stride + 1) * height);

  ImageU8 img(height, width);
  std::vector<uint8_t> prev(stride, 0);
  for (int y = 0; y < height; ++y) {
    const uint8_t* src = raw.data() + y * (stride + 1);
    uint8_t filter = src[0];
    ++src;
    uint8_t* dst = img.pixels.data() + y * stride;
    switch (filter) {
      case 0:
        std::memcpy(dst, src, stride);
        break;
      case 1:
        for (size_t i = 0; i < stride; ++i)
          dst[i] = static_cast<uint8_t>(src[i] + (i >= 3 ? dst[i - 3] : 0));
        break;
      case 2:
        for (size_t i = 0; i < stride; ++i) dst[i] = static_cast<uint8_t>(src[i] + prev[i]);
        break;
      case 3:
        for (size_t i = 0; i < stride; ++i)
          dst[i] = static_cast<uint8_t>(src[i] + ((i >= 3 ? dst[i - 3] : 0) + prev[i]) / 2);
        break;
      case 4:
        for (size_t i = 0; i < stride; ++i)
          dst[i] = static_cast<uint8_t>(src[i] +
                                        paeth(i >= 3 ? dst[i - 3] : 0, prev[i], i >= 3 ? prev[i - 3] : 0));
        break;
      default:
        throw std::runtime_error("png: unsupported filter type");
    }
    std::memcpy(prev.data(), dst, stride);
  }
  return img;
}

void write_png(const std::string& path, const ImageU8& img) {
  std::vector<uint8_t> bytes = encode_png(img);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("png: cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("png: write failed: " + path);
}

ImageU8 read_png(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("png: cannot open: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_png(bytes.data(), bytes.size());
}

}  // namespace fashioncut
