#include "surgctx/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>

#include "surgctx/error.hpp"

namespace surgctx {

namespace {

bool has_extension(const std::filesystem::path& path, const char* ext) {
  std::string e = path.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e == ext;
}

Image read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw DataError("cannot read PNG " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, pixels.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw DataError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return Image(static_cast<int>(img.width), static_cast<int>(img.height), std::move(pixels));
}

void write_png(const std::filesystem::path& path, const Image& im) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(im.width());
  img.height = static_cast<png_uint_32>(im.height());
  img.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, im.pixels().data(), 0, nullptr)) {
    throw DataError("cannot write PNG " + path.string() + ": " + img.message);
  }
}

// Skips whitespace and '#' comments between PGM header tokens.
int read_pgm_int(std::istream& in) {
  while (true) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int v = -1;
  in >> v;
  if (!in) throw DataError("malformed PGM header");
  return v;
}

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P5") throw DataError(path.string() + ": only binary PGM (P5) is supported");
  const int w = read_pgm_int(in);
  const int h = read_pgm_int(in);
  const int maxval = read_pgm_int(in);
  if (maxval != 255) throw DataError(path.string() + ": PGM maxval must be 255");
  in.get();
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!in) throw DataError(path.string() + ": truncated PGM data");
  return Image(w, h, std::move(pixels));
}

void write_pgm(const std::filesystem::path& path, const Image& im) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P5\n" << im.width() << ' ' << im.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(im.pixels().data()),
            static_cast<std::streamsize>(im.pixels().size()));
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  if (has_extension(path, ".pgm")) return read_pgm(path);
  if (has_extension(path, ".png")) return read_png(path);
  throw DataError("unsupported image extension: " + path.string());
}

void write_image(const std::filesystem::path& path, const Image& img) {
  if (has_extension(path, ".pgm")) {
    write_pgm(path, img);
  } else if (has_extension(path, ".png")) {
    write_png(path, img);
  } else {
    throw DataError("unsupported image extension: " + path.string());
  }
}

BinaryMask read_mask(const std::filesystem::path& path) {
  const Image img = read_image(path);
  std::vector<std::uint8_t> bits(img.pixels().size());
  std::transform(img.pixels().begin(), img.pixels().end(), bits.begin(),
                 [](std::uint8_t v) { return static_cast<std::uint8_t>(v >= 128); });
  return BinaryMask(img.width(), img.height(), std::move(bits));
}

void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  std::vector<std::uint8_t> px(mask.bits().size());
  std::transform(mask.bits().begin(), mask.bits().end(), px.begin(),
                 [](std::uint8_t b) { return static_cast<std::uint8_t>(b ? 255 : 0); });
  write_image(path, Image(mask.width(), mask.height(), std::move(px)));
}

LabelFrame read_label_frame(const std::filesystem::path& path) {
  const Image img = read_image(path);
  return LabelFrame(img.width(), img.height(),
                    std::vector<std::uint8_t>(img.pixels().begin(), img.pixels().end()));
}

void write_label_frame(const std::filesystem::path& path, const LabelFrame& frame) {
  write_image(path, Image(frame.width(), frame.height(),
                          std::vector<std::uint8_t>(frame.labels().begin(), frame.labels().end())));
}

}  // namespace surgctx
