#pragma once

// 8-bit single-channel PNG and binary PGM (P5) I/O. The format is chosen by
// file extension (.png / .pgm). Colour PNGs are converted to gray on read.

#include <filesystem>

#include "surgctx/mask.hpp"

namespace surgctx {

Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& img);

// Masks are stored 0 = background, 255 = foreground; values >= 128 read as set.
BinaryMask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);

// Label frames store raw class indices 0-6.
LabelFrame read_label_frame(const std::filesystem::path& path);
void write_label_frame(const std::filesystem::path& path, const LabelFrame& frame);

}  // namespace surgctx
