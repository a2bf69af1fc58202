#pragma once

#include <iosfwd>
#include <string>

#include "fedia/grid.hpp"
#include "fedia/model.hpp"

namespace fedia {

// Volume container: magic "FIAV", version u16, depth/height/width u32,
// channel count u32 (always 1 here), then a row-major payload of either
// f32 intensities or u8 mask bytes. All integers little-endian. The
// payload kind is chosen by the writer; readers state which they expect.
void write_image_fiav(std::ostream& out, const Image3& image);
Image3 read_image_fiav(std::istream& in);
void write_mask_fiav(std::ostream& out, const Mask3& mask);
Mask3 read_mask_fiav(std::istream& in);

void write_image_fiav(const std::string& path, const Image3& image);
Image3 read_image_fiav(const std::string& path);
void write_mask_fiav(const std::string& path, const Mask3& mask);
Mask3 read_mask_fiav(const std::string& path);

// Parameter checkpoint: magic "FIAP", version u16, length u64, f64
// little-endian payload.
void write_params_fiap(std::ostream& out, const ModelParams& params);
ModelParams read_params_fiap(std::istream& in);
void write_params_fiap(const std::string& path, const ModelParams& params);
ModelParams read_params_fiap(const std::string& path);

// Human-readable mask dump: one block of '0'/'1' rows per slice, blank
// line between slices.
std::string mask_to_text(const Mask3& mask);

}  // namespace fedia
