#pragma once

// IDX (MNIST) binary format: 4-byte big-endian magic (0x00000803 images,
// 0x00000801 labels), big-endian dimension sizes, then raw unsigned bytes.
// Gzip-compressed files are detected by their 0x1f 0x8b prefix and inflated.

#include <string>
#include <vector>

#include "tfcsr/dataset.hpp"

namespace tfcsr {

// Pixels are scaled to [0,1] by dividing by 255; the image tensor gets a
// channel axis, shape [n, 1, rows, cols]. Throws std::runtime_error on a bad
// magic, a truncated payload or an image/label count mismatch.
LabeledDataset parse_idx(const std::vector<unsigned char>& image_bytes,
                         const std::vector<unsigned char>& label_bytes, int class_count = 10);

// Reads the two files (gunzipping if needed) and parses them.
LabeledDataset load_idx_dataset(const std::string& image_path, const std::string& label_path,
                                int class_count = 10);

// Inverse of parse_idx for fixture writing; pixels are encoded as
// round(value * 255).
std::vector<unsigned char> encode_idx_images(const LabeledDataset& dataset);
std::vector<unsigned char> encode_idx_labels(const LabeledDataset& dataset);

bool is_gzip(const std::vector<unsigned char>& bytes);
std::vector<unsigned char> gunzip(const std::vector<unsigned char>& bytes);

std::vector<unsigned char> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<unsigned char>& bytes);

}  // namespace tfcsr
