#include "tfcsr/idx.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace tfcsr {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset) {
    if (offset + 4 > bytes.size())
        throw std::runtime_error("idx: truncated header");
    return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
           (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
           (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
           static_cast<std::uint32_t>(bytes[offset + 3]);
}

void write_be32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v >> 24));
    out.push_back(static_cast<unsigned char>(v >> 16));
    out.push_back(static_cast<unsigned char>(v >> 8));
    out.push_back(static_cast<unsigned char>(v));
}

}  // namespace

LabeledDataset parse_idx(const std::vector<unsigned char>& image_bytes,
                         const std::vector<unsigned char>& label_bytes, int class_count) {
    if (read_be32(image_bytes, 0) != kImageMagic)
        throw std::runtime_error("idx: bad image magic (expected 0x00000803)");
    if (read_be32(label_bytes, 0) != kLabelMagic)
        throw std::runtime_error("idx: bad label magic (expected 0x00000801)");

    const std::size_t n = read_be32(image_bytes, 4);
    const std::size_t rows = read_be32(image_bytes, 8);
    const std::size_t cols = read_be32(image_bytes, 12);
    if (image_bytes.size() != 16 + n * rows * cols)
        throw std::runtime_error("idx: image payload length mismatch");

    const std::size_t label_n = read_be32(label_bytes, 4);
    if (label_bytes.size() != 8 + label_n)
        throw std::runtime_error("idx: label payload length mismatch");
    if (label_n != n)
        throw std::runtime_error("idx: image count does not match label count");

    Tensor inputs = Tensor::zeros({n, 1, rows, cols});
    const std::size_t pixels = n * rows * cols;
    for (std::size_t i = 0; i < pixels; ++i)
        inputs.data[i] = static_cast<double>(image_bytes[16 + i]) / 255.0;

    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(label_bytes[8 + i]);
    return make_dataset(std::move(inputs), std::move(labels), class_count);
}

std::vector<unsigned char> encode_idx_images(const LabeledDataset& dataset) {
    if (dataset.inputs.rank() != 4 || dataset.inputs.dim(1) != 1)
        throw std::invalid_argument("encode_idx_images: expects [n,1,rows,cols] inputs");
    std::vector<unsigned char> out;
    write_be32(out, kImageMagic);
    write_be32(out, static_cast<std::uint32_t>(dataset.inputs.dim(0)));
    write_be32(out, static_cast<std::uint32_t>(dataset.inputs.dim(2)));
    write_be32(out, static_cast<std::uint32_t>(dataset.inputs.dim(3)));
    out.reserve(out.size() + dataset.inputs.numel());
    for (double v : dataset.inputs.data) {
        const double scaled = std::lround(v * 255.0);
        out.push_back(static_cast<unsigned char>(std::min(255.0, std::max(0.0, scaled))));
    }
    return out;
}

std::vector<unsigned char> encode_idx_labels(const LabeledDataset& dataset) {
    std::vector<unsigned char> out;
    write_be32(out, kLabelMagic);
    write_be32(out, static_cast<std::uint32_t>(dataset.labels.size()));
    for (int l : dataset.labels) out.push_back(static_cast<unsigned char>(l));
    return out;
}

bool is_gzip(const std::vector<unsigned char>& bytes) {
    return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

std::vector<unsigned char> gunzip(const std::vector<unsigned char>& bytes) {
    z_stream zs{};
    // 16 + MAX_WBITS selects gzip decoding.
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK)
        throw std::runtime_error("gunzip: inflateInit2 failed");
    std::vector<unsigned char> out;
    std::vector<unsigned char> chunk(1 << 16);
    zs.next_in = const_cast<Bytef*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    int ret = Z_OK;
    do {
        zs.next_out = chunk.data();
        zs.avail_out = static_cast<uInt>(chunk.size());
        ret = inflate(&zs, Z_NO_FLUSH);
        if (ret != Z_OK && ret != Z_STREAM_END) {
            inflateEnd(&zs);
            throw std::runtime_error("gunzip: corrupt gzip stream");
        }
        out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
    } while (ret != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
}

std::vector<unsigned char> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                      std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

LabeledDataset load_idx_dataset(const std::string& image_path, const std::string& label_path,
                                int class_count) {
    auto images = read_file_bytes(image_path);
    auto labels = read_file_bytes(label_path);
    if (is_gzip(images)) images = gunzip(images);
    if (is_gzip(labels)) labels = gunzip(labels);
    return parse_idx(images, labels, class_count);
}

}  // namespace tfcsr
