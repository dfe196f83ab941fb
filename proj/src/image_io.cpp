#include "cceval/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "cceval/errors.hpp"

namespace cceval {

namespace {

bool host_is_little_endian() {
    const std::uint16_t probe = 1;
    return *reinterpret_cast<const std::uint8_t*>(&probe) == 1;
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f)
            std::fclose(f);
    }
};
using FileHandle = std::unique_ptr<std::FILE, FileCloser>;

FileHandle open_file(const std::filesystem::path& path, const char* mode) {
    std::FILE* f = std::fopen(path.string().c_str(), mode);
    if (!f) {
        if (mode[0] == 'r')
            throw MissingFile("cannot open " + path.string());
        throw InputError("cannot create " + path.string());
    }
    return FileHandle(f);
}

void png_error_to_exception(png_structp, png_const_charp msg) {
    throw ParseError(std::string("png: ") + msg);
}

void png_warning_ignore(png_structp, png_const_charp) {}

// Reads the full PNG into 16-bit host-order samples, expanding palettes,
// stripping alpha, and widening 8-bit data. Returns samples per pixel in
// `channels` and the source bit depth in `depth`.
std::vector<std::uint16_t> read_png_samples(const std::filesystem::path& path,
                                            int& width, int& height,
                                            int& channels, int& depth) {
    FileHandle file = open_file(path, "rb");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                             png_error_to_exception,
                                             png_warning_ignore);
    if (!png)
        throw ParseError("png: cannot allocate reader");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw ParseError("png: cannot allocate info");
    }

    try {
        png_init_io(png, file.get());
        png_read_info(png, info);

        width = static_cast<int>(png_get_image_width(png, info));
        height = static_cast<int>(png_get_image_height(png, info));
        depth = png_get_bit_depth(png, info);
        const int color_type = png_get_color_type(png, info);

        if (color_type == PNG_COLOR_TYPE_PALETTE)
            png_set_palette_to_rgb(png);
        if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8)
            png_set_expand_gray_1_2_4_to_8(png);
        if (png_get_valid(png, info, PNG_INFO_tRNS))
            png_set_tRNS_to_alpha(png);
        if (color_type & PNG_COLOR_MASK_ALPHA)
            png_set_strip_alpha(png);
        if (depth < 16)
            png_set_expand_16(png);
        if (host_is_little_endian())
            png_set_swap(png);

        png_read_update_info(png, info);
        channels = png_get_channels(png, info);

        std::vector<std::uint16_t> samples(
            static_cast<std::size_t>(width) * height * channels);
        std::vector<png_bytep> rows(height);
        for (int y = 0; y < height; ++y) {
            rows[y] = reinterpret_cast<png_bytep>(
                samples.data() + static_cast<std::size_t>(y) * width * channels);
        }
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
        png_destroy_read_struct(&png, &info, nullptr);
        return samples;
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
}

void write_png(const std::filesystem::path& path, int width, int height,
               int channels, int bit_depth,
               const std::vector<std::uint16_t>& samples) {
    FileHandle file = open_file(path, "wb");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                              png_error_to_exception,
                                              png_warning_ignore);
    if (!png)
        throw InputError("png: cannot allocate writer");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw InputError("png: cannot allocate info");
    }

    try {
        png_init_io(png, file.get());
        const int color_type =
            channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
        png_set_IHDR(png, info, width, height, bit_depth, color_type,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                     PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);

        if (bit_depth == 16) {
            if (host_is_little_endian())
                png_set_swap(png);
            std::vector<png_bytep> rows(height);
            for (int y = 0; y < height; ++y) {
                rows[y] = reinterpret_cast<png_bytep>(
                    const_cast<std::uint16_t*>(samples.data()) +
                    static_cast<std::size_t>(y) * width * channels);
            }
            png_write_image(png, rows.data());
        } else {
            std::vector<std::uint8_t> row8(
                static_cast<std::size_t>(width) * channels);
            for (int y = 0; y < height; ++y) {
                const std::uint16_t* src =
                    samples.data() + static_cast<std::size_t>(y) * width * channels;
                for (std::size_t i = 0; i < row8.size(); ++i)
                    row8[i] = static_cast<std::uint8_t>(src[i]);
                png_write_row(png, row8.data());
            }
        }
        png_write_end(png, info);
        png_destroy_write_struct(&png, &info);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
}

bool has_png_signature(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw MissingFile("cannot open " + path.string());
    unsigned char sig[8] = {};
    f.read(reinterpret_cast<char*>(sig), 8);
    return f.gcount() >= 8 && png_sig_cmp(sig, 0, 8) == 0;
}

// Binary PPM (P6). Whitespace and a single optional comment line per token
// position, per the netpbm convention.
int ppm_read_token(std::istream& in) {
    while (true) {
        const int c = in.peek();
        if (c == std::istream::traits_type::eof()) {
            break;
        } else if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int value = -1;
    in >> value;
    if (!in || value < 0)
        throw ParseError("ppm: malformed header");
    return value;
}

Image read_ppm(const std::filesystem::path& path, PixelSpace tag) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw MissingFile("cannot open " + path.string());
    char magic[2] = {};
    f.read(magic, 2);
    if (magic[0] != 'P' || magic[1] != '6')
        throw ParseError("ppm: expected P6 magic in " + path.string());
    const int width = ppm_read_token(f);
    const int height = ppm_read_token(f);
    const int maxval = ppm_read_token(f);
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
        throw ParseError("ppm: bad dimensions in " + path.string());
    f.get(); // single whitespace byte after maxval

    Image img;
    img.width = width;
    img.height = height;
    img.space = tag;
    img.data.resize(static_cast<std::size_t>(width) * height * 3);

    const std::size_t n = img.data.size();
    const double scale = 1.0 / maxval;
    if (maxval < 256) {
        std::vector<std::uint8_t> raw(n);
        f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(f.gcount()) != n)
            throw ParseError("ppm: truncated pixel data in " + path.string());
        for (std::size_t i = 0; i < n; ++i)
            img.data[i] = raw[i] * scale;
    } else {
        std::vector<std::uint8_t> raw(n * 2);
        f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * 2));
        if (static_cast<std::size_t>(f.gcount()) != n * 2)
            throw ParseError("ppm: truncated pixel data in " + path.string());
        for (std::size_t i = 0; i < n; ++i) {
            const int v = (raw[2 * i] << 8) | raw[2 * i + 1];
            img.data[i] = v * scale;
        }
    }
    return img;
}

void write_ppm(const std::filesystem::path& path, const Image& img,
               int bit_depth) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw InputError("cannot create " + path.string());
    const int maxval = bit_depth == 16 ? 65535 : 255;
    f << "P6\n" << img.width << " " << img.height << "\n" << maxval << "\n";
    const std::size_t n = img.data.size();
    std::vector<std::uint8_t> raw;
    raw.reserve(bit_depth == 16 ? n * 2 : n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = std::clamp(img.data[i], 0.0, 1.0);
        const int q = static_cast<int>(std::lround(v * maxval));
        if (bit_depth == 16) {
            raw.push_back(static_cast<std::uint8_t>(q >> 8));
            raw.push_back(static_cast<std::uint8_t>(q & 0xff));
        } else {
            raw.push_back(static_cast<std::uint8_t>(q));
        }
    }
    f.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
    if (!f)
        throw InputError("short write to " + path.string());
}

} // namespace

Image read_image(const std::filesystem::path& path, PixelSpace tag) {
    if (tag == PixelSpace::Lab)
        throw InvariantViolation("image files carry RGB data, not Lab");
    if (!has_png_signature(path))
        return read_ppm(path, tag);

    int width = 0, height = 0, channels = 0, depth = 0;
    const std::vector<std::uint16_t> samples =
        read_png_samples(path, width, height, channels, depth);
    if (channels != 3)
        throw ParseError("expected RGB pixels in " + path.string());

    Image img;
    img.width = width;
    img.height = height;
    img.space = tag;
    img.data.resize(samples.size());
    const double scale = 1.0 / 65535.0;
    for (std::size_t i = 0; i < samples.size(); ++i)
        img.data[i] = samples[i] * scale;
    return img;
}

int read_image_depth(const std::filesystem::path& path) {
    if (has_png_signature(path)) {
        // IHDR is always first: 8 signature bytes, 8 chunk header bytes,
        // width, height, then the depth byte at offset 24.
        std::ifstream f(path, std::ios::binary);
        unsigned char header[25] = {};
        f.read(reinterpret_cast<char*>(header), sizeof(header));
        if (f.gcount() != sizeof(header) ||
            std::memcmp(header + 12, "IHDR", 4) != 0)
            throw ParseError("png: malformed header in " + path.string());
        return header[24] == 16 ? 16 : 8;
    }
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw MissingFile("cannot open " + path.string());
    char magic[2] = {};
    f.read(magic, 2);
    if (magic[0] != 'P' || magic[1] != '6')
        throw ParseError("ppm: expected P6 magic in " + path.string());
    ppm_read_token(f); // width
    ppm_read_token(f); // height
    const int maxval = ppm_read_token(f);
    return maxval > 255 ? 16 : 8;
}

void write_image(const std::filesystem::path& path, const Image& img,
                 int bit_depth) {
    if (img.space == PixelSpace::Lab)
        throw InvariantViolation("convert Lab images before writing");
    if (bit_depth != 8 && bit_depth != 16)
        throw InvariantViolation("bit depth must be 8 or 16");
    if (img.empty())
        throw InvariantViolation("refusing to write an empty image");

    const std::string ext = path.extension().string();
    if (ext == ".ppm") {
        write_ppm(path, img, bit_depth);
        return;
    }
    if (ext != ".png")
        throw InputError("unsupported image extension: " + path.string());

    const int maxval = bit_depth == 16 ? 65535 : 255;
    std::vector<std::uint16_t> samples(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const double v = std::clamp(img.data[i], 0.0, 1.0);
        samples[i] = static_cast<std::uint16_t>(std::lround(v * maxval));
    }
    write_png(path, img.width, img.height, 3, bit_depth, samples);
}

MaskImage read_mask(const std::filesystem::path& path) {
    if (!has_png_signature(path))
        throw ParseError("mask must be a PNG: " + path.string());
    int width = 0, height = 0, channels = 0, depth = 0;
    const std::vector<std::uint16_t> samples =
        read_png_samples(path, width, height, channels, depth);
    if (channels != 1 || depth != 8)
        throw ParseError("mask must be 8-bit grayscale: " + path.string());

    MaskImage mask;
    mask.width = width;
    mask.height = height;
    mask.labels.resize(samples.size());
    // Samples were widened to 16 bits on read; undo the 257x expansion.
    for (std::size_t i = 0; i < samples.size(); ++i)
        mask.labels[i] = static_cast<std::uint8_t>(samples[i] / 257);
    return mask;
}

void write_mask(const std::filesystem::path& path, const MaskImage& mask) {
    if (mask.width == 0 || mask.height == 0)
        throw InvariantViolation("refusing to write an empty mask");
    std::vector<std::uint16_t> samples(mask.labels.size());
    for (std::size_t i = 0; i < mask.labels.size(); ++i)
        samples[i] = mask.labels[i];
    write_png(path, mask.width, mask.height, 1, 8, samples);
}

} // namespace cceval
