// SPDX-License-Identifier: Apache-2.0
#include "eyesynth/io.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "eyesynth/errors.hpp"

namespace eyesynth {

namespace {

struct PngImage {
    png_image image;
    PngImage() {
        std::memset(&image, 0, sizeof(image));
        image.version = PNG_IMAGE_VERSION;
    }
    ~PngImage() { png_image_free(&image); }
    PngImage(const PngImage&) = delete;
    PngImage& operator=(const PngImage&) = delete;
};

void begin_read(PngImage& png, const std::string& path) {
    if (!std::filesystem::is_regular_file(path)) throw AssetError(path, "cannot open file");
    if (!png_image_begin_read_from_file(&png.image, path.c_str())) {
        throw FormatError("cannot read PNG '" + path + "': " + png.image.message);
    }
    if (png.image.format & PNG_FORMAT_FLAG_LINEAR) {
        throw FormatError("unsupported PNG bit depth 16 in '" + path + "' (only 8-bit images are accepted)");
    }
}

}  // namespace

void write_png(const std::string& path, const Image8& image) {
    if (image.channels != 1 && image.channels != 3) {
        throw FormatError("write_png supports 1 or 3 channels");
    }
    PngImage png;
    png.image.width = static_cast<png_uint_32>(image.width);
    png.image.height = static_cast<png_uint_32>(image.height);
    png.image.format = image.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png.image, path.c_str(), 0, image.data.data(), 0, nullptr)) {
        throw std::runtime_error("cannot write PNG '" + path + "': " + png.image.message);
    }
}

Image8 read_png(const std::string& path) {
    PngImage png;
    begin_read(png, path);
    const bool color = (png.image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    png.image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    Image8 out(static_cast<int>(png.image.width), static_cast<int>(png.image.height), color ? 3 : 1);
    if (!png_image_finish_read(&png.image, nullptr, out.data.data(), 0, nullptr)) {
        throw FormatError("cannot decode PNG '" + path + "': " + png.image.message);
    }
    return out;
}

void write_mask_png(const std::string& path, const SegMask& mask) {
    if (!mask.valid()) throw FormatError("mask contains codes outside the class palette");
    PngImage png;
    png.image.width = static_cast<png_uint_32>(mask.width());
    png.image.height = static_cast<png_uint_32>(mask.height());
    png.image.format = PNG_FORMAT_RGB_COLORMAP;
    png.image.colormap_entries = kClassCount;
    std::uint8_t colormap[kClassCount * 3];
    for (int i = 0; i < kClassCount; ++i) {
        colormap[3 * i + 0] = kMaskPalette[i].r;
        colormap[3 * i + 1] = kMaskPalette[i].g;
        colormap[3 * i + 2] = kMaskPalette[i].b;
    }
    if (!png_image_write_to_file(&png.image, path.c_str(), 0, mask.labels.data.data(), 0, colormap)) {
        throw std::runtime_error("cannot write mask PNG '" + path + "': " + png.image.message);
    }
}

SegMask read_mask_png(const std::string& path) {
    PngImage png;
    begin_read(png, path);
    const int w = static_cast<int>(png.image.width);
    const int h = static_cast<int>(png.image.height);
    SegMask mask(w, h);

    if (png.image.format & PNG_FORMAT_FLAG_COLORMAP) {
        png.image.format = PNG_FORMAT_RGB_COLORMAP;
        std::vector<std::uint8_t> colormap(256 * 3);
        std::vector<std::uint8_t> indices(static_cast<std::size_t>(w) * h);
        if (!png_image_finish_read(&png.image, nullptr, indices.data(), 0, colormap.data())) {
            throw FormatError("cannot decode mask PNG '" + path + "': " + png.image.message);
        }
        std::vector<int> lut(png.image.colormap_entries, -1);
        for (std::size_t i = 0; i < lut.size(); ++i) {
            const Rgb8 c{colormap[3 * i], colormap[3 * i + 1], colormap[3 * i + 2]};
            if (auto cls = class_from_palette(c)) lut[i] = static_cast<int>(*cls);
        }
        for (std::size_t i = 0; i < indices.size(); ++i) {
            const std::uint8_t idx = indices[i];
            if (idx >= lut.size() || lut[idx] < 0) {
                throw FormatError("mask PNG '" + path + "' uses a palette color outside the class mapping");
            }
            mask.labels.data[i] = static_cast<std::uint8_t>(lut[idx]);
        }
        return mask;
    }

    const bool color = (png.image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    png.image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    Image8 img(w, h, color ? 3 : 1);
    if (!png_image_finish_read(&png.image, nullptr, img.data.data(), 0, nullptr)) {
        throw FormatError("cannot decode mask PNG '" + path + "': " + png.image.message);
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (color) {
                const auto cls = class_from_palette({img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)});
                if (!cls) throw FormatError("mask PNG '" + path + "' has a color outside the class palette");
                mask.set(x, y, *cls);
            } else {
                const std::uint8_t v = img.at(x, y);
                if (v >= kClassCount) throw FormatError("mask PNG '" + path + "' has class index > 3");
                mask.labels.at(x, y) = v;
            }
        }
    }
    return mask;
}

// ---------------------------------------------------------------------------
// Radiance RGBE

namespace {

void float_to_rgbe(const float* rgb, std::uint8_t* out) {
    const double v = std::max({rgb[0], rgb[1], rgb[2]});
    if (v < 1e-32) {
        out[0] = out[1] = out[2] = out[3] = 0;
        return;
    }
    int e;
    const double m = std::frexp(v, &e);
    const double scale = m * 256.0 / v;
    for (int c = 0; c < 3; ++c) {
        out[c] = static_cast<std::uint8_t>(std::clamp(rgb[c] * scale, 0.0, 255.0));
    }
    out[3] = static_cast<std::uint8_t>(e + 128);
}

void rgbe_to_float(const std::uint8_t* rgbe, float* out) {
    if (rgbe[3] == 0) {
        out[0] = out[1] = out[2] = 0.0f;
        return;
    }
    const double f = std::ldexp(1.0, static_cast<int>(rgbe[3]) - 136);
    for (int c = 0; c < 3; ++c) out[c] = static_cast<float>(rgbe[c] * f);
}

class ByteReader {
public:
    explicit ByteReader(const std::vector<std::uint8_t>& b) : bytes_(b) {}
    bool eof() const { return pos_ >= bytes_.size(); }
    std::uint8_t get() {
        if (eof()) throw FormatError("RGBE stream truncated");
        return bytes_[pos_++];
    }
    std::string line() {
        std::string s;
        while (!eof()) {
            const char c = static_cast<char>(bytes_[pos_++]);
            if (c == '\n') return s;
            s.push_back(c);
        }
        throw FormatError("RGBE header truncated");
    }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

ImageF decode_hdr(const std::vector<std::uint8_t>& bytes) {
    ByteReader in(bytes);
    const std::string magic = in.line();
    if (magic.rfind("#?RADIANCE", 0) != 0 && magic.rfind("#?RGBE", 0) != 0) {
        throw FormatError("not a Radiance HDR stream (bad magic)");
    }
    bool format_ok = false;
    for (;;) {
        const std::string l = in.line();
        if (l.empty()) break;
        if (l.rfind("FORMAT=", 0) == 0) {
            if (l != "FORMAT=32-bit_rle_rgbe") throw FormatError("unsupported RGBE format line: " + l);
            format_ok = true;
        }
    }
    if (!format_ok) throw FormatError("RGBE header lacks FORMAT=32-bit_rle_rgbe");
    int width = 0, height = 0;
    {
        std::istringstream res(in.line());
        std::string ytag, xtag;
        res >> ytag >> height >> xtag >> width;
        if (ytag != "-Y" || xtag != "+X" || width <= 0 || height <= 0) {
            throw FormatError("unsupported RGBE resolution line (expected '-Y H +X W')");
        }
    }

    ImageF out(width, height, 3);
    std::vector<std::uint8_t> scan(static_cast<std::size_t>(width) * 4);
    for (int y = 0; y < height; ++y) {
        const std::uint8_t b0 = in.get(), b1 = in.get(), b2 = in.get(), b3 = in.get();
        const bool rle = width >= 8 && width < 0x8000 && b0 == 2 && b1 == 2 && (b2 & 0x80) == 0;
        if (rle) {
            if (((b2 << 8) | b3) != width) throw FormatError("RGBE scanline width mismatch");
            for (int c = 0; c < 4; ++c) {
                int x = 0;
                while (x < width) {
                    int count = in.get();
                    if (count > 128) {
                        count -= 128;
                        if (x + count > width) throw FormatError("RGBE run overflows scanline");
                        const std::uint8_t v = in.get();
                        for (int i = 0; i < count; ++i) scan[4 * (x++) + c] = v;
                    } else {
                        if (count == 0 || x + count > width) throw FormatError("bad RGBE literal run");
                        for (int i = 0; i < count; ++i) scan[4 * (x++) + c] = in.get();
                    }
                }
            }
        } else {
            scan[0] = b0;
            scan[1] = b1;
            scan[2] = b2;
            scan[3] = b3;
            for (std::size_t i = 4; i < scan.size(); ++i) scan[i] = in.get();
        }
        for (int x = 0; x < width; ++x) rgbe_to_float(&scan[4 * x], &out.at(x, y, 0));
    }
    return out;
}

std::vector<std::uint8_t> encode_hdr(const ImageF& image, bool run_length) {
    if (image.channels != 3) throw FormatError("encode_hdr expects 3 channels");
    std::ostringstream header;
    header << "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " << image.height << " +X " << image.width << "\n";
    const std::string h = header.str();
    std::vector<std::uint8_t> out(h.begin(), h.end());

    const int w = image.width;
    const bool use_rle = run_length && w >= 8 && w < 0x8000;
    std::vector<std::uint8_t> scan(static_cast<std::size_t>(w) * 4);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < w; ++x) float_to_rgbe(&image.at(x, y, 0), &scan[4 * x]);
        if (!use_rle) {
            out.insert(out.end(), scan.begin(), scan.end());
            continue;
        }
        out.push_back(2);
        out.push_back(2);
        out.push_back(static_cast<std::uint8_t>(w >> 8));
        out.push_back(static_cast<std::uint8_t>(w & 0xFF));
        for (int c = 0; c < 4; ++c) {
            int x = 0;
            while (x < w) {
                // Find the next run of >= 3 equal bytes.
                int run_start = x;
                int run_len = 0;
                while (run_start < w) {
                    run_len = 1;
                    while (run_start + run_len < w && run_len < 127 &&
                           scan[4 * (run_start + run_len) + c] == scan[4 * run_start + c]) {
                        ++run_len;
                    }
                    if (run_len >= 3) break;
                    run_start += run_len;
                }
                if (run_start >= w) run_len = 0;
                // Literal bytes before the run.
                while (x < run_start) {
                    const int n = std::min(128, run_start - x);
                    out.push_back(static_cast<std::uint8_t>(n));
                    for (int i = 0; i < n; ++i) out.push_back(scan[4 * (x + i) + c]);
                    x += n;
                }
                if (run_len >= 3) {
                    out.push_back(static_cast<std::uint8_t>(128 + run_len));
                    out.push_back(scan[4 * run_start + c]);
                    x += run_len;
                }
            }
        }
    }
    return out;
}

ImageF read_hdr(const std::string& path) {
    try {
        return decode_hdr(read_file_bytes(path));
    } catch (const FormatError& e) {
        throw FormatError(std::string(e.what()) + " in '" + path + "'");
    }
}

void write_hdr(const std::string& path, const ImageF& image, bool run_length) {
    write_file_bytes(path, encode_hdr(image, run_length));
}

// ---------------------------------------------------------------------------

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw AssetError(path, "cannot open file");
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("short write to '" + path + "'");
}

void write_text_file(const std::string& path, const std::string& text) {
    write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string read_text_file(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    return {bytes.begin(), bytes.end()};
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr)) {
        throw InternalError("SHA-256 computation failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file_bytes(path)); }

}  // namespace eyesynth
