#include "radiolith/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <vector>

namespace radiolith {

namespace {

// Skips whitespace and '#' comments, then reads one unsigned integer.
int read_pnm_int(std::istream& in, const char* what) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    if (c == EOF || !std::isdigit(c))
        throw std::runtime_error(std::string("malformed netpbm header: expected ") + what);
    long v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        if (v > 1 << 30) throw std::runtime_error("malformed netpbm header: value overflow");
        c = in.get();
    }
    return static_cast<int>(v);
}

RasterImage load_pnm(std::ifstream& in, const std::string& path) {
    char magic[2];
    in.read(magic, 2);
    if (!in || magic[0] != 'P')
        throw std::runtime_error("unreadable or malformed file: " + path);
    const char kind = magic[1];
    if (kind != '2' && kind != '3' && kind != '5' && kind != '6')
        throw std::runtime_error("unsupported netpbm variant in " + path);
    const bool color = kind == '3' || kind == '6';
    const bool ascii = kind == '2' || kind == '3';

    int w = read_pnm_int(in, "width");
    int h = read_pnm_int(in, "height");
    int maxval = read_pnm_int(in, "maxval");
    if (w < 1 || h < 1) throw std::runtime_error("malformed netpbm header in " + path);
    if (maxval != 255) throw std::runtime_error("unsupported maxval (must be 255) in " + path);

    RasterImage img(w, h, color ? 3 : 1);
    const std::size_t n = img.pixels.size();
    if (ascii) {
        for (std::size_t i = 0; i < n; ++i) {
            int v = read_pnm_int(in, "sample");
            if (v > 255) throw std::runtime_error("sample exceeds maxval in " + path);
            img.pixels[i] = v / 255.0;
        }
    } else {
        // One whitespace byte separates the header from binary samples.
        std::vector<std::uint8_t> raw(n);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n)
            throw std::runtime_error("truncated pixel data in " + path);
        for (std::size_t i = 0; i < n; ++i) img.pixels[i] = raw[i] / 255.0;
    }
    return img;
}

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

RasterImage load_png(const std::string& path) {
    PngReadCloser ctx;
    ctx.fp = std::fopen(path.c_str(), "rb");
    if (!ctx.fp) throw std::runtime_error("cannot open " + path);

    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw std::runtime_error("png init failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw std::runtime_error("png init failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw std::runtime_error("malformed PNG: " + path);

    png_init_io(ctx.png, ctx.fp);
    png_read_info(ctx.png, ctx.info);

    const png_uint_32 w = png_get_image_width(ctx.png, ctx.info);
    const png_uint_32 h = png_get_image_height(ctx.png, ctx.info);
    const int depth = png_get_bit_depth(ctx.png, ctx.info);
    const int color = png_get_color_type(ctx.png, ctx.info);
    if (depth != 8) throw std::runtime_error("unsupported PNG bit depth (must be 8): " + path);
    if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_RGB)
        throw std::runtime_error("unsupported PNG color type (must be 8-bit gray or RGB): " + path);

    const int channels = color == PNG_COLOR_TYPE_GRAY ? 1 : 3;
    RasterImage img(static_cast<int>(w), static_cast<int>(h), channels);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * channels);
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(ctx.png, row.data(), nullptr);
        for (std::size_t i = 0; i < row.size(); ++i)
            img.pixels[static_cast<std::size_t>(y) * w * channels + i] = row[i] / 255.0;
    }
    return img;
}

struct PngWriteCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngWriteCloser() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

void save_png(const RasterImage& img, const std::string& path) {
    PngWriteCloser ctx;
    ctx.fp = std::fopen(path.c_str(), "wb");
    if (!ctx.fp) throw std::runtime_error("cannot write " + path);

    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw std::runtime_error("png init failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw std::runtime_error("png init failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw std::runtime_error("png write failed: " + path);

    png_init_io(ctx.png, ctx.fp);
    png_set_IHDR(ctx.png, ctx.info, img.width, img.height, 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);

    std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (std::size_t i = 0; i < row.size(); ++i)
            row[i] = quantize_u8(img.pixels[static_cast<std::size_t>(y) * img.width * img.channels + i]);
        png_write_row(ctx.png, row.data());
    }
    png_write_end(ctx.png, nullptr);
}

std::string lower_ext(const std::string& path) {
    auto dot = path.rfind('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext;
}

}  // namespace

RasterImage load_image(const std::string& path) {
    const std::string ext = lower_ext(path);
    if (ext == "png") return load_png(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_pnm(in, path);
}

void save_image(const RasterImage& img, const std::string& path) {
    const std::string ext = lower_ext(path);
    if (ext == "png") {
        save_png(img, path);
        return;
    }
    if (ext == "ppm" || (img.channels == 3 && ext != "pgm")) {
        if (img.channels != 3) throw std::runtime_error("PPM output requires an RGB image: " + path);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << "P6\n" << img.width << " " << img.height << "\n255\n";
        for (double v : img.pixels) out.put(static_cast<char>(quantize_u8(v)));
        if (!out) throw std::runtime_error("write failed: " + path);
        return;
    }
    if (img.channels != 1) throw std::runtime_error("PGM output requires a gray image: " + path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    for (double v : img.pixels) out.put(static_cast<char>(quantize_u8(v)));
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace radiolith
