#pragma once

// Sensor file formats: KITTI velodyne .bin, 16-bit PGM/PNG depth images and
// ASCII PLY output.

#include "linereg/errors.hpp"
#include "linereg/scan_io.hpp"

#include <png.h>

#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace linereg {

// ---------------------------------------------------------------------------
// KITTI velodyne: consecutive little-endian float32 (x, y, z, intensity).

inline std::vector<Vec3> read_kitti_bin(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open LiDAR scan: " + path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() % 16 != 0)
        throw IoError(path + ": size is not a multiple of 16 bytes");
    std::vector<Vec3> pts;
    pts.reserve(bytes.size() / 16);
    for (std::size_t off = 0; off < bytes.size(); off += 16) {
        float v[4];
        std::memcpy(v, bytes.data() + off, sizeof(v)); // host is little-endian
        pts.emplace_back(v[0], v[1], v[2]);
    }
    return pts;
}

inline void write_kitti_bin(const std::string &path, const std::vector<Vec3> &pts) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open for writing: " + path);
    for (const Vec3 &p : pts) {
        const float v[4] = {static_cast<float>(p.x()), static_cast<float>(p.y()), static_cast<float>(p.z()), 0.0f};
        f.write(reinterpret_cast<const char *>(v), sizeof(v));
    }
    if (!f)
        throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// PGM (P5 binary, 8 or 16 bit, and P2 ASCII).

inline DepthImage16 read_pgm(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open depth image: " + path);
    auto next_token = [&]() {
        std::string tok;
        while (f) {
            const int c = f.peek();
            if (c == '#') {
                std::string skip;
                std::getline(f, skip);
            } else if (std::isspace(c)) {
                f.get();
            } else {
                break;
            }
        }
        f >> tok;
        return tok;
    };
    const std::string magic = next_token();
    if (magic != "P5" && magic != "P2")
        throw IoError(path + ": not a PGM file");
    std::size_t w = 0, h = 0;
    unsigned long maxval = 0;
    try {
        w = std::stoul(next_token());
        h = std::stoul(next_token());
        maxval = std::stoul(next_token());
    } catch (const std::exception &) {
        throw IoError(path + ": malformed PGM header");
    }
    if (w == 0 || h == 0 || maxval == 0 || maxval > 65535)
        throw IoError(path + ": unsupported PGM header");
    DepthImage16 img(w, h);
    if (magic == "P2") {
        for (auto &px : img.data) {
            unsigned long v = 0;
            if (!(f >> v))
                throw IoError(path + ": truncated PGM data");
            px = static_cast<std::uint16_t>(v);
        }
        return img;
    }
    f.get(); // single whitespace after maxval
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(w * h * bpp);
    f.read(reinterpret_cast<char *>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (f.gcount() != static_cast<std::streamsize>(raw.size()))
        throw IoError(path + ": truncated PGM data");
    for (std::size_t i = 0; i < w * h; ++i)
        img.data[i] = bpp == 2 ? static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]) : raw[i];
    return img;
}

inline void write_pgm(const std::string &path, const DepthImage16 &img) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open for writing: " + path);
    f << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
    for (const std::uint16_t v : img.data) {
        const char b[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
        f.write(b, 2);
    }
    if (!f)
        throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// 16-bit grayscale PNG through libpng.

namespace detail {

struct FileCloser {
    std::FILE *fp;
    ~FileCloser() {
        if (fp)
            std::fclose(fp);
    }
};

} // namespace detail

inline DepthImage16 read_png16(const std::string &path) {
    std::FILE *fp = std::fopen(path.c_str(), "rb");
    if (!fp)
        throw IoError("cannot open depth image: " + path);
    detail::FileCloser closer{fp};

    unsigned char sig[8];
    if (std::fread(sig, 1, 8, fp) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw IoError(path + ": not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialisation failed");
    }

    DepthImage16 img;
    std::vector<png_bytep> rows;
    std::vector<unsigned char> buffer;
    volatile bool ok = false;
    const char *volatile problem = "decode error";
    if (setjmp(png_jmpbuf(png)) == 0) {
        png_init_io(png, fp);
        png_set_sig_bytes(png, 8);
        png_read_info(png, info);
        const auto w = png_get_image_width(png, info);
        const auto h = png_get_image_height(png, info);
        const int depth = png_get_bit_depth(png, info);
        const int color = png_get_color_type(png, info);
        if (color != PNG_COLOR_TYPE_GRAY) {
            problem = "expected single-channel grayscale";
        } else {
            if (depth < 8)
                png_set_expand_gray_1_2_4_to_8(png);
            if (depth == 16)
                png_set_swap(png);
            png_read_update_info(png, info);
            const std::size_t stride = png_get_rowbytes(png, info);
            buffer.resize(stride * h);
            rows.resize(h);
            for (std::size_t r = 0; r < h; ++r)
                rows[r] = buffer.data() + r * stride;
            png_read_image(png, rows.data());
            img = DepthImage16(w, h);
            for (std::size_t r = 0; r < h; ++r) {
                for (std::size_t c = 0; c < w; ++c) {
                    if (depth == 16) {
                        std::uint16_t v;
                        std::memcpy(&v, rows[r] + 2 * c, 2);
                        img.at(c, r) = v;
                    } else {
                        img.at(c, r) = rows[r][c];
                    }
                }
            }
            ok = true;
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    if (!ok)
        throw IoError(path + ": " + std::string(problem));
    return img;
}

inline void write_png16(const std::string &path, const DepthImage16 &img) {
    std::FILE *fp = std::fopen(path.c_str(), "wb");
    if (!fp)
        throw IoError("cannot open for writing: " + path);
    detail::FileCloser closer{fp};

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialisation failed");
    }
    std::vector<unsigned char> buffer(img.width * img.height * 2);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        buffer[2 * i] = static_cast<unsigned char>(img.data[i] >> 8);
        buffer[2 * i + 1] = static_cast<unsigned char>(img.data[i] & 0xff);
    }
    std::vector<png_bytep> rows(img.height);
    for (std::size_t r = 0; r < img.height; ++r)
        rows[r] = buffer.data() + r * img.width * 2;

    volatile bool ok = false;
    if (setjmp(png_jmpbuf(png)) == 0) {
        png_init_io(png, fp);
        png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 16,
                     PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        png_write_image(png, rows.data());
        png_write_end(png, nullptr);
        ok = true;
    }
    png_destroy_write_struct(&png, &info);
    if (!ok)
        throw IoError(path + ": PNG encode error");
}

/// Dispatches on extension: .png or .pgm.
inline DepthImage16 read_depth_image(const std::string &path) {
    auto ends_with = [&](const char *ext) {
        const std::size_t n = std::strlen(ext);
        return path.size() >= n && path.compare(path.size() - n, n, ext) == 0;
    };
    if (ends_with(".png") || ends_with(".PNG"))
        return read_png16(path);
    if (ends_with(".pgm") || ends_with(".PGM"))
        return read_pgm(path);
    throw IoError("unsupported depth image extension: " + path);
}

// ---------------------------------------------------------------------------
// ASCII PLY.

struct PlyVertex {
    Vec3 position;
    int label = 0;
};

struct PlyEdge {
    int v0 = 0;
    int v1 = 0;
    int label = 0;
};

/// Vertices (with an integer label property) and optional labelled edges.
inline void write_ply(std::ostream &os, const std::vector<PlyVertex> &vertices, const std::vector<PlyEdge> &edges = {},
                      const std::vector<std::string> &comments = {}) {
    os << "ply\nformat ascii 1.0\n";
    for (const auto &c : comments)
        os << "comment " << c << '\n';
    os << "element vertex " << vertices.size() << '\n'
       << "property float x\nproperty float y\nproperty float z\nproperty int label\n";
    if (!edges.empty())
        os << "element edge " << edges.size() << '\n' << "property int vertex1\nproperty int vertex2\nproperty int label\n";
    os << "end_header\n";
    os << std::fixed << std::setprecision(6);
    for (const auto &v : vertices)
        os << v.position.x() << ' ' << v.position.y() << ' ' << v.position.z() << ' ' << v.label << '\n';
    for (const auto &e : edges)
        os << e.v0 << ' ' << e.v1 << ' ' << e.label << '\n';
}

inline void write_ply(const std::string &path, const std::vector<PlyVertex> &vertices,
                      const std::vector<PlyEdge> &edges = {}, const std::vector<std::string> &comments = {}) {
    std::ofstream f(path);
    if (!f)
        throw IoError("cannot open for writing: " + path);
    write_ply(f, vertices, edges, comments);
    if (!f)
        throw IoError("write failed: " + path);
}

} // namespace linereg
