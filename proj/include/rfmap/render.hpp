#pragma once

// Floor sampling and heatmap rendering.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include <zlib.h>

#include "rfmap/radiomap.hpp"
#include "rfmap/tracer.hpp"

namespace rfmap {

class RenderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// RSS on an x-fastest lattice at one height.
struct FloorSample {
    int nx = 0, ny = 0;
    double x0 = 0.0, y0 = 0.0, spacing = 1.0, height = kDefaultCellHeight;
    std::vector<double> dbm;

    double at(int ix, int iy) const { return dbm[static_cast<std::size_t>(iy) * nx + ix]; }
};

/// Lattice points closer than this to the transmitter are not traced.
inline constexpr double kTxExclusion = 1e-6;

/// One isotropic virtual receiver per lattice point. A point on top of the
/// transmitter takes the value of its nearest traced neighbour (lowest index
/// on ties).
inline FloorSample sample_floor(const SceneModel& scene, const Antenna& tx, const Bounds2& bounds, double spacing,
                                double height, const TraceParams& params) {
    const CellGrid grid = auto_grid(bounds, spacing, height);
    FloorSample s;
    s.nx = lattice_count(bounds.x0, bounds.x1, spacing);
    s.ny = lattice_count(bounds.y0, bounds.y1, spacing);
    s.x0 = bounds.x0;
    s.y0 = bounds.y0;
    s.spacing = spacing;
    s.height = height;
    std::vector<Antenna> rx;
    std::vector<std::size_t> traced;
    std::vector<bool> excluded(grid.cells.size(), false);
    for (std::size_t i = 0; i < grid.cells.size(); ++i) {
        if (distance(grid.cells[i].position, tx.position) < kTxExclusion) {
            excluded[i] = true;
            continue;
        }
        rx.push_back(virtual_receiver(grid.cells[i].position, tx.frequency_hz));
        traced.push_back(i);
    }
    s.dbm.assign(grid.cells.size(), params.noise_floor_dbm);
    if (traced.empty()) return s;
    const auto values = rss_at(scene, tx, rx, params);
    for (std::size_t k = 0; k < traced.size(); ++k) s.dbm[traced[k]] = values[k];
    for (std::size_t i = 0; i < grid.cells.size(); ++i) {
        if (!excluded[i]) continue;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k : traced) {
            const double d = distance(grid.cells[i].position, grid.cells[k].position);
            if (d < best) {
                best = d;
                s.dbm[i] = s.dbm[k];
            }
        }
    }
    return s;
}

enum class Interpolation { Bicubic, Bilinear };

struct RenderOptions {
    int pixels_per_cell = 8;
    Interpolation interpolation = Interpolation::Bicubic;
};

namespace detail {

// Catmull-Rom weights for the four samples around a fractional offset t.
inline std::array<double, 4> catmull_rom(double t) {
    const double t2 = t * t, t3 = t2 * t;
    return {0.5 * (-t3 + 2 * t2 - t), 0.5 * (3 * t3 - 5 * t2 + 2), 0.5 * (-3 * t3 + 4 * t2 + t), 0.5 * (t3 - t2)};
}

}  // namespace detail

/// Value field upsampled to pixel resolution: width (nx-1)*ppc+1, height
/// (ny-1)*ppc+1, row 0 at y0. Lattice points land exactly on pixels, and
/// borders are extended by sample replication.
struct Upsampled {
    int width = 0, height = 0;
    std::vector<double> v;

    double at(int px, int py) const { return v[static_cast<std::size_t>(py) * width + px]; }
};

inline void require_renderable(const FloorSample& s) {
    if (s.nx < 4 || s.ny < 4)
        throw RenderError("heatmap needs a sample grid of at least 4x4 points for bicubic support, got " +
                          std::to_string(s.nx) + "x" + std::to_string(s.ny));
    if (s.dbm.size() != static_cast<std::size_t>(s.nx) * s.ny) throw RenderError("sample grid size does not match nx*ny");
}

inline Upsampled upsample(const FloorSample& s, const RenderOptions& opt) {
    require_renderable(s);
    if (opt.pixels_per_cell < 1) throw RenderError("pixels_per_cell must be >= 1");
    const int ppc = opt.pixels_per_cell;
    Upsampled u;
    u.width = (s.nx - 1) * ppc + 1;
    u.height = (s.ny - 1) * ppc + 1;
    u.v.resize(static_cast<std::size_t>(u.width) * u.height);
    auto sample = [&](int ix, int iy) { return s.at(std::clamp(ix, 0, s.nx - 1), std::clamp(iy, 0, s.ny - 1)); };
    for (int py = 0; py < u.height; ++py) {
        const int iy = std::min(py / ppc, s.ny - 2);
        const double ty = static_cast<double>(py - iy * ppc) / ppc;
        for (int px = 0; px < u.width; ++px) {
            const int ix = std::min(px / ppc, s.nx - 2);
            const double tx = static_cast<double>(px - ix * ppc) / ppc;
            double val = 0.0;
            if (opt.interpolation == Interpolation::Bilinear) {
                val = (1 - ty) * ((1 - tx) * sample(ix, iy) + tx * sample(ix + 1, iy)) +
                      ty * ((1 - tx) * sample(ix, iy + 1) + tx * sample(ix + 1, iy + 1));
            } else {
                const auto wx = detail::catmull_rom(tx), wy = detail::catmull_rom(ty);
                for (int j = 0; j < 4; ++j) {
                    double row = 0.0;
                    for (int i = 0; i < 4; ++i) row += wx[static_cast<std::size_t>(i)] * sample(ix - 1 + i, iy - 1 + j);
                    val += wy[static_cast<std::size_t>(j)] * row;
                }
            }
            u.v[static_cast<std::size_t>(py) * u.width + px] = val;
        }
    }
    return u;
}

/// Linear blue-to-red scale: index 0 is pure blue, 255 pure red.
struct ColorScale {
    double min_dbm = 0.0, max_dbm = 0.0;

    int index(double dbm) const {
        if (!(max_dbm > min_dbm)) return 0;
        const double t = std::clamp((dbm - min_dbm) / (max_dbm - min_dbm), 0.0, 1.0);
        return static_cast<int>(std::lround(255.0 * t));
    }
    static std::array<std::uint8_t, 3> color(int index) {
        return {static_cast<std::uint8_t>(index), 0, static_cast<std::uint8_t>(255 - index)};
    }
};

inline ColorScale scale_of(const FloorSample& s) {
    const auto [lo, hi] = std::minmax_element(s.dbm.begin(), s.dbm.end());
    return {*lo, *hi};
}

struct Image {
    int width = 0, height = 0;
    std::vector<std::uint8_t> rgb;  ///< row-major from the top row
};

/// The top image row is the largest y, so north is up.
inline Image shade(const Upsampled& u, const ColorScale& scale) {
    Image img{u.width, u.height, {}};
    img.rgb.reserve(static_cast<std::size_t>(u.width) * u.height * 3);
    for (int row = 0; row < u.height; ++row) {
        const int py = u.height - 1 - row;
        for (int px = 0; px < u.width; ++px) {
            const auto c = ColorScale::color(scale.index(u.at(px, py)));
            img.rgb.insert(img.rgb.end(), c.begin(), c.end());
        }
    }
    return img;
}

namespace detail {

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

inline void png_chunk(std::vector<std::uint8_t>& out, const char* type, const std::vector<std::uint8_t>& data) {
    put_be32(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const uLong crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
    put_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace detail

/// 8-bit RGB PNG, no filtering, maximum deflate level.
inline std::vector<std::uint8_t> encode_png(const Image& img) {
    std::vector<std::uint8_t> out{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    std::vector<std::uint8_t> ihdr;
    detail::put_be32(ihdr, static_cast<std::uint32_t>(img.width));
    detail::put_be32(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});
    detail::png_chunk(out, "IHDR", ihdr);
    std::vector<std::uint8_t> raw;
    const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
    raw.reserve((stride + 1) * img.height);
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0);
        raw.insert(raw.end(), img.rgb.begin() + static_cast<std::ptrdiff_t>(y * stride),
                   img.rgb.begin() + static_cast<std::ptrdiff_t>((y + 1) * stride));
    }
    uLongf len = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> z(len);
    if (compress2(z.data(), &len, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw RenderError("PNG compression failed");
    z.resize(len);
    detail::png_chunk(out, "IDAT", z);
    detail::png_chunk(out, "IEND", {});
    return out;
}

inline nlohmann::json heatmap_sidecar(const FloorSample& s, const ColorScale& scale, const Image& img,
                                      const RenderOptions& opt) {
    return {{"min_dbm", scale.min_dbm},
            {"max_dbm", scale.max_dbm},
            {"colormap", "linear blue-red: index = round(255 * (dBm - min) / (max - min)), rgb = (index, 0, 255 - index)"},
            {"color_of_min", {0, 0, 255}},
            {"color_of_max", {255, 0, 0}},
            {"interpolation", opt.interpolation == Interpolation::Bicubic ? "catmull-rom bicubic" : "bilinear"},
            {"pixels_per_cell", opt.pixels_per_cell},
            {"width", img.width},
            {"height", img.height},
            {"grid", {{"nx", s.nx}, {"ny", s.ny}, {"x0", s.x0}, {"y0", s.y0}, {"spacing", s.spacing}, {"height", s.height}}},
            {"orientation", "top row is the largest y"}};
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RenderError("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

/// Writes `png_path` and a sidecar JSON with the colour scale next to it
/// (same path with a .json extension).
inline Image render_heatmap(const FloorSample& s, const std::string& png_path, const RenderOptions& opt = {}) {
    const Upsampled u = upsample(s, opt);
    const ColorScale scale = scale_of(s);
    Image img = shade(u, scale);
    write_file(png_path, encode_png(img));
    std::string side = png_path;
    if (const auto dot = side.rfind('.'); dot != std::string::npos && side.find('/', dot) == std::string::npos)
        side.resize(dot);
    std::ofstream js(side + ".json");
    if (!js) throw RenderError("cannot write sidecar for '" + png_path + "'");
    js << heatmap_sidecar(s, scale, img, opt).dump(2) << '\n';
    return img;
}

}  // namespace rfmap
