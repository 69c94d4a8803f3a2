#pragma once

#include "phonon_uq/errors.hpp"
#include "phonon_uq/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace phonon_uq {

enum class Material : std::uint8_t { soft = 0, hard = 1 };

struct Pixel {
    int row;
    int col;
    friend bool operator==(const Pixel&, const Pixel&) = default;
    friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/**
 * Square binary grid of material ids (0 = soft, 1 = hard), row-major.
 * Row 0 is the bottom row of the unit cell (y increases with row).
 */
class UnitCellBitmap {
public:
    UnitCellBitmap(int resolution, std::vector<std::uint8_t> cells)
        : resolution_(resolution), cells_(std::move(cells))
    {
        if (resolution_ < 2) throw InvalidArgument("bitmap resolution must be >= 2");
        if (cells_.size() != static_cast<std::size_t>(resolution_) * resolution_)
            throw InvalidArgument("bitmap cell count does not match resolution^2");
        for (auto c : cells_)
            if (c > 1) throw InvalidArgument("bitmap cells must be 0 or 1");
    }

    static UnitCellBitmap filled(int resolution, Material m)
    {
        return UnitCellBitmap(resolution,
                              std::vector<std::uint8_t>(static_cast<std::size_t>(resolution) * resolution,
                                                        static_cast<std::uint8_t>(m)));
    }

    int resolution() const noexcept { return resolution_; }
    std::uint8_t at(int row, int col) const { return cells_[index(row, col)]; }
    std::uint8_t at(Pixel p) const { return at(p.row, p.col); }
    const std::vector<std::uint8_t>& cells() const noexcept { return cells_; }

    std::size_t hard_count() const
    {
        return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
    }
    double hard_fraction() const
    {
        return static_cast<double>(hard_count()) / static_cast<double>(cells_.size());
    }

    UnitCellBitmap with_flipped(const std::vector<Pixel>& pixels) const
    {
        auto out = cells_;
        for (const auto& p : pixels) out[index(p.row, p.col)] ^= 1u;
        return UnitCellBitmap(resolution_, std::move(out));
    }

    friend bool operator==(const UnitCellBitmap&, const UnitCellBitmap&) = default;

private:
    std::size_t index(int row, int col) const
    {
        return static_cast<std::size_t>(row) * resolution_ + col;
    }

    int resolution_;
    std::vector<std::uint8_t> cells_;
};

/// Hamming distance between two bitmaps of equal resolution.
inline std::size_t hamming_distance(const UnitCellBitmap& a, const UnitCellBitmap& b)
{
    if (a.resolution() != b.resolution()) throw InvalidArgument("resolution mismatch");
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.cells().size(); ++i) d += a.cells()[i] != b.cells()[i];
    return d;
}

/// Nearest-neighbour upscaling: every pixel becomes a factor x factor block.
inline UnitCellBitmap scale_bitmap(const UnitCellBitmap& bitmap, int factor)
{
    if (factor < 1) throw InvalidArgument("scale factor must be >= 1");
    const int n = bitmap.resolution() * factor;
    std::vector<std::uint8_t> out(static_cast<std::size_t>(n) * n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            out[static_cast<std::size_t>(r) * n + c] = bitmap.at(r / factor, c / factor);
    return UnitCellBitmap(n, std::move(out));
}

/**
 * Nearest-neighbour resampling to an arbitrary resolution. Output pixel
 * centres are mapped back into the source grid. Identical to scale_bitmap
 * when the target is an integer multiple of the source resolution.
 */
inline UnitCellBitmap resample_bitmap(const UnitCellBitmap& bitmap, int resolution)
{
    if (resolution < 2) throw InvalidArgument("target resolution must be >= 2");
    const int src = bitmap.resolution();
    if (resolution % src == 0) return scale_bitmap(bitmap, resolution / src);
    auto source_index = [&](int i) {
        // floor((i + 1/2) * src / resolution) in exact integer arithmetic
        return static_cast<int>((static_cast<long long>(2 * i + 1) * src) / (2LL * resolution));
    };
    std::vector<std::uint8_t> out(static_cast<std::size_t>(resolution) * resolution);
    for (int r = 0; r < resolution; ++r)
        for (int c = 0; c < resolution; ++c)
            out[static_cast<std::size_t>(r) * resolution + c] = bitmap.at(source_index(r), source_index(c));
    return UnitCellBitmap(resolution, std::move(out));
}

/**
 * Pixels with at least one 4-connected in-grid neighbour of the opposite
 * material. Returned in row-major order.
 */
inline std::vector<Pixel> find_edge_pixels(const UnitCellBitmap& bitmap)
{
    const int n = bitmap.resolution();
    std::vector<Pixel> edges;
    constexpr int dr[4] = {-1, 1, 0, 0};
    constexpr int dc[4] = {0, 0, -1, 1};
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const auto v = bitmap.at(r, c);
            for (int d = 0; d < 4; ++d) {
                const int rr = r + dr[d];
                const int cc = c + dc[d];
                if (rr < 0 || rr >= n || cc < 0 || cc >= n) continue;
                if (bitmap.at(rr, cc) != v) {
                    edges.push_back({r, c});
                    break;
                }
            }
        }
    }
    return edges;
}

struct DefectSpec {
    double flip_proportion = 0.0;
    std::uint64_t seed = 0;
};

/// round-half-away-from-zero of flip_proportion * edge_count.
inline std::size_t flip_count(double flip_proportion, std::size_t edge_count)
{
    if (!(flip_proportion >= 0.0 && flip_proportion <= 1.0))
        throw InvalidArgument("flip proportion must lie in [0, 1]");
    const auto k = static_cast<std::size_t>(std::round(flip_proportion * static_cast<double>(edge_count)));
    return std::min(k, edge_count);
}

/// The edge pixels that apply_defects would invert for this spec.
inline std::vector<Pixel> select_defect_pixels(const UnitCellBitmap& bitmap, const DefectSpec& spec)
{
    auto edges = find_edge_pixels(bitmap);
    const std::size_t k = flip_count(spec.flip_proportion, edges.size());
    CounterRng rng(spec.seed);
    // partial Fisher-Yates over the row-major edge list
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.bounded(edges.size() - i));
        std::swap(edges[i], edges[j]);
    }
    edges.resize(k);
    return edges;
}

/// Invert round(FP * |edges|) distinct edge pixels chosen by the seeded shuffle.
inline UnitCellBitmap apply_defects(const UnitCellBitmap& bitmap, const DefectSpec& spec)
{
    return bitmap.with_flipped(select_defect_pixels(bitmap, spec));
}

// ---------------------------------------------------------------------------
// File I/O

enum class BitmapFormat { text, pgm };

inline BitmapFormat format_from_path(const std::filesystem::path& path)
{
    return path.extension() == ".pgm" ? BitmapFormat::pgm : BitmapFormat::text;
}

/// Plain text: first line "<resolution>", then resolution rows of space separated 0/1.
inline std::string to_text(const UnitCellBitmap& bitmap)
{
    std::ostringstream os;
    const int n = bitmap.resolution();
    os << n << '\n';
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            if (c) os << ' ';
            os << static_cast<int>(bitmap.at(r, c));
        }
        os << '\n';
    }
    return os.str();
}

inline UnitCellBitmap parse_text_bitmap(std::istream& in)
{
    std::string line;
    std::size_t line_no = 0;
    auto next_nonempty = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
        }
        return false;
    };
    if (!next_nonempty()) throw ParseError("empty bitmap file", line_no);
    int n = 0;
    {
        std::istringstream hs(line);
        std::string extra;
        if (!(hs >> n) || (hs >> extra)) throw ParseError("expected a single resolution integer", line_no);
        if (n < 2) throw ParseError("resolution must be >= 2", line_no);
    }
    std::vector<std::uint8_t> cells;
    cells.reserve(static_cast<std::size_t>(n) * n);
    for (int r = 0; r < n; ++r) {
        if (!next_nonempty()) throw ParseError("expected " + std::to_string(n) + " rows, got " + std::to_string(r), line_no);
        std::istringstream rs(line);
        std::string tok;
        int count = 0;
        while (rs >> tok) {
            if (tok != "0" && tok != "1")
                throw ParseError("non-binary cell value '" + tok + "' at column " + std::to_string(count + 1), line_no);
            cells.push_back(tok == "1" ? 1 : 0);
            ++count;
        }
        if (count != n)
            throw ParseError("non-square grid: row has " + std::to_string(count) + " cells, expected " + std::to_string(n), line_no);
    }
    if (next_nonempty()) throw ParseError("non-square grid: trailing rows after " + std::to_string(n), line_no);
    return UnitCellBitmap(n, std::move(cells));
}

/// Binary PGM (P5) with maxval 1. Rows are stored top row first.
inline std::string to_pgm(const UnitCellBitmap& bitmap)
{
    const int n = bitmap.resolution();
    std::string out = "P5\n" + std::to_string(n) + " " + std::to_string(n) + "\n1\n";
    for (int r = n - 1; r >= 0; --r)
        for (int c = 0; c < n; ++c) out.push_back(static_cast<char>(bitmap.at(r, c)));
    return out;
}

inline UnitCellBitmap parse_pgm_bitmap(const std::string& data)
{
    std::size_t pos = 0;
    auto read_token = [&]() -> std::string {
        for (;;) {
            while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
            if (pos < data.size() && data[pos] == '#') {
                while (pos < data.size() && data[pos] != '\n') ++pos;
                continue;
            }
            break;
        }
        const std::size_t start = pos;
        while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
        return data.substr(start, pos - start);
    };
    if (read_token() != "P5") throw ParseError("not a binary PGM (missing P5 magic)", 1);
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(read_token());
        h = std::stoi(read_token());
        maxval = std::stoi(read_token());
    } catch (const std::exception&) {
        throw ParseError("malformed PGM header", 1);
    }
    if (w != h) throw ParseError("non-square PGM image", 1);
    if (w < 2) throw ParseError("resolution must be >= 2", 1);
    if (maxval != 1) throw ParseError("PGM maxval must be 1", 1);
    ++pos; // single whitespace after maxval
    const std::size_t need = static_cast<std::size_t>(w) * h;
    if (data.size() < pos + need) throw ParseError("truncated PGM payload at byte offset " + std::to_string(data.size()), 1);
    std::vector<std::uint8_t> cells(need);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const std::size_t offset = pos + static_cast<std::size_t>(r) * w + c;
            const auto v = static_cast<unsigned char>(data[offset]);
            if (v > 1) throw ParseError("non-binary PGM value at byte offset " + std::to_string(offset), 1);
            cells[static_cast<std::size_t>(h - 1 - r) * w + c] = v;
        }
    }
    return UnitCellBitmap(w, std::move(cells));
}

inline UnitCellBitmap read_bitmap(const std::filesystem::path& path, BitmapFormat format)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open bitmap file " + path.string());
    if (format == BitmapFormat::text) return parse_text_bitmap(in);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_pgm_bitmap(data);
}

inline UnitCellBitmap read_bitmap(const std::filesystem::path& path)
{
    return read_bitmap(path, format_from_path(path));
}

inline void write_bitmap(const std::filesystem::path& path, const UnitCellBitmap& bitmap, BitmapFormat format)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write bitmap file " + path.string());
    out << (format == BitmapFormat::text ? to_text(bitmap) : to_pgm(bitmap));
}

inline void write_bitmap(const std::filesystem::path& path, const UnitCellBitmap& bitmap)
{
    write_bitmap(path, bitmap, format_from_path(path));
}

} // namespace phonon_uq
