#pragma once

#include "phonon_uq/dispersion.hpp"
#include "phonon_uq/model.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace phonon_uq {

inline std::string sha256_hex(const std::string& bytes)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

namespace detail {

class KeyWriter {
public:
    void put(double v) { put(std::bit_cast<std::uint64_t>(v)); }
    void put(std::uint64_t v)
    {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void put(int v) { put(static_cast<std::uint64_t>(static_cast<std::int64_t>(v))); }
    void put(const std::string& s)
    {
        put(static_cast<std::uint64_t>(s.size()));
        bytes_ += s;
    }
    void put(const ElasticMaterial& m)
    {
        for (double v : {m.density, m.youngs, m.poisson, m.bulk, m.shear, m.lame}) put(v);
    }
    const std::string& bytes() const { return bytes_; }

private:
    std::string bytes_;
};

} // namespace detail

/// Hash of everything that determines a DispersionResult.
inline std::string dispersion_cache_key(const UnitCellBitmap& bitmap, const MaterialPair& materials, const FemSettings& fem)
{
    detail::KeyWriter w;
    w.put(std::string("phonon-uq dispersion v1"));
    w.put(bitmap.resolution());
    w.put(std::string(bitmap.cells().begin(), bitmap.cells().end()));
    w.put(materials.soft);
    w.put(materials.hard);
    w.put(fem.lattice_constant);
    for (const auto& kp : fem.path()) {
        w.put(kp.k.kx);
        w.put(kp.k.ky);
        w.put(kp.arclength);
    }
    w.put(fem.n_bands);
    w.put(static_cast<int>(fem.solver.kind));
    w.put(fem.solver.dense_max_dofs);
    w.put(fem.solver.tolerance);
    w.put(fem.solver.block_size);
    w.put(fem.solver.max_subspace);
    return sha256_hex(w.bytes());
}

/**
 * Content-addressed store of dispersion results, one binary file per key.
 * Reads are lock-free; writes go to a temporary file that is renamed into
 * place under a mutex. The key is stored in the file and checked on read.
 */
class EvalCache {
public:
    explicit EvalCache(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

    std::optional<DispersionResult> get(const std::string& key, const std::vector<KPoint>& path, int n_bands) const
    {
        std::ifstream in(file_for(key), std::ios::binary);
        if (!in) return std::nullopt;
        std::string stored(64, '\0');
        std::uint64_t nk = 0, nb = 0;
        in.read(stored.data(), 64);
        in.read(reinterpret_cast<char*>(&nk), sizeof nk);
        in.read(reinterpret_cast<char*>(&nb), sizeof nb);
        if (!in || stored != key || nk != path.size() || nb != static_cast<std::uint64_t>(n_bands)) return std::nullopt;
        DispersionResult d;
        d.kpath = path;
        d.n_bands = n_bands;
        d.frequencies.resize(nk * nb);
        in.read(reinterpret_cast<char*>(d.frequencies.data()), static_cast<std::streamsize>(d.frequencies.size() * sizeof(double)));
        if (!in) return std::nullopt;
        ++hits_;
        return d;
    }

    void put(const std::string& key, const DispersionResult& d)
    {
        std::lock_guard lock(write_mutex_);
        const auto target = file_for(key);
        const auto tmp = target.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error("cannot write cache file " + tmp);
            const std::uint64_t nk = d.n_kpoints(), nb = static_cast<std::uint64_t>(d.n_bands);
            out.write(key.data(), 64);
            out.write(reinterpret_cast<const char*>(&nk), sizeof nk);
            out.write(reinterpret_cast<const char*>(&nb), sizeof nb);
            out.write(reinterpret_cast<const char*>(d.frequencies.data()), static_cast<std::streamsize>(d.frequencies.size() * sizeof(double)));
        }
        std::filesystem::rename(tmp, target);
    }

    std::size_t hits() const { return hits_.load(); }
    const std::filesystem::path& directory() const { return dir_; }

private:
    std::filesystem::path file_for(const std::string& key) const { return dir_ / (key + ".bin"); }

    std::filesystem::path dir_;
    std::mutex write_mutex_;
    mutable std::atomic<std::size_t> hits_{0};
};

/// Dispersion through the cache when one is given. `hit` reports whether it was reused.
inline DispersionResult cached_dispersion(const UnitCellBitmap& bitmap, const MaterialPair& materials, const FemSettings& fem,
                                          EvalCache* cache, bool* hit = nullptr)
{
    const auto path = fem.path();
    std::string key;
    if (cache) {
        key = dispersion_cache_key(bitmap, materials, fem);
        if (auto d = cache->get(key, path, fem.n_bands)) {
            if (hit) *hit = true;
            return *d;
        }
    }
    if (hit) *hit = false;
    const UnitCellSpec cell{bitmap, materials, fem.lattice_constant};
    DispersionResult d = dispersion(cell, path, fem.n_bands, fem.solver);
    if (cache) cache->put(key, d);
    return d;
}

} // namespace phonon_uq
