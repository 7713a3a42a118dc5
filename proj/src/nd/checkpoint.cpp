// SPDX-License-Identifier: Apache-2.0
#include "geoprox/nd/checkpoint.hpp"

#include "geoprox/errors.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace geoprox::nd {
namespace {

constexpr std::array<char, 8> kMagic{'G', 'E', 'O', 'P', 'X', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    explicit Writer(std::ostream& os) : os_(os) {}

    template <typename T>
    void uint(T v)
    {
        std::array<char, sizeof(T)> bytes{};
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
        }
        os_.write(bytes.data(), bytes.size());
    }

    void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }

    void str(const std::string& s)
    {
        uint(static_cast<std::uint32_t>(s.size()));
        os_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

    void tensor(const Tensor& t)
    {
        uint(static_cast<std::uint32_t>(t.rank()));
        for (auto d : t.shape()) {
            uint(static_cast<std::uint64_t>(d));
        }
        for (std::size_t i = 0; i < t.size(); ++i) {
            f64(t.data()[i]);
        }
    }

private:
    std::ostream& os_;
};

class Reader {
public:
    Reader(std::istream& is, std::string path) : is_(is), path_(std::move(path)) {}

    template <typename T>
    T uint()
    {
        std::array<unsigned char, sizeof(T)> bytes{};
        read(bytes.data(), bytes.size());
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<T>(bytes[i]) << (8 * i);
        }
        return v;
    }

    double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }

    std::string str(std::size_t limit = 1u << 20)
    {
        const auto n = uint<std::uint32_t>();
        if (n > limit) {
            fail("string length " + std::to_string(n) + " exceeds limit");
        }
        std::string s(n, '\0');
        read(s.data(), n);
        return s;
    }

    Tensor tensor()
    {
        const auto rank = uint<std::uint32_t>();
        if (rank > 2) {
            fail("tensor rank " + std::to_string(rank));
        }
        std::vector<std::size_t> shape(rank);
        std::size_t total = 1;
        for (auto& d : shape) {
            d = static_cast<std::size_t>(uint<std::uint64_t>());
            total *= d;
        }
        if (total > (std::size_t{1} << 32)) {
            fail("tensor too large");
        }
        Tensor t(shape);
        for (std::size_t i = 0; i < total; ++i) {
            t.data()[i] = f64();
        }
        return t;
    }

    void read(void* dst, std::size_t n)
    {
        is_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is_.gcount()) != n) {
            fail("truncated file");
        }
    }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw DataError("checkpoint " + path_ + ": " + what);
    }

private:
    std::istream& is_;
    std::string path_;
};

} // namespace

const ParameterGroup* Checkpoint::group(const std::string& name) const
{
    for (const auto& g : groups) {
        if (g.name == name) {
            return &g;
        }
    }
    return nullptr;
}

const Tensor* Checkpoint::buffer(const std::string& name) const
{
    for (const auto& b : buffers) {
        if (b.name == name) {
            return &b.value;
        }
    }
    return nullptr;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw DataError("checkpoint: cannot open " + path.string() + " for writing");
    }
    Writer w(os);
    os.write(kMagic.data(), kMagic.size());
    w.uint(kVersion);
    w.uint(ckpt.seed);
    w.uint(ckpt.config_hash);
    w.uint(static_cast<std::uint64_t>(ckpt.config_text.size()));
    os.write(ckpt.config_text.data(), static_cast<std::streamsize>(ckpt.config_text.size()));
    w.uint(static_cast<std::uint32_t>(ckpt.groups.size()));
    for (const auto& g : ckpt.groups) {
        w.str(g.name);
        w.uint(static_cast<std::uint8_t>(g.trainable ? 1 : 0));
        w.uint(static_cast<std::uint32_t>(g.params.size()));
        for (const auto& p : g.params) {
            w.str(p.name);
            w.tensor(p.value);
        }
    }
    w.uint(static_cast<std::uint32_t>(ckpt.buffers.size()));
    for (const auto& b : ckpt.buffers) {
        w.str(b.name);
        w.tensor(b.value);
    }
    if (!os) {
        throw DataError("checkpoint: write failed for " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw DataError("checkpoint: cannot open " + path.string());
    }
    Reader r(is, path.string());
    std::array<char, 8> magic{};
    r.read(magic.data(), magic.size());
    if (magic != kMagic) {
        r.fail("bad magic");
    }
    if (const auto v = r.uint<std::uint32_t>(); v != kVersion) {
        r.fail("unsupported version " + std::to_string(v));
    }
    Checkpoint ckpt;
    ckpt.seed = r.uint<std::uint64_t>();
    ckpt.config_hash = r.uint<std::uint64_t>();
    const auto text_len = r.uint<std::uint64_t>();
    if (text_len > (1u << 24)) {
        r.fail("config text too large");
    }
    ckpt.config_text.resize(text_len);
    r.read(ckpt.config_text.data(), text_len);
    if (fnv1a64(ckpt.config_text) != ckpt.config_hash) {
        r.fail("config hash mismatch");
    }
    const auto n_groups = r.uint<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_groups; ++i) {
        ParameterGroup g;
        g.name = r.str();
        g.trainable = r.uint<std::uint8_t>() != 0;
        const auto n = r.uint<std::uint32_t>();
        for (std::uint32_t j = 0; j < n; ++j) {
            auto name = r.str();
            g.params.emplace_back(std::move(name), r.tensor());
        }
        ckpt.groups.push_back(std::move(g));
    }
    const auto n_buffers = r.uint<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_buffers; ++i) {
        auto name = r.str();
        ckpt.buffers.push_back({std::move(name), r.tensor()});
    }
    return ckpt;
}

std::uint64_t fnv1a64(std::string_view text) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace geoprox::nd
