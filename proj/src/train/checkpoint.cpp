#include "mvmae/train/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "mvmae/errors.hpp"

namespace mvmae::train {

namespace {

constexpr std::uint8_t kDtypeF64 = 1;
constexpr std::uint8_t kFlagDecay = 1, kFlagFirst = 2, kFlagSecond = 4;

template <class T>
void put(std::ostream& out, T v) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

void put_string(std::ostream& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
public:
    Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

    template <class T>
    T get() {
        unsigned char buf[sizeof(T)];
        read(buf, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
        T v;
        std::memcpy(&v, buf, sizeof(T));
        return v;
    }

    std::string get_string() {
        const auto n = get<std::uint32_t>();
        if (n > (1u << 24)) fail("string length " + std::to_string(n) + " implausible");
        std::string s(n, '\0');
        read(s.data(), n);
        return s;
    }

    void read(void* dst, std::size_t n) {
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) fail("truncated file");
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(path_ + ": corrupt checkpoint: " + what);
    }

private:
    std::istream& in_;
    std::string path_;
};

void put_tensor(std::ostream& out, const std::string& name, std::uint8_t flags, const Shape& shape,
                const std::vector<double>& data) {
    put_string(out, name);
    put<std::uint8_t>(out, kDtypeF64);
    put<std::uint8_t>(out, flags);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) put<std::uint64_t>(out, d);
    for (double v : data) put<double>(out, v);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write checkpoint " + path.string());
        out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
        put<std::uint32_t>(out, kCheckpointVersion);
        put<std::uint64_t>(out, ck.step);
        put<std::uint64_t>(out, ck.optimizer_steps);
        put<std::uint64_t>(out, ck.config_hash);
        auto meta = ck.meta;
        meta["rng"] = ck.rng_state;
        put<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
        for (const auto& [k, v] : meta) {
            put_string(out, k);
            put_string(out, v);
        }
        const auto params = ck.params.params();
        const bool moments = !ck.first_moment.values.empty();
        if (moments && (ck.first_moment.values.size() != params.size() ||
                        ck.second_moment.values.size() != params.size())) {
            throw ShapeError("checkpoint: optimizer moments do not match parameters");
        }
        put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size() * (moments ? 3 : 1)));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const auto& p = params[i];
            put_tensor(out, p.name, p.decay ? kFlagDecay : 0, p.value.shape, p.value.data);
            if (moments) {
                put_tensor(out, p.name, kFlagFirst, p.value.shape, ck.first_moment.values[i]);
                put_tensor(out, p.name, kFlagSecond, p.value.shape, ck.second_moment.values[i]);
            }
        }
        if (!out) throw IoError("failed writing checkpoint " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    Reader r(in, path.string());
    char magic[8];
    r.read(magic, 8);
    if (std::memcmp(magic, kCheckpointMagic, 8) != 0) r.fail("bad magic");
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw ValidationError(path.string() + ": checkpoint version " + std::to_string(version) +
                              " not supported (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    Checkpoint ck;
    ck.step = r.get<std::uint64_t>();
    ck.optimizer_steps = r.get<std::uint64_t>();
    ck.config_hash = r.get<std::uint64_t>();
    const auto n_meta = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_meta; ++i) {
        auto k = r.get_string();
        ck.meta[k] = r.get_string();
    }
    if (auto it = ck.meta.find("rng"); it != ck.meta.end()) {
        ck.rng_state = it->second;
        ck.meta.erase(it);
    }
    const auto n_tensors = r.get<std::uint32_t>();
    std::vector<std::vector<double>> first, second;
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        const std::string name = r.get_string();
        if (r.get<std::uint8_t>() != kDtypeF64) r.fail("unsupported dtype for " + name);
        const auto flags = r.get<std::uint8_t>();
        const auto ndim = r.get<std::uint32_t>();
        if (ndim > 8) r.fail("rank " + std::to_string(ndim) + " for " + name);
        Shape shape(ndim);
        for (auto& d : shape) d = r.get<std::uint64_t>();
        const std::size_t n = numel(shape);
        if (n > (std::size_t{1} << 32)) r.fail("tensor " + name + " too large");
        std::vector<double> data(n);
        for (double& v : data) v = r.get<double>();
        if (flags & kFlagFirst) {
            if (ck.params.size() == 0 || ck.params.params().back().name != name) r.fail("orphan moment " + name);
            first.push_back(std::move(data));
        } else if (flags & kFlagSecond) {
            if (ck.params.size() == 0 || ck.params.params().back().name != name) r.fail("orphan moment " + name);
            second.push_back(std::move(data));
        } else {
            ck.params.add(name, Tensor(shape, std::move(data)), (flags & kFlagDecay) != 0);
        }
    }
    if (!first.empty()) {
        if (first.size() != ck.params.size() || second.size() != ck.params.size()) r.fail("incomplete optimizer state");
        ck.first_moment.values = std::move(first);
        ck.second_moment.values = std::move(second);
    }
    if (in.peek() != std::char_traits<char>::eof()) r.fail("trailing bytes after tensor table");
    return ck;
}

}  // namespace mvmae::train
