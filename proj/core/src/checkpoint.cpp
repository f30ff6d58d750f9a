#include "gsdnet/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "gsdnet/errors.hpp"

namespace gsdnet {

namespace {
constexpr char kMagic[8] = {'G', 'S', 'D', 'N', 'C', 'K', 'P', '1'};

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw io_error("checkpoint: truncated stream");
    return v;
}
}  // namespace

const Eigen::VectorXd* CheckpointBlob::find(const std::string& name) const {
    for (const auto& [n, v] : arrays)
        if (n == name) return &v;
    return nullptr;
}

void save_checkpoint(const std::string& path, const CheckpointBlob& blob) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("save_checkpoint: cannot open " + path);
    os.write(kMagic, 8);
    put<std::uint64_t>(os, blob.manifest_json.size());
    os.write(blob.manifest_json.data(),
             static_cast<std::streamsize>(blob.manifest_json.size()));
    put<std::uint64_t>(os, blob.arrays.size());
    for (const auto& [name, arr] : blob.arrays) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<std::uint64_t>(os, static_cast<std::uint64_t>(arr.size()));
        os.write(reinterpret_cast<const char*>(arr.data()),
                 static_cast<std::streamsize>(arr.size()) *
                     static_cast<std::streamsize>(sizeof(double)));
    }
    if (!os) throw io_error("save_checkpoint: write failed for " + path);
}

CheckpointBlob load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("load_checkpoint: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw io_error("load_checkpoint: bad magic in " + path);
    CheckpointBlob blob;
    const auto mlen = get<std::uint64_t>(is);
    blob.manifest_json.resize(mlen);
    is.read(blob.manifest_json.data(), static_cast<std::streamsize>(mlen));
    if (!is) throw io_error("load_checkpoint: truncated manifest");
    const auto count = get<std::uint64_t>(is);
    blob.arrays.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto nlen = get<std::uint32_t>(is);
        std::string name(nlen, '\0');
        is.read(name.data(), nlen);
        const auto size = get<std::uint64_t>(is);
        Eigen::VectorXd arr(static_cast<Eigen::Index>(size));
        is.read(reinterpret_cast<char*>(arr.data()),
                static_cast<std::streamsize>(size) *
                    static_cast<std::streamsize>(sizeof(double)));
        if (!is) throw io_error("load_checkpoint: truncated array " + name);
        blob.arrays.emplace_back(std::move(name), std::move(arr));
    }
    return blob;
}

}  // namespace gsdnet
