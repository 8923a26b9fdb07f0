#include <cstring>
#include <fstream>
#include <vector>

#include <zlib.h>

#include "lesionkit/cnn.hpp"
#include "lesionkit/errors.hpp"

namespace lesionkit {

namespace {

constexpr char kMagic[8] = {'L', 'K', 'C', 'N', 'N', 'M', 'D', 'L'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back((v >> (8 * i)) & 0xFF);
}

void put_u64(std::vector<unsigned char>& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back((v >> (8 * i)) & 0xFF);
}

void put_f32(std::vector<unsigned char>& buf, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

struct Reader {
    const unsigned char* p;
    std::size_t remaining;
    std::string name;

    void need(std::size_t n) const {
        if (remaining < n) throw FormatError("truncated model file: " + name);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
        p += 4;
        remaining -= 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
        p += 8;
        remaining -= 8;
        return v;
    }
    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string str() {
        const std::uint32_t len = u32();
        need(len);
        std::string s(reinterpret_cast<const char*>(p), len);
        p += len;
        remaining -= len;
        return s;
    }
};

}  // namespace

void save_model(const ReferenceCnn& model, const std::filesystem::path& path) {
    const CnnArchitecture& arch = model.arch();
    std::vector<unsigned char> buf;
    buf.insert(buf.end(), kMagic, kMagic + sizeof(kMagic));
    put_u32(buf, kFormatVersion);
    put_u32(buf, static_cast<std::uint32_t>(arch.input_height));
    put_u32(buf, static_cast<std::uint32_t>(arch.input_width));
    put_u32(buf, static_cast<std::uint32_t>(arch.input_channels));
    put_u32(buf, static_cast<std::uint32_t>(arch.conv_channels.size()));
    for (int c : arch.conv_channels) put_u32(buf, static_cast<std::uint32_t>(c));
    put_u32(buf, static_cast<std::uint32_t>(arch.class_names.size()));
    for (const auto& name : arch.class_names) {
        put_u32(buf, static_cast<std::uint32_t>(name.size()));
        buf.insert(buf.end(), name.begin(), name.end());
    }
    put_u64(buf, model.params().total_parameters());
    for (const auto& block : model.params().blocks) {
        for (float v : block.values) put_f32(buf, v);
    }
    const auto crc = static_cast<std::uint32_t>(
        crc32(0L, buf.data(), static_cast<uInt>(buf.size())));
    put_u32(buf, crc);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

ReferenceCnn load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

    if (buf.size() < sizeof(kMagic) + 8 ||
        std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
        throw FormatError("not a model file: " + path.string());
    }
    // Checksum covers everything before the trailing CRC word.
    const std::size_t body = buf.size() - 4;
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) stored |= std::uint32_t(buf[body + i]) << (8 * i);
    const auto computed = static_cast<std::uint32_t>(
        crc32(0L, buf.data(), static_cast<uInt>(body)));
    if (stored != computed) {
        throw FormatError("model checksum mismatch: " + path.string());
    }

    Reader r{buf.data() + sizeof(kMagic), body - sizeof(kMagic), path.string()};
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion) {
        throw FormatError("unsupported model format version " +
                          std::to_string(version));
    }
    CnnArchitecture arch;
    arch.input_height = static_cast<int>(r.u32());
    arch.input_width = static_cast<int>(r.u32());
    arch.input_channels = static_cast<int>(r.u32());
    const std::uint32_t n_blocks = r.u32();
    arch.conv_channels.clear();
    for (std::uint32_t i = 0; i < n_blocks; ++i) {
        arch.conv_channels.push_back(static_cast<int>(r.u32()));
    }
    const std::uint32_t n_classes = r.u32();
    arch.class_names.clear();
    for (std::uint32_t i = 0; i < n_classes; ++i) {
        arch.class_names.push_back(r.str());
    }

    ReferenceCnn model(arch);  // validates the architecture
    const std::uint64_t declared = r.u64();
    if (declared != model.params().total_parameters()) {
        throw FormatError("model parameter payload does not match architecture: " +
                          path.string());
    }
    for (auto& block : model.params().blocks) {
        for (auto& v : block.values) v = r.f32();
    }
    if (r.remaining != 0) {
        throw FormatError("trailing bytes in model file: " + path.string());
    }
    return model;
}

}  // namespace lesionkit
