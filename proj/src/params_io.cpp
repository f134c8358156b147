#include "moetrack/params_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace moetrack {

namespace {

constexpr char kMagic[4] = {'M', 'T', 'K', 'P'};
constexpr uint32_t kVersion = 1;

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f64(std::vector<uint8_t>& out, double v) {
    put_u64(out, std::bit_cast<uint64_t>(v));
}

struct Reader {
    const std::vector<uint8_t>& b;
    size_t pos = 0;

    void need(size_t n) const {
        MTK_CONFIG_REQUIRE(pos + n <= b.size(), "parameter container: truncated file");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[pos + static_cast<size_t>(i)]) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[pos + static_cast<size_t>(i)]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str(size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(&b[pos]), n);
        pos += n;
        return s;
    }
};

} // namespace

std::vector<uint8_t> serialize_params(EncoderParams& enc, TrackerParams& trk) {
    ParamRegistry reg = collect_params(enc);
    const ParamRegistry treg = collect_params(trk);
    reg.insert(reg.end(), treg.begin(), treg.end());

    std::vector<uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<uint32_t>(enc.width));
    put_u32(out, static_cast<uint32_t>(enc.depth));
    put_u32(out, static_cast<uint32_t>(enc.n_common));
    put_u32(out, static_cast<uint32_t>(enc.n_specific));
    put_u64(out, reg.size());
    for (const ParamRef& p : reg) {
        put_u32(out, static_cast<uint32_t>(p.name.size()));
        out.insert(out.end(), p.name.begin(), p.name.end());
        put_u32(out, static_cast<uint32_t>(p.mat->rows));
        put_u32(out, static_cast<uint32_t>(p.mat->cols));
        for (double v : p.mat->d) put_f64(out, v);
    }
    return out;
}

void deserialize_params(const std::vector<uint8_t>& bytes, EncoderParams& enc,
                        TrackerParams& trk) {
    Reader r{bytes};
    r.need(4);
    MTK_CONFIG_REQUIRE(std::memcmp(bytes.data(), kMagic, 4) == 0,
                       "parameter container: bad magic");
    r.pos = 4;
    MTK_CONFIG_REQUIRE(r.u32() == kVersion, "parameter container: unsupported version");
    const uint32_t width = r.u32();
    const uint32_t depth = r.u32();
    const uint32_t n_common = r.u32();
    const uint32_t n_specific = r.u32();
    MTK_CONFIG_REQUIRE(width == static_cast<uint32_t>(enc.width) &&
                           depth == static_cast<uint32_t>(enc.depth) &&
                           n_common == static_cast<uint32_t>(enc.n_common) &&
                           n_specific == static_cast<uint32_t>(enc.n_specific),
                       "parameter container: header does not match the configured model");
    const uint64_t count = r.u64();

    ParamRegistry reg = collect_params(enc);
    const ParamRegistry treg = collect_params(trk);
    reg.insert(reg.end(), treg.begin(), treg.end());
    MTK_CONFIG_REQUIRE(count == reg.size(),
                       "parameter container: block count does not match the model");
    for (const ParamRef& p : reg) {
        const uint32_t name_len = r.u32();
        const std::string name = r.str(name_len);
        MTK_CONFIG_REQUIRE(name == p.name,
                           "parameter container: expected block '" + p.name + "', found '" +
                               name + "'");
        const uint32_t rows = r.u32();
        const uint32_t cols = r.u32();
        MTK_CONFIG_REQUIRE(rows == static_cast<uint32_t>(p.mat->rows) &&
                               cols == static_cast<uint32_t>(p.mat->cols),
                           "parameter container: block '" + p.name + "' has wrong shape");
        for (double& v : p.mat->d) v = r.f64();
    }
    MTK_CONFIG_REQUIRE(r.pos == bytes.size(), "parameter container: trailing bytes");
}

void save_params(const std::string& path, EncoderParams& enc, TrackerParams& trk) {
    const std::vector<uint8_t> bytes = serialize_params(enc, trk);
    std::ofstream f(path, std::ios::binary);
    MTK_CONFIG_REQUIRE(f.good(), "cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    MTK_CONFIG_REQUIRE(f.good(), "write failed: " + path);
}

void load_params(const std::string& path, EncoderParams& enc, TrackerParams& trk) {
    std::ifstream f(path, std::ios::binary);
    MTK_CONFIG_REQUIRE(f.good(), "cannot open: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    deserialize_params(bytes, enc, trk);
}

} // namespace moetrack
