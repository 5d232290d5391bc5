#include "tversky/io/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "tversky/io/pgm.hpp"

namespace tversky {

namespace {

void put_u32(std::string& out, uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.append(b, 4);
}

void put_i64(std::string& out, int64_t v) {
    char b[8];
    std::memcpy(b, &v, 8);
    out.append(b, 8);
}

struct Reader {
    const std::string& buf;
    size_t pos = 0;
    const std::string& path;

    void need(size_t n) const {
        if (pos + n > buf.size())
            throw std::runtime_error("checkpoint: truncated " + path + " at byte " +
                                     std::to_string(pos));
    }
    uint32_t u32() {
        need(4);
        uint32_t v;
        std::memcpy(&v, buf.data() + pos, 4);
        pos += 4;
        return v;
    }
    int64_t i64() {
        need(8);
        int64_t v;
        std::memcpy(&v, buf.data() + pos, 8);
        pos += 8;
        return v;
    }
    uint8_t u8() {
        need(1);
        return static_cast<uint8_t>(buf[pos++]);
    }
    std::string bytes(size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const std::vector<std::pair<std::string, const Tensor<float>*>>& tensors) {
    std::string out;
    put_u32(out, kCheckpointMagic);
    put_u32(out, kCheckpointVersion);
    std::string meta_str = meta.dump();
    put_u32(out, static_cast<uint32_t>(meta_str.size()));
    out += meta_str;
    put_u32(out, static_cast<uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        put_u32(out, static_cast<uint32_t>(name.size()));
        out += name;
        out.push_back(0);  // dtype: 0 = float32
        out.push_back(static_cast<char>(t->rank()));
        for (int64_t d : t->shape) put_i64(out, d);
        size_t nbytes = t->data.size() * sizeof(float);
        size_t at = out.size();
        out.resize(at + nbytes);
        std::memcpy(out.data() + at, t->data.data(), nbytes);
    }
    write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r{buf, 0, path};
    if (r.u32() != kCheckpointMagic) throw std::runtime_error("checkpoint: bad magic in " + path);
    uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    Checkpoint ck;
    uint32_t meta_len = r.u32();
    ck.meta = nlohmann::json::parse(r.bytes(meta_len));
    uint32_t count = r.u32();
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t name_len = r.u32();
        std::string name = r.bytes(name_len);
        uint8_t dtype = r.u8();
        if (dtype != 0)
            throw std::runtime_error("checkpoint: unsupported dtype tag in " + path);
        uint8_t rank = r.u8();
        std::vector<int64_t> shape;
        for (uint8_t d = 0; d < rank; ++d) shape.push_back(r.i64());
        Tensor<float> t(shape);
        size_t nbytes = t.data.size() * sizeof(float);
        std::string payload = r.bytes(nbytes);
        std::memcpy(t.data.data(), payload.data(), nbytes);
        ck.tensors.emplace(std::move(name), std::move(t));
    }
    return ck;
}

}  // namespace tversky
