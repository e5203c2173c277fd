#include "amc/nn/checkpoint.hpp"

#include <cstring>
#include <stdexcept>

namespace amc::nn {

namespace {
constexpr char kMagic[4] = {'M', 'O', 'D', 'M'};
constexpr uint16_t kVersion = 1;
}  // namespace

void write_network_spec(ByteWriter& w, const NetworkSpec& spec) {
    w.str(spec.name);
    w.u32(static_cast<uint32_t>(spec.input_shape.size()));
    for (int d : spec.input_shape) w.i32(d);
    w.u32(static_cast<uint32_t>(spec.layers.size()));
    for (const LayerSpec& l : spec.layers) {
        w.u8(static_cast<uint8_t>(l.kind));
        w.i32(l.units);
        w.i32(l.filters);
        w.i32(l.kh);
        w.i32(l.kw);
        w.i32(l.pool);
        w.i32(l.cells);
        w.u8(l.return_sequences ? 1 : 0);
        w.f64(l.rate);
        w.u32(static_cast<uint32_t>(l.inputs.size()));
        for (int j : l.inputs) w.i32(j);
    }
}

NetworkSpec read_network_spec(ByteReader& r) {
    NetworkSpec spec;
    spec.name = r.str();
    const uint32_t nd = r.u32();
    spec.input_shape.resize(nd);
    for (int& d : spec.input_shape) d = r.i32();
    const uint32_t nl = r.u32();
    spec.layers.resize(nl);
    for (LayerSpec& l : spec.layers) {
        l.kind = static_cast<LayerKind>(r.u8());
        l.units = r.i32();
        l.filters = r.i32();
        l.kh = r.i32();
        l.kw = r.i32();
        l.pool = r.i32();
        l.cells = r.i32();
        l.return_sequences = r.u8() != 0;
        l.rate = r.f64();
        const uint32_t ni = r.u32();
        l.inputs.resize(ni);
        for (int& j : l.inputs) j = r.i32();
    }
    return spec;
}

void write_network_params(ByteWriter& w, Network<float>& net) {
    auto dump = [&](std::vector<Param<float>*> ps) {
        w.u32(static_cast<uint32_t>(ps.size()));
        for (Param<float>* p : ps) {
            w.u32(static_cast<uint32_t>(p->value.size()));
            for (float v : p->value.v) w.f32(v);
        }
    };
    dump(net.params());
    dump(net.buffers());
}

void read_network_params(ByteReader& r, Network<float>& net) {
    auto fill = [&](std::vector<Param<float>*> ps) {
        const uint32_t n = r.u32();
        if (n != ps.size()) throw std::runtime_error("checkpoint: tensor count mismatch");
        for (Param<float>* p : ps) {
            const uint32_t count = r.u32();
            if (count != p->value.size()) throw std::runtime_error("checkpoint: tensor size mismatch");
            for (float& v : p->value.v) v = r.f32();
        }
    };
    fill(net.params());
    fill(net.buffers());
}

void save_checkpoint(Network<float>& net, uint64_t init_seed, const std::filesystem::path& path) {
    ByteWriter w;
    w.bytes(kMagic, 4);
    w.u16(kVersion);
    w.u64(init_seed);
    write_network_spec(w, net.spec());
    write_network_params(w, net);
    w.u64(fnv1a64(w.data().data(), w.size()));
    atomic_write_file(path, w.data());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    const auto buf = read_file(path);
    if (buf.size() < 14) throw std::runtime_error("checkpoint: file too short: " + path.string());
    if (std::memcmp(buf.data(), kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic: " + path.string());
    const uint64_t stored = ByteReader(buf.data() + buf.size() - 8, 8).u64();
    if (stored != fnv1a64(buf.data(), buf.size() - 8))
        throw std::runtime_error("checkpoint: checksum mismatch: " + path.string());
    ByteReader r(buf.data(), buf.size() - 8);
    char magic[4];
    r.bytes(magic, 4);
    if (r.u16() != kVersion) throw std::runtime_error("checkpoint: unsupported version");
    LoadedCheckpoint out;
    out.init_seed = r.u64();
    out.spec = read_network_spec(r);
    out.net = std::make_unique<Network<float>>(out.spec, out.init_seed);
    read_network_params(r, *out.net);
    if (r.remaining() != 0) throw std::runtime_error("checkpoint: trailing bytes");
    return out;
}

}  // namespace amc::nn
