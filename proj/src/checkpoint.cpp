#include "phsfl/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace phsfl {

static_assert(std::endian::native == std::endian::little,
              "checkpoint i/o assumes a little-endian host");

namespace {

constexpr char kMagic[6] = {'P', 'H', 'S', 'F', 'L', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& is, const std::string& what) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v))
        throw std::runtime_error("checkpoint truncated while reading " + what);
    return v;
}

std::uint8_t kind_code(LayerKind k) { return static_cast<std::uint8_t>(k); }

LayerKind kind_from_code(std::uint8_t c) {
    if (c > static_cast<std::uint8_t>(LayerKind::Flatten))
        throw std::runtime_error("checkpoint has unknown layer kind " + std::to_string(c));
    return static_cast<LayerKind>(c);
}

}  // namespace

void save_model(const LayeredModel& model, const std::string& path) {
    model.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os.write(kMagic, sizeof kMagic);
    put_u32(os, static_cast<std::uint32_t>(model.input_shape.size()));
    for (std::size_t d : model.input_shape) put_u32(os, static_cast<std::uint32_t>(d));
    put_u32(os, static_cast<std::uint32_t>(model.layer_count()));
    for (const auto& spec : model.layers) {
        const std::uint8_t code = kind_code(spec.kind);
        os.write(reinterpret_cast<const char*>(&code), 1);
        put_u32(os, static_cast<std::uint32_t>(spec.in));
        put_u32(os, static_cast<std::uint32_t>(spec.out));
        put_u32(os, static_cast<std::uint32_t>(spec.kernel));
    }
    std::uint64_t total = model.total_params();
    os.write(reinterpret_cast<const char*>(&total), sizeof total);
    for (const auto& blk : model.params)
        os.write(reinterpret_cast<const char*>(blk.data()),
                 static_cast<std::streamsize>(blk.size() * sizeof(double)));
    if (!os) throw std::runtime_error("write failed for " + path);
}

LayeredModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    char magic[6];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw std::runtime_error("bad checkpoint magic in " + path);

    LayeredModel m;
    const std::uint32_t rank = get_u32(is, "input rank");
    for (std::uint32_t i = 0; i < rank; ++i) m.input_shape.push_back(get_u32(is, "input dim"));
    const std::uint32_t layer_count = get_u32(is, "layer count");
    for (std::uint32_t i = 0; i < layer_count; ++i) {
        std::uint8_t code = 0;
        if (!is.read(reinterpret_cast<char*>(&code), 1))
            throw std::runtime_error("checkpoint truncated in layer table");
        LayerSpec spec;
        spec.kind = kind_from_code(code);
        spec.in = get_u32(is, "layer in");
        spec.out = get_u32(is, "layer out");
        spec.kernel = get_u32(is, "layer kernel");
        m.layers.push_back(spec);
    }
    std::uint64_t total = 0;
    if (!is.read(reinterpret_cast<char*>(&total), sizeof total))
        throw std::runtime_error("checkpoint truncated before parameter count");
    m.params.resize(m.layers.size());
    std::uint64_t seen = 0;
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        m.params[i].resize(m.layers[i].param_count());
        seen += m.params[i].size();
        if (!is.read(reinterpret_cast<char*>(m.params[i].data()),
                     static_cast<std::streamsize>(m.params[i].size() * sizeof(double))))
            throw std::runtime_error("checkpoint truncated in parameter block " +
                                     std::to_string(i));
    }
    if (seen != total)
        throw std::runtime_error("checkpoint parameter count mismatch: header says " +
                                 std::to_string(total) + ", layers need " + std::to_string(seen));
    m.validate();
    return m;
}

}  // namespace phsfl
