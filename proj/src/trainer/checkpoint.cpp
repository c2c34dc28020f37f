#include <json.hpp>

#include <cstring>
#include <fstream>
#include <map>

#include "arit/trainer/trainer.hpp"

namespace arit::trainer {

namespace {

constexpr char kMagic[4] = {'A', 'R', 'I', 'T'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw DataError("checkpoint: truncated file");
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

void put_f32(std::ostream& out, const float* data, size_t count) {
    for (size_t i = 0; i < count; ++i) {
        uint32_t bits;
        std::memcpy(&bits, &data[i], 4);
        put_u32(out, bits);
    }
}

void get_f32(std::istream& in, float* data, size_t count) {
    for (size_t i = 0; i < count; ++i) {
        const uint32_t bits = get_u32(in);
        std::memcpy(&data[i], &bits, 4);
    }
}

void write_block(std::ostream& out, const std::string& name, const std::vector<int>& shape,
                 const float* data, size_t count) {
    put_u32(out, uint32_t(name.size()));
    out.write(name.data(), std::streamsize(name.size()));
    put_u32(out, uint32_t(shape.size()));
    size_t expect = 1;
    for (int d : shape) {
        put_u32(out, uint32_t(d));
        expect *= size_t(d);
    }
    if (expect != count) throw DataError("checkpoint: shape/count mismatch on write");
    put_f32(out, data, count);
}

struct Block {
    std::vector<int> shape;
    std::vector<float> data;
};

// Gathers the optimizer's moment vectors under stable derived names.
void moment_blocks(nn::Adam<float>& opt, const std::string& prefix,
                   std::vector<std::pair<std::string, std::pair<std::vector<int>, const float*>>>&
                       out) {
    const auto& params = opt.params();
    for (size_t i = 0; i < params.size(); ++i) {
        out.push_back({prefix + ".m." + params[i]->name,
                       {params[i]->shape, opt.moments_m()[i].data()}});
        out.push_back({prefix + ".v." + params[i]->name,
                       {params[i]->shape, opt.moments_v()[i].data()}});
    }
}

} // namespace

void write_checkpoint(const std::string& path, const TranslationState& state) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("checkpoint: cannot open for write: " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);

    TranslationState& st = const_cast<TranslationState&>(state);
    nlohmann::json meta;
    meta["config"] = nlohmann::json::parse(state.config.to_json());
    meta["epoch"] = state.epoch;
    meta["rng_state"] = std::to_string(state.rng.state());
    meta["adam_t_gen"] = st.opt_gen.timestep();
    meta["adam_t_disc"] = st.opt_disc.timestep();
    const std::string meta_text = meta.dump();
    put_u32(out, uint32_t(meta_text.size()));
    out.write(meta_text.data(), std::streamsize(meta_text.size()));

    std::vector<nn::Param<float>*> params;
    st.model.collect_all(params);
    for (nn::Param<float>* p : params)
        write_block(out, p->name, p->shape, p->value.data(), p->count());

    std::vector<std::pair<std::string, std::pair<std::vector<int>, const float*>>> moments;
    moment_blocks(st.opt_gen, "opt_g", moments);
    moment_blocks(st.opt_disc, "opt_d", moments);
    for (const auto& [name, block] : moments) {
        size_t count = 1;
        for (int d : block.first) count *= size_t(d);
        write_block(out, name, block.first, block.second, count);
    }
    if (!out) throw DataError("checkpoint: write failed: " + path);
}

std::unique_ptr<TranslationState> read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("checkpoint: cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("checkpoint: bad magic (wrong format or corrupted header)");
    const uint32_t version = get_u32(in);
    if (version != kVersion)
        throw DataError("checkpoint: unsupported version " + std::to_string(version));

    const uint32_t meta_len = get_u32(in);
    std::string meta_text(meta_len, '\0');
    in.read(meta_text.data(), meta_len);
    if (!in) throw DataError("checkpoint: truncated metadata");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint: bad metadata: ") + e.what());
    }

    TrainConfig cfg = TrainConfig::from_json(meta.at("config").dump());
    auto state = std::make_unique<TranslationState>(cfg);
    state->epoch = meta.value("epoch", 0LL);
    if (meta.contains("rng_state"))
        state->rng.set_state(std::stoull(meta.at("rng_state").get<std::string>()));
    state->opt_gen.timestep() = meta.value("adam_t_gen", 0LL);
    state->opt_disc.timestep() = meta.value("adam_t_disc", 0LL);

    std::map<std::string, Block> blocks;
    while (true) {
        in.peek();
        if (in.eof()) break;
        in.clear();
        const uint32_t name_len = get_u32(in);
        if (name_len > 4096) throw DataError("checkpoint: implausible block name length");
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const uint32_t rank = get_u32(in);
        if (rank > 8) throw DataError("checkpoint: implausible block rank");
        Block b;
        size_t count = 1;
        for (uint32_t i = 0; i < rank; ++i) {
            b.shape.push_back(int(get_u32(in)));
            count *= size_t(b.shape.back());
        }
        b.data.resize(count);
        get_f32(in, b.data.data(), count);
        blocks.emplace(std::move(name), std::move(b));
    }

    auto restore = [&blocks](const std::string& name, float* dst, size_t count) {
        auto it = blocks.find(name);
        if (it == blocks.end()) throw DataError("checkpoint: missing block " + name);
        if (it->second.data.size() != count)
            throw DataError("checkpoint: size mismatch in block " + name);
        std::memcpy(dst, it->second.data.data(), count * sizeof(float));
    };

    std::vector<nn::Param<float>*> params;
    state->model.collect_all(params);
    for (nn::Param<float>* p : params) restore(p->name, p->value.data(), p->count());
    for (auto* opt : {&state->opt_gen, &state->opt_disc}) {
        const std::string prefix = opt == &state->opt_gen ? "opt_g" : "opt_d";
        const auto& ps = opt->params();
        for (size_t i = 0; i < ps.size(); ++i) {
            restore(prefix + ".m." + ps[i]->name, opt->moments_m()[i].data(), ps[i]->count());
            restore(prefix + ".v." + ps[i]->name, opt->moments_v()[i].data(), ps[i]->count());
        }
    }
    return state;
}

} // namespace arit::trainer
