#include "oct/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <span>
#include <sstream>

#include "oct/error.hpp"

namespace oct {
namespace {

constexpr char kParamMagic[8] = {'O', 'C', 'T', 'P', '0', '0', '0', '1'};
constexpr char kAdamMagic[8] = {'O', 'C', 'T', 'A', '0', '0', '0', '1'};

template <class V>
void put(std::ostream& out, const V& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <class V>
V get(std::istream& in, const std::filesystem::path& path) {
    V v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(V))) throw DataError("truncated blob: " + path.string());
    return v;
}

void put_floats(std::ostream& out, std::span<const float> v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
}

void get_floats(std::istream& in, std::span<float> v, const std::filesystem::path& path) {
    if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float))))
        throw DataError("truncated blob: " + path.string());
}

std::string hex(std::uint64_t v) {
    std::ostringstream s;
    s << "0x" << std::hex << v;
    return s.str();
}

std::map<std::string, std::string> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint manifest: " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError("malformed manifest line: " + line);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError("checkpoint manifest lacks '" + key + "'");
    return it->second;
}

}  // namespace

void write_params(const ParamStore<float>& params, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write parameter blob: " + path.string());
    out.write(kParamMagic, sizeof(kParamMagic));
    put<std::uint64_t>(out, params.size());
    for (const auto& p : params) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(p.shape.size()));
        for (int d : p.shape) put<std::int32_t>(out, d);
        put_floats(out, p.value);
    }
    if (!out) throw IoError("failed writing parameter blob: " + path.string());
}

void read_params(ParamStore<float>& params, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open parameter blob: " + path.string());
    char magic[8];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kParamMagic, sizeof(magic)) != 0)
        throw DataError("not a parameter blob: " + path.string());
    const auto count = get<std::uint64_t>(in, path);
    if (count != params.size()) throw DataError("parameter count mismatch in " + path.string());
    for (auto& p : params) {
        const auto len = get<std::uint32_t>(in, path);
        if (len > 4096) throw DataError("corrupt parameter name in " + path.string());
        std::string name(len, '\0');
        if (!in.read(name.data(), len)) throw DataError("truncated blob: " + path.string());
        const auto ndims = get<std::uint32_t>(in, path);
        std::vector<int> shape(ndims);
        for (auto& d : shape) d = get<std::int32_t>(in, path);
        if (name != p.name || shape != p.shape)
            throw DataError("parameter layout mismatch at '" + p.name + "' in " + path.string());
        get_floats(in, p.value, path);
    }
}

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& meta, const UNet<float>& model,
                     const Adam* optimizer) {
    std::filesystem::create_directories(dir);
    write_params(model.params(), dir / "params.bin");
    AdamState state = optimizer ? optimizer->state() : AdamState{};
    {
        std::ofstream out(dir / "optimizer.bin", std::ios::binary);
        if (!out) throw IoError("cannot write optimizer state in " + dir.string());
        out.write(kAdamMagic, sizeof(kAdamMagic));
        put<std::int64_t>(out, state.step);
        put<std::uint64_t>(out, state.first_moment.size());
        for (std::size_t i = 0; i < state.first_moment.size(); ++i) {
            put<std::uint64_t>(out, state.first_moment[i].size());
            put_floats(out, state.first_moment[i]);
            put_floats(out, state.second_moment[i]);
        }
    }
    const UNetConfig& a = model.config();
    std::ofstream out(dir / "manifest.txt");
    if (!out) throw IoError("cannot write checkpoint manifest in " + dir.string());
    out << "# octrestore checkpoint\n";
    out << "role = " << meta.role << "\n";
    out << "in_channels = " << a.in_channels << "\n";
    out << "depth = " << a.depth << "\n";
    out << "base_channels = " << a.base_channels << "\n";
    out << "channel_schedule = ";
    for (std::size_t i = 0; i < a.channel_schedule.size(); ++i) out << (i ? "," : "") << a.channel_schedule[i];
    out << "\n";
    out << "conv_kernel = " << a.conv_kernel << "\n";
    out << "conv_stride = " << a.conv_stride << "\n";
    out << "pool_kernel = " << a.pool_kernel << "\n";
    out << "final_activation = " << to_string(a.final_activation) << "\n";
    out << "epoch = " << meta.epoch << "\n";
    out << "global_seed = " << meta.global_seed << "\n";
    out << "parameter_count = " << model.params().parameter_count() << "\n";
    out << "parameter_hash = " << hex(model.params().hash()) << "\n";
    out << "optimizer_state_hash = " << hex(state.hash()) << "\n";
    for (const auto& [k, v] : meta.config_snapshot) out << "config." << k << " = " << v << "\n";
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw IoError("checkpoint directory not found: " + dir.string());
    const auto kv = read_manifest(dir / "manifest.txt");
    Checkpoint meta;
    UNetConfig arch;
    try {
        meta.role = require(kv, "role");
        arch.in_channels = std::stoi(require(kv, "in_channels"));
        arch.depth = std::stoi(require(kv, "depth"));
        arch.base_channels = std::stoi(require(kv, "base_channels"));
        arch.channel_schedule.clear();
        std::stringstream ss(require(kv, "channel_schedule"));
        for (std::string item; std::getline(ss, item, ',');) arch.channel_schedule.push_back(std::stoi(item));
        arch.conv_kernel = std::stoi(require(kv, "conv_kernel"));
        arch.conv_stride = std::stoi(require(kv, "conv_stride"));
        arch.pool_kernel = std::stoi(require(kv, "pool_kernel"));
        arch.final_activation = final_activation_from_string(require(kv, "final_activation"));
        meta.epoch = std::stoi(require(kv, "epoch"));
        meta.global_seed = std::stoull(require(kv, "global_seed"));
    } catch (const std::logic_error& e) {
        throw DataError(std::string("corrupt checkpoint manifest: ") + e.what());
    } catch (const ConfigError& e) {
        throw DataError(std::string("corrupt checkpoint manifest: ") + e.what());
    }
    for (const auto& [k, v] : kv)
        if (k.rfind("config.", 0) == 0) meta.config_snapshot[k.substr(7)] = v;
    meta.architecture = arch;

    UNet<float> model(arch);
    read_params(model.params(), dir / "params.bin");
    if (hex(model.params().hash()) != require(kv, "parameter_hash"))
        throw DataError("checkpoint parameters do not match the manifest hash: " + dir.string());

    AdamState state;
    std::ifstream in(dir / "optimizer.bin", std::ios::binary);
    if (!in) throw IoError("missing optimizer.bin in checkpoint " + dir.string());
    {
        const auto path = dir / "optimizer.bin";
        char magic[8];
        if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kAdamMagic, sizeof(magic)) != 0)
            throw DataError("not an optimizer blob: " + path.string());
        state.step = get<std::int64_t>(in, path);
        const auto count = get<std::uint64_t>(in, path);
        if (count != 0 && count != model.params().size()) throw DataError("optimizer state size mismatch");
        for (std::uint64_t i = 0; i < count; ++i) {
            const auto n = get<std::uint64_t>(in, path);
            if (n != model.params()[static_cast<int>(i)].value.size()) throw DataError("optimizer moment size mismatch");
            state.first_moment.emplace_back(n);
            state.second_moment.emplace_back(n);
            get_floats(in, state.first_moment.back(), path);
            get_floats(in, state.second_moment.back(), path);
        }
        if (hex(state.hash()) != require(kv, "optimizer_state_hash"))
            throw DataError("optimizer state does not match the manifest hash: " + dir.string());
    }
    return LoadedCheckpoint{std::move(meta), std::move(model), std::move(state)};
}

}  // namespace oct
