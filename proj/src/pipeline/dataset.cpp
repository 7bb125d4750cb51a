#include "oct/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "oct/error.hpp"
#include "oct/io.hpp"
#include "oct/noise.hpp"
#include "oct/seed.hpp"

namespace oct {
namespace {

namespace fs = std::filesystem;

enum Stream : std::uint64_t { spec_stream = 10, texture_stream = 11, noise_stream = 12 };

std::vector<std::string> stems_in(const fs::path& dir, const std::string& ext) {
    if (!fs::is_directory(dir)) throw IoError("dataset directory missing: " + dir.string());
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path().stem().string());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

Sample make_sample(const std::string& id, const AppConfig& config, std::uint64_t seed) {
    std::mt19937_64 rng(derive_seed(seed, id, 0, spec_stream));
    Sample s;
    s.id = id;
    s.spec = random_phantom_spec(config.data.height, config.data.width, rng, config.data.texture_amplitude);
    ImagePair pair = generate_phantom(s.spec, derive_seed(seed, id, 0, texture_stream), id);
    s.clean = pair.clean;
    s.mask = pair.mask;
    s.multiframe = apply_shadow(pair.clean, pair.mask, AttenuationMap::from_spec(s.spec));
    s.multiframe.set_id(id);
    const Image field = sample_noise(config.data.height, config.data.width, config.noise,
                                     derive_seed(seed, id, 0, noise_stream));
    s.noisy = add_noise(s.multiframe, field);
    return s;
}

Dataset make_dataset(const AppConfig& config, std::uint64_t seed, const std::string& prefix) {
    Dataset out(static_cast<std::size_t>(config.data.count));
    parallel_for(out.size(), config.workers, [&](std::size_t i) {
        char id[64];
        std::snprintf(id, sizeof id, "%s_%04zu", prefix.c_str(), i);
        out[i] = make_sample(id, config, seed);
    });
    return out;
}

void save_dataset(const Dataset& dataset, const fs::path& root) {
    for (const char* sub : {"clean", "masks", "multiframe", "noisy", "specs"}) fs::create_directories(root / sub);
    for (const Sample& s : dataset) {
        save_image(s.clean, root / "clean" / (s.id + ".png"), BitDepth::u16);
        save_mask(s.mask, root / "masks" / (s.id + ".png"));
        save_image(s.multiframe, root / "multiframe" / (s.id + ".png"), BitDepth::u16);
        if (s.noisy) save_image(*s.noisy, root / "noisy" / (s.id + ".png"), BitDepth::u16);
        std::ofstream js(root / "specs" / (s.id + ".json"));
        if (!js) throw IoError("cannot write spec for " + s.id);
        js << nlohmann::json(s.spec).dump() << '\n';
    }
}

Dataset load_dataset(const fs::path& root) {
    if (!fs::is_directory(root)) throw IoError("dataset root missing: " + root.string());
    const auto ids = stems_in(root / "clean", ".png");
    for (const auto& [dir, ext] : {std::pair{"masks", ".png"}, {"multiframe", ".png"}, {"specs", ".json"}})
        if (stems_in(root / dir, ext) != ids)
            throw DataError(std::string("dataset ids in ") + dir + "/ do not match clean/");
    const bool has_noisy = fs::is_directory(root / "noisy");
    if (has_noisy && stems_in(root / "noisy", ".png") != ids)
        throw DataError("dataset ids in noisy/ do not match clean/");
    Dataset out;
    for (const auto& id : ids) {
        Sample s;
        s.id = id;
        std::ifstream js(root / "specs" / (id + ".json"));
        try {
            s.spec = nlohmann::json::parse(js).get<PhantomSpec>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError("bad spec for " + id + ": " + e.what());
        }
        s.clean = load_image(root / "clean" / (id + ".png"), ImageKind::clean);
        s.mask = load_mask(root / "masks" / (id + ".png"));
        s.multiframe = load_image(root / "multiframe" / (id + ".png"), ImageKind::multiframe);
        if (has_noisy) s.noisy = load_image(root / "noisy" / (id + ".png"), ImageKind::noisy);
        if (!s.clean.image().same_shape(s.mask.values()) || !s.clean.image().same_shape(s.multiframe.image()) ||
            s.spec.height != s.clean.image().height() || s.spec.width != s.clean.image().width())
            throw DataError("dataset sample " + id + " has inconsistent shapes");
        out.push_back(std::move(s));
    }
    return out;
}

const char* to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "unknown";
}

Split split_of(const std::string& id) {
    const auto bucket = fnv1a(id) % 100;
    if (bucket < 80) return Split::train;
    if (bucket < 90) return Split::validation;
    return Split::test;
}

DatasetSplit split_dataset(const Dataset& dataset) {
    DatasetSplit out;
    for (const Sample& s : dataset) {
        switch (split_of(s.id)) {
            case Split::train: out.train.push_back(s); break;
            case Split::validation: out.validation.push_back(s); break;
            case Split::test: out.test.push_back(s); break;
        }
    }
    return out;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    for (std::size_t t = 0; t < count; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace oct
