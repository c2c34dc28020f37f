#include "arit/imagecore/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

namespace arit::img {

void DatasetManifest::validate() const {
    std::set<int> seen;
    auto check = [&](const std::vector<int>& ids, const char* name) {
        for (int id : ids) {
            if (id < 0) throw DataError("manifest: negative frame id in split " + std::string(name));
            if (!seen.insert(id).second)
                throw DataError("manifest: frame " + std::to_string(id) +
                                " appears in more than one split entry");
        }
    };
    check(train, "train");
    check(val, "val");
    check(test, "test");
}

std::vector<int> DatasetManifest::all_frames() const {
    std::vector<int> out;
    out.reserve(train.size() + val.size() + test.size());
    out.insert(out.end(), train.begin(), train.end());
    out.insert(out.end(), val.begin(), val.end());
    out.insert(out.end(), test.begin(), test.end());
    std::sort(out.begin(), out.end());
    return out;
}

const std::vector<int>& DatasetManifest::split(const std::string& name) const {
    if (name == "train") return train;
    if (name == "val") return val;
    if (name == "test") return test;
    throw ConfigError("unknown split name: " + name);
}

DatasetManifest read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open manifest: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed manifest JSON in " + path + ": " + e.what());
    }

    DatasetManifest m;
    try {
        if (j.contains("root_path")) m.root_path = j["root_path"].get<std::string>();
        if (j.contains("resolution")) m.resolution = j["resolution"].get<int>();
        if (j.contains("seed")) m.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("generator_params"))
            for (auto& [k, v] : j["generator_params"].items())
                m.generator_params[k] = v.get<std::string>();
        if (!j.contains("splits")) throw DataError("manifest missing 'splits': " + path);
        const auto& s = j["splits"];
        if (s.contains("train")) m.train = s["train"].get<std::vector<int>>();
        if (s.contains("val")) m.val = s["val"].get<std::vector<int>>();
        if (s.contains("test")) m.test = s["test"].get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest field error in " + path + ": " + e.what());
    }
    m.validate();

    if (j.contains("frames")) {
        std::vector<int> declared;
        try {
            declared = j["frames"].get<std::vector<int>>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError("manifest 'frames' error in " + path + ": " + e.what());
        }
        std::sort(declared.begin(), declared.end());
        if (declared != m.all_frames())
            throw DataError("manifest: splits reference frame ids not in 'frames' (or vice versa): " +
                            path);
    }
    return m;
}

void write_manifest(const std::string& path, const DatasetManifest& manifest) {
    manifest.validate();
    nlohmann::json j;
    j["root_path"] = manifest.root_path;
    j["resolution"] = manifest.resolution;
    j["seed"] = manifest.seed;
    j["splits"] = {{"train", manifest.train}, {"val", manifest.val}, {"test", manifest.test}};
    j["generator_params"] = manifest.generator_params;
    std::ofstream f(path);
    if (!f) throw DataError("cannot open manifest for writing: " + path);
    f << j.dump(2) << "\n";
}

} // namespace arit::img
