#include "arit/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "arit/imagecore/lumen.hpp"

namespace arit::cli {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::map<std::string, std::string> with_report_keys(std::map<std::string, std::string> m) {
    m["report.formats"] = "json,csv,png";
    m["report.timestamp"] = "false";
    return m;
}

std::map<std::string, std::string> make_defaults(const std::string& sub) {
    if (sub == "gen-data") {
        std::map<std::string, std::string> m = {
            {"data.seed", "0"}, {"data.frames", "70"}, {"data.resolution", "64"}};
        for (const auto& [k, v] : img::LumenParams{}.to_map()) m["lumen." + k] = v;
        return m;
    }
    if (sub == "corrupt") {
        return {{"corrupt.seed", "0"},
                {"corrupt.severity_lo", "1"},
                {"corrupt.severity_hi", "5"},
                {"corrupt.force_zero_intensity", "false"},
                {"corrupt.kind", ""},
                {"corrupt.severity", "3"},
                {"corrupt.intensity", "1"},
                {"corrupt.angle", "0"}};
    }
    if (sub == "pseudo") {
        return {{"pseudo.split", "train"},       {"pseudo.window", "25"},
                {"pseudo.init_stride", "4"},     {"pseudo.supervision_views", "5"},
                {"pseudo.steps", "200"},         {"pseudo.step_size", "0.05"},
                {"pseudo.style_weight", "1"},    {"pseudo.extractor_seed", "0"}};
    }
    if (sub == "train") {
        return {{"train.epochs", "20"},
                {"train.batch_size", "4"},
                {"train.lr_generator", "0.0002"},
                {"train.lr_discriminator", "0.0002"},
                {"train.lambda_gan", "1"},
                {"train.lambda_cyc", "10"},
                {"train.lambda_pair", "1"},
                {"train.lambda_nce", "1"},
                {"train.patches_p", "64"},
                {"train.patches_m", "64"},
                {"train.tau", "0.07"},
                {"train.decoupling", "true"},
                {"train.resilient", "true"},
                {"train.non_saturating", "true"},
                {"train.seed", "0"},
                {"train.checkpoint_interval", "0"},
                {"model.gen_base", "32"},
                {"model.gen_downsamples", "2"},
                {"model.gen_resblocks", "4"},
                {"model.disc_base", "32"},
                {"model.disc_layers", "3"},
                {"model.head_proj", "64"},
                {"model.head_hidden", "64"}};
    }
    if (sub == "translate") return {};
    if (sub == "eval") {
        return with_report_keys(
            {{"eval.embedder_seed", "0"}, {"eval.kid_seed", "0"}, {"eval.psnr_cap", "99"}});
    }
    if (sub == "depth-eval") {
        return with_report_keys({{"depth.epochs", "20"},
                                 {"depth.batch", "4"},
                                 {"depth.lr", "0.001"},
                                 {"depth.seed", "0"},
                                 {"depth.base", "16"},
                                 {"depth.train_split", "train"},
                                 {"depth.eval_split", "test"}});
    }
    if (sub == "register") {
        return with_report_keys({{"register.split", "test"},
                                 {"register.threshold_mm", "5"},
                                 {"register.embedder_seed", "0"}});
    }
    if (sub == "bottleneck") {
        return with_report_keys({{"bottleneck.split", "test"},
                                 {"bottleneck.severity", "3"},
                                 {"bottleneck.intensity", "1"},
                                 {"bottleneck.seed", "0"}});
    }
    if (sub == "ablate") {
        return with_report_keys({{"ablate.seeds", "0,1,2"},
                                 {"ablate.epochs", "20"},
                                 {"ablate.batch_size", "4"},
                                 {"ablate.gen_base", "32"},
                                 {"ablate.disc_base", "32"},
                                 {"ablate.lr_generator", "0.0002"},
                                 {"ablate.lr_discriminator", "0.0002"},
                                 {"ablate.patches_p", "64"},
                                 {"ablate.patches_m", "64"},
                                 {"ablate.embedder_seed", "0"}});
    }
    throw UsageError("unknown subcommand: " + sub);
}

} // namespace

const std::string& RunConfig::raw(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw ConfigError(subcommand + ": unknown config key: " + key);
    return it->second;
}

long long RunConfig::get_int(const std::string& key) const {
    const std::string& v = raw(key);
    size_t pos = 0;
    long long out = 0;
    try {
        out = std::stoll(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key + ": not an integer: '" + v + "'");
    }
    if (pos != v.size()) throw ConfigError(key + ": not an integer: '" + v + "'");
    return out;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
    const std::string& v = raw(key);
    size_t pos = 0;
    unsigned long long out = 0;
    try {
        out = std::stoull(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key + ": not a non-negative integer: '" + v + "'");
    }
    if (pos != v.size() || v.find('-') != std::string::npos)
        throw ConfigError(key + ": not a non-negative integer: '" + v + "'");
    return out;
}

double RunConfig::get_double(const std::string& key) const {
    const std::string& v = raw(key);
    size_t pos = 0;
    double out = 0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key + ": not a number: '" + v + "'");
    }
    if (pos != v.size()) throw ConfigError(key + ": not a number: '" + v + "'");
    return out;
}

bool RunConfig::get_bool(const std::string& key) const {
    std::string v = raw(key);
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": not a boolean: '" + raw(key) + "'");
}

std::string RunConfig::canonical_text() const {
    std::ostringstream out;
    for (const auto& [k, v] : values) out << k << " = " << v << "\n";
    return out.str();
}

std::string RunConfig::hash() const {
    // FNV-1a, 64 bit.
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : canonical_text()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

const std::map<std::string, std::string>& default_config(const std::string& subcommand) {
    static std::map<std::string, std::map<std::string, std::string>> cache;
    auto it = cache.find(subcommand);
    if (it == cache.end()) it = cache.emplace(subcommand, make_defaults(subcommand)).first;
    return it->second;
}

std::vector<std::string> known_subcommands() {
    return {"gen-data", "corrupt",    "pseudo",   "train",      "translate",
            "eval",     "depth-eval", "register", "bottleneck", "ablate"};
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.erase(hash_pos);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[')
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": sections are not supported; use flat dotted keys");
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (!out.emplace(key, value).second)
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" +
                              key + "'");
    }
    return out;
}

RunConfig resolve_config(const std::string& subcommand, const std::string& config_path,
                         const std::vector<std::string>& overrides) {
    RunConfig cfg;
    cfg.subcommand = subcommand;
    cfg.values = default_config(subcommand);

    auto apply = [&](const std::string& key, const std::string& value, const std::string& from) {
        auto it = cfg.values.find(key);
        if (it == cfg.values.end())
            throw ConfigError(subcommand + ": unknown config key '" + key + "' (" + from + ")");
        it->second = value;
    };

    if (!config_path.empty()) {
        std::ifstream in(config_path, std::ios::binary);
        if (!in) throw ConfigError("cannot read config file: " + config_path);
        std::ostringstream text;
        text << in.rdbuf();
        for (const auto& [k, v] : parse_config_text(text.str())) apply(k, v, config_path);
    }
    for (const std::string& item : overrides) {
        const size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + item + "'");
        apply(trim(item.substr(0, eq)), trim(item.substr(eq + 1)), "--set");
    }
    return cfg;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

} // namespace arit::cli
