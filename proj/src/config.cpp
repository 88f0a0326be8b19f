#include "polymer/config.hpp"

#include <fstream>
#include <map>
#include <set>

namespace polymer {

namespace {

const std::vector<std::string> kExperiments = {
    "validate",  "lln",       "pinning",   "midpoint", "variance",
    "clt",       "blocks",    "near-vertical", "ldp",  "influence",
    "efron-stein", "lindeberg", "excursion", "couple-demo"};

const std::set<std::string> kCommonKeys = {"experiment", "model", "mode",     "geometry",
                                           "seed",       "replicates", "threads", "out",
                                           "dump_env"};

const std::map<std::string, std::set<std::string>>& experiment_params() {
    static const std::map<std::string, std::set<std::string>> table = {
        {"validate", {"instances"}},
        {"lln", {"n_list"}},
        {"pinning", {"n", "s1", "s2_list"}},
        {"midpoint", {"n", "k_list"}},
        {"variance", {"n_list"}},
        {"clt", {"n"}},
        {"blocks", {"n", "J", "K", "eps_hwy"}},
        {"near-vertical", {"n_list", "y_rule"}},
        {"ldp", {"t_list", "delta"}},
        {"influence", {"n", "rows", "x_max", "B_low", "B_high", "epsilon"}},
        {"efron-stein", {"n"}},
        {"lindeberg", {"n", "J", "K", "eps_list"}},
        {"excursion", {"n"}},
        {"couple-demo", {"u", "v", "u2", "v2", "draws"}},
    };
    return table;
}

DistributionSpec parse_distribution(const json& j, const std::string& path) {
    if (!j.is_object())
        throw ConfigInvalid(path + ": expected an object");
    for (const auto& [key, _] : j.items())
        if (key != "family" && key != "rate" && key != "shape" && key != "value")
            throw ConfigInvalid(path + "." + key + ": unknown key");
    if (!j.contains("family") || !j["family"].is_string())
        throw ConfigInvalid(path + ".family: expected a string");
    const std::string family = j["family"].get<std::string>();
    auto number = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_number())
            throw ConfigInvalid(path + "." + key + ": expected a number");
        return j[key].get<double>();
    };
    DistributionSpec spec;
    if (family == "exponential") {
        spec = DistributionSpec::exponential(number("rate"));
        if (j.contains("shape") || j.contains("value"))
            throw ConfigInvalid(path + ": exponential takes only 'rate'");
    } else if (family == "gamma") {
        spec = DistributionSpec::gamma(number("shape"), number("rate"));
        if (j.contains("value"))
            throw ConfigInvalid(path + ": gamma takes 'shape' and 'rate'");
    } else if (family == "constant") {
        spec = DistributionSpec::constant(number("value"));
        if (j.contains("rate") || j.contains("shape"))
            throw ConfigInvalid(path + ": constant takes only 'value'");
    } else {
        throw ConfigInvalid(path + ".family: unknown family '" + family + "'");
    }
    try {
        spec.validate();
    } catch (const InvalidSpec& e) {
        throw ConfigInvalid(path + ": " + e.what());
    }
    return spec;
}

json distribution_to_json(const DistributionSpec& d) {
    switch (d.family) {
    case DistributionSpec::Family::Exponential:
        return json{{"family", "exponential"}, {"rate", d.p1}};
    case DistributionSpec::Family::Gamma:
        return json{{"family", "gamma"}, {"shape", d.p1}, {"rate", d.p2}};
    case DistributionSpec::Family::Constant:
    default:
        return json{{"family", "constant"}, {"value", d.p1}};
    }
}

} // namespace

const std::vector<std::string>& known_experiments() { return kExperiments; }

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
    if (!doc.is_object())
        throw ConfigInvalid("config: expected a JSON object");
    ExperimentConfig cfg;
    if (!doc.contains("experiment") || !doc["experiment"].is_string())
        throw ConfigInvalid("experiment: expected a string");
    cfg.experiment = doc["experiment"].get<std::string>();
    const auto& table = experiment_params();
    const auto it = table.find(cfg.experiment);
    if (it == table.end())
        throw ConfigInvalid("experiment: unknown experiment '" + cfg.experiment + "'");

    for (const auto& [key, _] : doc.items())
        if (!kCommonKeys.count(key) && !it->second.count(key))
            throw ConfigInvalid(key + ": unknown key for experiment '" + cfg.experiment + "'");

    if (doc.contains("model")) {
        const json& m = doc["model"];
        if (!m.is_object())
            throw ConfigInvalid("model: expected an object");
        for (const auto& [key, _] : m.items())
            if (key != "bulk" && key != "vertical")
                throw ConfigInvalid("model." + key + ": unknown key");
        if (!m.contains("bulk") || !m.contains("vertical"))
            throw ConfigInvalid("model: needs 'bulk' and 'vertical'");
        cfg.model.bulk = parse_distribution(m["bulk"], "model.bulk");
        cfg.model.vertical = parse_distribution(m["vertical"], "model.vertical");
    }
    if (doc.contains("mode")) {
        const std::string mode = doc["mode"].is_string() ? doc["mode"].get<std::string>() : "";
        if (mode == "positive")
            cfg.mode = Mode::PositiveTemperature;
        else if (mode == "zero")
            cfg.mode = Mode::ZeroTemperature;
        else
            throw ConfigInvalid("mode: expected 'positive' or 'zero'");
    }
    if (doc.contains("geometry")) {
        const std::string geom =
            doc["geometry"].is_string() ? doc["geometry"].get<std::string>() : "";
        if (geom == "half")
            cfg.geometry = Geometry::HalfSpace;
        else if (geom == "full")
            cfg.geometry = Geometry::FullSpace;
        else
            throw ConfigInvalid("geometry: expected 'half' or 'full'");
    }
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer())
            throw ConfigInvalid("seed: expected an integer");
        cfg.seed = doc["seed"].get<uint64_t>();
    }
    if (doc.contains("replicates")) {
        if (!doc["replicates"].is_number_integer() || doc["replicates"].get<int64_t>() < 0)
            throw ConfigInvalid("replicates: expected a nonnegative integer");
        cfg.replicates = doc["replicates"].get<int>();
    }
    if (doc.contains("threads")) {
        if (!doc["threads"].is_number_integer() || doc["threads"].get<int64_t>() < 0)
            throw ConfigInvalid("threads: expected a nonnegative integer");
        cfg.threads = doc["threads"].get<int>();
    }
    if (doc.contains("out")) {
        if (!doc["out"].is_string())
            throw ConfigInvalid("out: expected a string");
        cfg.out_dir = doc["out"].get<std::string>();
    }
    if (doc.contains("dump_env")) {
        if (!doc["dump_env"].is_boolean())
            throw ConfigInvalid("dump_env: expected a boolean");
        cfg.dump_env = doc["dump_env"].get<bool>();
    }
    cfg.params = json::object();
    for (const std::string& key : it->second)
        if (doc.contains(key))
            cfg.params[key] = doc[key];
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("config: cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ConfigInvalid(std::string("config: JSON parse error: ") + e.what());
    }
    return from_json(doc);
}

json ExperimentConfig::to_json() const {
    json doc;
    doc["experiment"] = experiment;
    doc["model"] = json{{"bulk", distribution_to_json(model.bulk)},
                        {"vertical", distribution_to_json(model.vertical)}};
    doc["mode"] = mode == Mode::PositiveTemperature ? "positive" : "zero";
    doc["geometry"] = geometry == Geometry::HalfSpace ? "half" : "full";
    doc["seed"] = seed;
    doc["replicates"] = replicates;
    doc["threads"] = threads;
    doc["out"] = out_dir;
    doc["dump_env"] = dump_env;
    for (const auto& [key, value] : params.items())
        doc[key] = value;
    return doc;
}

std::string ExperimentConfig::canonical_string() const {
    json doc = to_json();
    doc.erase("out");
    doc.erase("threads");
    return doc.dump(); // nlohmann objects iterate in sorted key order
}

std::string ExperimentConfig::config_hash() const { return fnv1a64_hex(canonical_string()); }

uint64_t fnv1a64(const void* data, size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& s) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(s.data(), s.size())));
    return std::string(buf);
}

int param_int(const json& params, const std::string& key) {
    if (!params.contains(key) || !params[key].is_number_integer())
        throw ConfigInvalid(key + ": expected an integer");
    return params[key].get<int>();
}

double param_double(const json& params, const std::string& key) {
    if (!params.contains(key) || !params[key].is_number())
        throw ConfigInvalid(key + ": expected a number");
    return params[key].get<double>();
}

std::vector<int> param_int_list(const json& params, const std::string& key) {
    if (!params.contains(key) || !params[key].is_array() || params[key].empty())
        throw ConfigInvalid(key + ": expected a nonempty array of integers");
    std::vector<int> out;
    for (const auto& v : params[key]) {
        if (!v.is_number_integer())
            throw ConfigInvalid(key + ": expected integers");
        out.push_back(v.get<int>());
    }
    return out;
}

std::vector<double> param_double_list(const json& params, const std::string& key) {
    if (!params.contains(key) || !params[key].is_array() || params[key].empty())
        throw ConfigInvalid(key + ": expected a nonempty array of numbers");
    std::vector<double> out;
    for (const auto& v : params[key]) {
        if (!v.is_number())
            throw ConfigInvalid(key + ": expected numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

bool param_present(const json& params, const std::string& key) { return params.contains(key); }

json Manifest::to_json() const {
    json doc;
    doc["artifact_version"] = artifact_version;
    doc["config"] = config;
    doc["config_hash"] = config_hash;
    doc["master_seed"] = master_seed;
    doc["started_utc"] = started_utc;
    doc["finished_utc"] = finished_utc;
    json outs = json::array();
    for (const auto& o : outputs)
        outs.push_back(json{{"file", o.file}, {"bytes", o.bytes}, {"fnv1a64", o.fnv1a64}});
    doc["outputs"] = outs;
    return doc;
}

Manifest Manifest::from_json(const json& doc) {
    Manifest m;
    m.artifact_version = doc.at("artifact_version").get<std::string>();
    m.config = doc.at("config");
    m.config_hash = doc.at("config_hash").get<std::string>();
    m.master_seed = doc.at("master_seed").get<uint64_t>();
    m.started_utc = doc.at("started_utc").get<std::string>();
    m.finished_utc = doc.at("finished_utc").get<std::string>();
    for (const auto& o : doc.at("outputs")) {
        Manifest::Output out;
        out.file = o.at("file").get<std::string>();
        out.bytes = o.at("bytes").get<uint64_t>();
        out.fnv1a64 = o.at("fnv1a64").get<std::string>();
        m.outputs.push_back(std::move(out));
    }
    return m;
}

std::vector<std::string> verify_manifest(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in)
        throw IoError("verify_manifest: cannot open " + manifest_path);
    json doc;
    in >> doc;
    const Manifest m = Manifest::from_json(doc);
    const std::string dir =
        manifest_path.find('/') == std::string::npos
            ? std::string(".")
            : manifest_path.substr(0, manifest_path.find_last_of('/'));
    std::vector<std::string> bad;
    for (const auto& o : m.outputs) {
        std::ifstream f(dir + "/" + o.file, std::ios::binary);
        if (!f) {
            bad.push_back(o.file);
            continue;
        }
        std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        if (bytes.size() != o.bytes || fnv1a64_hex(bytes) != o.fnv1a64)
            bad.push_back(o.file);
    }
    return bad;
}

} // namespace polymer
