#include "pointdc/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>

namespace pointdc {

DetectorTrainConfig RunConfig::detector_config() const {
    DetectorTrainConfig c;
    c.width = det_width;
    c.epochs = det_epochs;
    c.batch = det_batch;
    c.lr = det_lr;
    c.momentum = det_momentum;
    c.tau = det_tau;
    c.lambda_reg = det_lambda_reg;
    c.mu_match = det_mu_match;
    c.eval_radius = eval_radius;
    c.suppress_radius = det_suppress;
    c.seed = seed;
    return c;
}

ClassifierTrainConfig RunConfig::classifier_config() const {
    ClassifierTrainConfig c;
    if (cls_mode == "linear")
        c.mode = ClsMode::Linear;
    else if (cls_mode == "full")
        c.mode = ClsMode::Full;
    else
        throw ConfigError("cls.mode must be 'linear' or 'full', got '" + cls_mode + "'");
    if (cls_supervision == "gt")
        c.supervision = ClsSupervision::GroundTruth;
    else if (cls_supervision == "detector")
        c.supervision = ClsSupervision::Detector;
    else
        throw ConfigError("cls.supervision must be 'gt' or 'detector', got '" +
                          cls_supervision + "'");
    c.tau = det_tau;
    c.match_radius = eval_radius;
    c.epochs = cls_epochs;
    c.batch = cls_batch;
    c.lr = cls_lr;
    c.momentum = cls_momentum;
    c.seed = seed;
    return c;
}

PretrainConfig RunConfig::pretrain_config() const {
    PretrainConfig c;
    c.width = enc_width;
    c.crop = enc_crop;
    c.epochs = enc_epochs;
    c.batch = enc_batch;
    c.lr = enc_lr;
    c.momentum = enc_momentum;
    c.seed = seed;
    return c;
}

JointTrainConfig RunConfig::joint_config() const {
    JointTrainConfig c;
    c.width = joint_width;
    c.epochs = joint_epochs;
    c.batch = joint_batch;
    c.lr = joint_lr;
    c.momentum = joint_momentum;
    c.tau = det_tau;
    c.lambda_reg = joint_lambda_reg;
    c.lambda_cls = joint_lambda_cls;
    c.mu_match = det_mu_match;
    c.eval_radius = eval_radius;
    c.suppress_radius = det_suppress;
    c.seed = seed;
    return c;
}

ProbeConfig RunConfig::probe_config() const {
    ProbeConfig c;
    c.epochs = probe_epochs;
    c.batch = probe_batch;
    c.lr = probe_lr;
    c.momentum = probe_momentum;
    c.radius = eval_radius;
    c.seed = mix_seed(seed, 0x9e);
    return c;
}

// ---------------------------------------------------------------------------

namespace {

long long parse_ll(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(value.c_str(), &end, 10);
    if (errno != 0 || end == value.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "' expects an integer, got '" + value + "'");
    return v;
}

int parse_int(const std::string& key, const std::string& value) {
    const long long v = parse_ll(key, value);
    if (v < -2147483647LL || v > 2147483647LL)
        throw ConfigError("config key '" + key + "' value out of range: '" + value + "'");
    return static_cast<int>(v);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (errno != 0 || end == value.c_str() || *end != '\0' || value.find('-') != std::string::npos)
        throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" +
                          value + "'");
    return static_cast<std::uint64_t>(v);
}

double parse_double(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (errno != 0 || end == value.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "' expects a number, got '" + value + "'");
    return v;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct KeyItem {
    const char* key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define STR_KEY(name, field)                                                       \
    KeyItem{name, [](RunConfig& c, const std::string& v) { c.field = v; },         \
            [](const RunConfig& c) { return c.field; }}
#define INT_KEY(name, field)                                                       \
    KeyItem{name, [](RunConfig& c, const std::string& v) { c.field = parse_int(name, v); }, \
            [](const RunConfig& c) { return std::to_string(c.field); }}
#define DBL_KEY(name, field)                                                       \
    KeyItem{name, [](RunConfig& c, const std::string& v) { c.field = parse_double(name, v); }, \
            [](const RunConfig& c) { return fmt_double(c.field); }}

const std::vector<KeyItem>& registry() {
    static const std::vector<KeyItem> items = {
        KeyItem{"seed",
                [](RunConfig& c, const std::string& v) { c.seed = parse_u64("seed", v); },
                [](const RunConfig& c) { return std::to_string(c.seed); }},
        STR_KEY("data.dir", data_dir),
        STR_KEY("data.second_dir", data_second),
        INT_KEY("data.train", data_train),
        INT_KEY("data.test", data_test),
        STR_KEY("out.dir", out_dir),
        INT_KEY("scene.height", scene.height),
        INT_KEY("scene.width", scene.width),
        INT_KEY("scene.classes", scene.classes),
        DBL_KEY("scene.mean_count", scene.mean_count),
        DBL_KEY("scene.min_separation", scene.min_separation),
        DBL_KEY("scene.radius_min", scene.radius_min),
        DBL_KEY("scene.radius_max", scene.radius_max),
        INT_KEY("scene.style", scene.style),
        DBL_KEY("scene.noise", scene.noise),
        DBL_KEY("scene.cue", scene.cue),
        DBL_KEY("scene.contrast", scene.contrast),
        INT_KEY("det.width", det_width),
        INT_KEY("det.epochs", det_epochs),
        INT_KEY("det.batch", det_batch),
        DBL_KEY("det.lr", det_lr),
        DBL_KEY("det.momentum", det_momentum),
        DBL_KEY("det.tau", det_tau),
        DBL_KEY("det.lambda_reg", det_lambda_reg),
        DBL_KEY("det.mu_match", det_mu_match),
        DBL_KEY("det.suppress_radius", det_suppress),
        STR_KEY("cls.mode", cls_mode),
        STR_KEY("cls.supervision", cls_supervision),
        INT_KEY("cls.epochs", cls_epochs),
        INT_KEY("cls.batch", cls_batch),
        DBL_KEY("cls.lr", cls_lr),
        DBL_KEY("cls.momentum", cls_momentum),
        INT_KEY("enc.width", enc_width),
        INT_KEY("enc.crop", enc_crop),
        INT_KEY("enc.epochs", enc_epochs),
        INT_KEY("enc.batch", enc_batch),
        DBL_KEY("enc.lr", enc_lr),
        DBL_KEY("enc.momentum", enc_momentum),
        STR_KEY("enc.kind", enc_kind),
        INT_KEY("joint.width", joint_width),
        INT_KEY("joint.epochs", joint_epochs),
        INT_KEY("joint.batch", joint_batch),
        DBL_KEY("joint.lr", joint_lr),
        DBL_KEY("joint.momentum", joint_momentum),
        DBL_KEY("joint.lambda_cls", joint_lambda_cls),
        DBL_KEY("joint.lambda_reg", joint_lambda_reg),
        STR_KEY("joint.init_encoder", joint_init_encoder),
        INT_KEY("probe.epochs", probe_epochs),
        INT_KEY("probe.batch", probe_batch),
        DBL_KEY("probe.lr", probe_lr),
        DBL_KEY("probe.momentum", probe_momentum),
        DBL_KEY("eval.radius", eval_radius),
        STR_KEY("model.detector", model_detector),
        STR_KEY("model.encoder", model_encoder),
        STR_KEY("model.head", model_head),
        STR_KEY("model.joint", model_joint),
        INT_KEY("ablate.seeds", ablate_seeds),
        STR_KEY("ablate.widths", ablate_widths),
    };
    return items;
}

#undef STR_KEY
#undef INT_KEY
#undef DBL_KEY

const KeyItem& find_key(const std::string& key) {
    for (const auto& item : registry())
        if (key == item.key) return item;
    throw ConfigError("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& item : registry()) keys.emplace_back(item.key);
    return keys;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    find_key(key).set(cfg, value);
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) {
    return find_key(key).get(cfg);
}

std::string dump_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& item : registry()) {
        out += item.key;
        out += " = ";
        out += item.get(cfg);
        out += '\n';
    }
    return out;
}

RunConfig parse_config(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
    RunConfig cfg;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config file '" + path + "'");
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError(path + ":" + std::to_string(lineno) +
                                  ": expected 'key = value', got '" + t + "'");
            set_config_value(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        }
    }
    for (const auto& [key, value] : overrides) set_config_value(cfg, key, value);
    return cfg;
}

}  // namespace pointdc
