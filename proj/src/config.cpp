#include "hoi/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "hoi/errors.hpp"

namespace hoi {

void RunConfig::validate() const {
    model.validate();
    if (image_size != model.image_size || patch_size != model.patch_size)
        throw InvalidConfig("config: dataset and model geometry disagree");
    if (steps <= 0 || batch <= 0 || warmup_steps < 0 || threads <= 0)
        throw InvalidConfig("config: training sizes must be positive");
    if (!(decay_knot >= 0.0 && decay_knot <= 1.0))
        throw InvalidConfig("config: decay_knot outside [0,1]");
    if (queries_per_step <= 0 || queries_per_step > sdf_samples_per_scene)
        throw InvalidConfig("config: queries_per_step outside [1, sdf_samples_per_scene]");
    if (train_scenes <= 0 || test_scenes <= 0)
        throw InvalidConfig("config: scene counts must be positive");
}

SceneConfig RunConfig::scene_config() const {
    SceneConfig sc;
    sc.image_size = image_size;
    sc.sdf_samples = sdf_samples_per_scene;
    return sc;
}

RunConfig preset_desk() { return RunConfig{}; }

RunConfig preset_paper() {
    RunConfig cfg;
    cfg.image_size = 224;
    cfg.patch_size = 16;
    cfg.model.image_size = 224;
    cfg.model.patch_size = 16;
    cfg.model.dim = 768;
    cfg.model.enc_depth = 12;
    cfg.model.enc_heads = 12;
    cfg.model.dec_dim = 512;
    cfg.model.dec_depth = 8;
    cfg.model.dec_heads = 16;
    cfg.model.feat_channels = 64;
    cfg.model.sdf_hidden = 256;
    cfg.steps = 50000;
    cfg.batch = 22;
    cfg.warmup_steps = 1000;
    cfg.base_lr = 5e-5;
    cfg.weight_decay = 0.05;
    cfg.decay_knot = 0.72;
    return cfg;
}

RunConfig make_preset(const std::string& name) {
    if (name == "desk") return preset_desk();
    if (name == "paper") return preset_paper();
    throw InvalidConfig("unknown preset '" + name + "' (expected desk or paper)");
}

namespace {

using Setter = std::function<void(RunConfig&, const std::string&)>;

int to_int(const std::string& v) { return std::stoi(v); }
double to_double(const std::string& v) { return std::stod(v); }
uint64_t to_u64(const std::string& v) { return std::stoull(v); }

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"data_dir", [](RunConfig& c, const std::string& v) { c.data_dir = v; }},
        {"train_scenes", [](RunConfig& c, const std::string& v) { c.train_scenes = to_int(v); }},
        {"test_scenes", [](RunConfig& c, const std::string& v) { c.test_scenes = to_int(v); }},
        {"image_size",
         [](RunConfig& c, const std::string& v) {
             c.image_size = to_int(v);
             c.model.image_size = c.image_size;
         }},
        {"patch_size",
         [](RunConfig& c, const std::string& v) {
             c.patch_size = to_int(v);
             c.model.patch_size = c.patch_size;
         }},
        {"sdf_samples_per_scene",
         [](RunConfig& c, const std::string& v) { c.sdf_samples_per_scene = to_int(v); }},
        {"mask.rate_hand",
         [](RunConfig& c, const std::string& v) { c.mask.rates.hand = to_double(v); }},
        {"mask.rate_object",
         [](RunConfig& c, const std::string& v) { c.mask.rates.object = to_double(v); }},
        {"mask.rate_background",
         [](RunConfig& c, const std::string& v) { c.mask.rates.background = to_double(v); }},
        {"mask.skeleton_proportion",
         [](RunConfig& c, const std::string& v) { c.mask.skeleton_proportion = to_double(v); }},
        {"mask.dilation",
         [](RunConfig& c, const std::string& v) { c.mask.dilation = to_int(v); }},
        {"mask.rho_ramp",
         [](RunConfig& c, const std::string& v) { c.mask_rho_ramp = to_int(v) != 0; }},
        {"model.dim", [](RunConfig& c, const std::string& v) { c.model.dim = to_int(v); }},
        {"model.enc_depth",
         [](RunConfig& c, const std::string& v) { c.model.enc_depth = to_int(v); }},
        {"model.enc_heads",
         [](RunConfig& c, const std::string& v) { c.model.enc_heads = to_int(v); }},
        {"model.dec_dim", [](RunConfig& c, const std::string& v) { c.model.dec_dim = to_int(v); }},
        {"model.dec_depth",
         [](RunConfig& c, const std::string& v) { c.model.dec_depth = to_int(v); }},
        {"model.dec_heads",
         [](RunConfig& c, const std::string& v) { c.model.dec_heads = to_int(v); }},
        {"model.feat_channels",
         [](RunConfig& c, const std::string& v) { c.model.feat_channels = to_int(v); }},
        {"model.sdf_hidden",
         [](RunConfig& c, const std::string& v) { c.model.sdf_hidden = to_int(v); }},
        {"model.fourier_bands",
         [](RunConfig& c, const std::string& v) { c.model.fourier_bands = to_int(v); }},
        {"loss.lambda_2d",
         [](RunConfig& c, const std::string& v) { c.loss.lambda_2d = to_double(v); }},
        {"loss.lambda_3d",
         [](RunConfig& c, const std::string& v) { c.loss.lambda_3d = to_double(v); }},
        {"loss.lambda_h",
         [](RunConfig& c, const std::string& v) { c.loss.lambda_h = to_double(v); }},
        {"loss.lambda_o",
         [](RunConfig& c, const std::string& v) { c.loss.lambda_o = to_double(v); }},
        {"loss.sdf_clamp",
         [](RunConfig& c, const std::string& v) { c.sdf_clamp = to_double(v); }},
        {"train.steps", [](RunConfig& c, const std::string& v) { c.steps = to_int(v); }},
        {"train.batch", [](RunConfig& c, const std::string& v) { c.batch = to_int(v); }},
        {"train.warmup_steps",
         [](RunConfig& c, const std::string& v) { c.warmup_steps = to_int(v); }},
        {"train.base_lr", [](RunConfig& c, const std::string& v) { c.base_lr = to_double(v); }},
        {"train.weight_decay",
         [](RunConfig& c, const std::string& v) { c.weight_decay = to_double(v); }},
        {"train.decay_knot",
         [](RunConfig& c, const std::string& v) { c.decay_knot = to_double(v); }},
        {"train.queries_per_step",
         [](RunConfig& c, const std::string& v) { c.queries_per_step = to_int(v); }},
        {"train.threads", [](RunConfig& c, const std::string& v) { c.threads = to_int(v); }},
        {"seed",
         [](RunConfig& c, const std::string& v) {
             c.seed = to_u64(v);
             c.model.seed = c.seed;
         }},
        {"ablate.steps", [](RunConfig& c, const std::string& v) { c.ablate_steps = to_int(v); }},
    };
    return table;
}

std::string trim(const std::string& s) {
    const size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw InvalidConfig("unknown config key '" + key + "'");
    try {
        it->second(cfg, value);
    } catch (const std::exception&) {
        throw InvalidConfig("bad value '" + value + "' for config key '" + key + "'");
    }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("config file not found: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidConfig(path + ":" + std::to_string(lineno) + ": expected key=value");
        apply_config_line(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

}  // namespace hoi
