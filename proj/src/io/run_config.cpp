#include "waapo/io/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "waapo/errors.hpp"

namespace waapo::io {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

// Location prefix for messages: "<source> [section] key".
struct Where {
    const std::string& source;
    std::string section;
    std::string key;

    std::string str() const {
        std::string out = source + ": ";
        if (!section.empty()) out += "[" + section + "] ";
        return out + key;
    }
};

double to_double(const std::string& text, const Where& where) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw ConfigError(where.str() + ": expected a number, got '" + text + "'");
    }
    return v;
}

template <typename Int>
Int to_int(const std::string& text, const Where& where) {
    const std::string t = trim(text);
    Int v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw ConfigError(where.str() + ": expected an integer, got '" + text + "'");
    }
    return v;
}

bool to_bool(const std::string& text, const Where& where) {
    const std::string t = trim(text);
    if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
    if (t == "false" || t == "no" || t == "0" || t == "off") return false;
    throw ConfigError(where.str() + ": expected true or false, got '" + text + "'");
}

std::string fmt(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

template <typename T>
std::string join(const std::vector<T>& values, const std::string& sep = ", ") {
    std::ostringstream os;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) os << sep;
        if constexpr (std::is_floating_point_v<T>) {
            os << fmt(values[i]);
        } else {
            os << values[i];
        }
    }
    return os.str();
}

std::vector<std::size_t> size_list(const std::string& text, std::size_t count, const Where& where) {
    const auto parts = split_list(text);
    if (parts.size() != count) {
        throw ConfigError(where.str() + ": expected " + std::to_string(count) + " values, got '" +
                          text + "'");
    }
    std::vector<std::size_t> out;
    for (const auto& p : parts) out.push_back(to_int<std::size_t>(p, where));
    return out;
}

RunConfig base_preset() {
    RunConfig c;
    c.preset = "custom";
    return c;
}

using Handler = void (*)(RunConfig&, const std::string&, const Where&);

const std::map<std::string, std::map<std::string, Handler>>& handlers() {
    static const std::map<std::string, std::map<std::string, Handler>> table = {
        {"model",
         {
             {"shape",
              [](RunConfig& c, const std::string& v, const Where& w) {
                  const auto d = size_list(v, 3, w);
                  try {
                      c.model.shape = GridShape(d[0], d[1], d[2]);
                  } catch (const Error& e) {
                      throw ConfigError(w.str() + ": " + e.what());
                  }
              }},
             {"channel_names",
              [](RunConfig& c, const std::string& v, const Where&) { c.channel_names = split_list(v); }},
             {"advection_shift",
              [](RunConfig& c, const std::string& v, const Where& w) {
                  c.model.advection_shift.clear();
                  for (const auto& p : split_list(v)) c.model.advection_shift.push_back(to_int<int>(p, w));
              }},
             {"diffusion_weight",
              [](RunConfig& c, const std::string& v, const Where& w) { c.model.diffusion_weight = to_double(v, w); }},
             {"nonlinearity_gain",
              [](RunConfig& c, const std::string& v, const Where& w) { c.model.nonlinearity_gain = to_double(v, w); }},
             {"coupling_strength",
              [](RunConfig& c, const std::string& v, const Where& w) { c.model.coupling_strength = to_double(v, w); }},
             {"seed",
              [](RunConfig& c, const std::string& v, const Where& w) { c.model.seed = to_int<std::uint64_t>(v, w); }},
         }},
        {"attack",
         {
             {"channels",
              [](RunConfig& c, const std::string& v, const Where&) { c.attack_channels = split_list(v); }},
             {"patch_origin",
              [](RunConfig& c, const std::string& v, const Where& w) {
                  if (trim(v) == "none") {
                      c.patch.reset();
                      return;
                  }
                  const auto d = size_list(v, 2, w);
                  PatchSpec p = c.patch.value_or(PatchSpec{});
                  p.lat_origin = d[0];
                  p.lon_origin = d[1];
                  c.patch = p;
              }},
             {"patch_size",
              [](RunConfig& c, const std::string& v, const Where& w) {
                  if (trim(v) == "none") {
                      c.patch.reset();
                      return;
                  }
                  const auto d = size_list(v, 2, w);
                  PatchSpec p = c.patch.value_or(PatchSpec{});
                  p.lat_size = d[0];
                  p.lon_size = d[1];
                  c.patch = p;
              }},
             {"mask_file",
              [](RunConfig& c, const std::string& v, const Where&) {
                  const std::string t = trim(v);
                  if (t.empty() || t == "none") {
                      c.mask_file.reset();
                  } else {
                      c.mask_file = t;
                  }
              }},
             {"mask_taper",
              [](RunConfig& c, const std::string& v, const Where& w) { c.mask_taper = to_int<std::size_t>(v, w); }},
             {"horizon",
              [](RunConfig& c, const std::string& v, const Where& w) { c.horizon = to_int<std::size_t>(v, w); }},
             {"initial_style",
              [](RunConfig& c, const std::string& v, const Where& w) {
                  try {
                      c.initial_options.style = parse_initial_style(trim(v));
                  } catch (const ConfigError& e) {
                      throw ConfigError(w.str() + ": " + e.what());
                  }
              }},
             {"smoothing_passes",
              [](RunConfig& c, const std::string& v, const Where& w) {
                  c.initial_options.smoothing_passes = to_int<std::size_t>(v, w);
              }},
             {"anomaly_scale",
              [](RunConfig& c, const std::string& v, const Where& w) {
                  c.initial_options.anomaly_scale = to_double(v, w);
              }},
             {"initial_seed",
              [](RunConfig& c, const std::string& v, const Where& w) { c.initial_seed = to_int<std::uint64_t>(v, w); }},
             {"target_seed",
              [](RunConfig& c, const std::string& v, const Where& w) { c.target_seed = to_int<std::uint64_t>(v, w); }},
             {"initial_file",
              [](RunConfig& c, const std::string& v, const Where&) {
                  const std::string t = trim(v);
                  if (t.empty() || t == "none") {
                      c.initial_file.reset();
                  } else {
                      c.initial_file = t;
                  }
              }},
             {"target_file",
              [](RunConfig& c, const std::string& v, const Where&) {
                  const std::string t = trim(v);
                  if (t.empty() || t == "none") {
                      c.target_file.reset();
                  } else {
                      c.target_file = t;
                  }
              }},
             {"penalty_window",
              [](RunConfig& c, const std::string& v, const Where& w) {
                  const std::string t = trim(v);
                  if (t == "leading") {
                      c.window = WindowKind::leading;
                  } else if (t == "forecast") {
                      c.window = WindowKind::forecast;
                  } else {
                      const auto dots = t.find("..");
                      if (dots == std::string::npos) {
                          throw ConfigError(w.str() + ": expected leading, forecast or A..B, got '" + v + "'");
                      }
                      c.window = WindowKind::custom;
                      c.custom_window.first = to_int<std::size_t>(t.substr(0, dots), w);
                      c.custom_window.last = to_int<std::size_t>(t.substr(dots + 2), w);
                  }
              }},
         }},
        {"penalties",
         {
             {"bounds",
              [](RunConfig& c, const std::string& v, const Where& w) {
                  const std::string t = trim(v);
                  if (t == "calibrate") {
                      c.calibrate = true;
                  } else if (t == "explicit") {
                      c.calibrate = false;
                  } else {
                      throw ConfigError(w.str() + ": expected calibrate or explicit, got '" + v + "'");
                  }
              }},
             {"lambda_inf",
              [](RunConfig& c, const std::string& v, const Where& w) { c.lambda_inf = to_double(v, w); }},
             {"lambda_tv",
              [](RunConfig& c, const std::string& v, const Where& w) { c.lambda_tv = to_double(v, w); }},
             {"epsilon",
              [](RunConfig& c, const std::string& v, const Where& w) { c.epsilon = to_double(v, w); }},
             {"tau", [](RunConfig& c, const std::string& v, const Where& w) { c.tau = to_double(v, w); }},
         }},
        {"optimizer",
         {
             {"learning_rate",
              [](RunConfig& c, const std::string& v, const Where& w) { c.optimizer.learning_rate = to_double(v, w); }},
             {"max_iterations",
              [](RunConfig& c, const std::string& v, const Where& w) {
                  c.optimizer.max_iterations = to_int<std::size_t>(v, w);
              }},
             {"beta1", [](RunConfig& c, const std::string& v, const Where& w) { c.optimizer.beta1 = to_double(v, w); }},
             {"beta2", [](RunConfig& c, const std::string& v, const Where& w) { c.optimizer.beta2 = to_double(v, w); }},
             {"adam_epsilon",
              [](RunConfig& c, const std::string& v, const Where& w) { c.optimizer.adam_epsilon = to_double(v, w); }},
             {"clip_norm",
              [](RunConfig& c, const std::string& v, const Where& w) {
                  if (trim(v) == "none") {
                      c.optimizer.clip_norm.reset();
                  } else {
                      c.optimizer.clip_norm = to_double(v, w);
                  }
              }},
             {"schedule",
              [](RunConfig& c, const std::string& v, const Where& w) {
                  const std::string t = trim(v);
                  if (t == "step") {
                      c.optimizer.schedule.kind = LearningRateSchedule::Kind::step;
                  } else if (t == "constant") {
                      c.optimizer.schedule.kind = LearningRateSchedule::Kind::constant;
                  } else {
                      throw ConfigError(w.str() + ": expected step or constant, got '" + v + "'");
                  }
              }},
             {"decay_factor",
              [](RunConfig& c, const std::string& v, const Where& w) {
                  c.optimizer.schedule.decay_factor = to_double(v, w);
              }},
             {"decay_every",
              [](RunConfig& c, const std::string& v, const Where& w) {
                  c.optimizer.schedule.decay_every = to_int<std::size_t>(v, w);
              }},
             {"seed",
              [](RunConfig& c, const std::string& v, const Where& w) { c.optimizer.seed = to_int<std::uint64_t>(v, w); }},
             {"keep_best",
              [](RunConfig& c, const std::string& v, const Where& w) { c.optimizer.keep_best = to_bool(v, w); }},
         }},
        {"output",
         {
             {"directory",
              [](RunConfig& c, const std::string& v, const Where& w) {
                  if (trim(v).empty()) throw ConfigError(w.str() + ": must not be empty");
                  c.output_directory = trim(v);
              }},
             {"emit_trajectories",
              [](RunConfig& c, const std::string& v, const Where& w) { c.emit_trajectories = to_bool(v, w); }},
             {"emit_rasters",
              [](RunConfig& c, const std::string& v, const Where& w) { c.emit_rasters = to_bool(v, w); }},
             {"render_channel",
              [](RunConfig& c, const std::string& v, const Where&) { c.render_channel = trim(v); }},
             {"clip_quantile",
              [](RunConfig& c, const std::string& v, const Where& w) { c.clip_quantile = to_double(v, w); }},
             {"pmrg_sigma",
              [](RunConfig& c, const std::string& v, const Where& w) { c.pmrg_sigma = to_double(v, w); }},
             {"pmrg_sampled_seed",
              [](RunConfig& c, const std::string& v, const Where& w) {
                  if (trim(v) == "none") {
                      c.pmrg_sampled_seed.reset();
                  } else {
                      c.pmrg_sampled_seed = to_int<std::uint64_t>(v, w);
                  }
              }},
         }},
    };
    return table;
}

void apply_override(ChannelPenaltyOverride& o, const std::string& key, const std::string& value,
                    const Where& where) {
    if (key == "lambda_inf") {
        o.lambda_inf = to_double(value, where);
    } else if (key == "lambda_tv") {
        o.lambda_tv = to_double(value, where);
    } else if (key == "epsilon") {
        o.epsilon = to_double(value, where);
    } else if (key == "tau") {
        o.tau = to_double(value, where);
    } else {
        throw ConfigError(where.str() + ": unknown key (lambda_inf, lambda_tv, epsilon, tau)");
    }
}

void check_nonneg(double v, const std::string& what) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(what + " must be finite and >= 0");
}

void check_pos(double v, const std::string& what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(what + " must be finite and > 0");
}

}  // namespace

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (ch == ',' || ch == ' ' || ch == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

void RunConfig::set_seed(std::uint64_t seed) {
    initial_seed = seed;
    target_seed = seed + 1;
    optimizer.seed = seed;
}

std::size_t RunConfig::channel_index(const std::string& name) const {
    const auto it = std::find(channel_names.begin(), channel_names.end(), name);
    if (it == channel_names.end()) {
        throw ConfigError("unknown channel '" + name + "' (known: " + join(channel_names) + ")");
    }
    return static_cast<std::size_t>(it - channel_names.begin());
}

ChannelSet RunConfig::channel_set() const {
    const std::size_t n = model.shape.channels;
    if (attack_channels.size() == 1 && attack_channels[0] == "all") return ChannelSet::all(n);
    std::vector<std::size_t> idx;
    for (const auto& name : attack_channels) idx.push_back(channel_index(name));
    return ChannelSet(n, idx);
}

TimeWindow RunConfig::penalty_window() const {
    switch (window) {
        case WindowKind::leading:
            return TimeWindow::leading(horizon);
        case WindowKind::forecast:
            return TimeWindow::forecast(horizon);
        case WindowKind::custom:
            break;
    }
    return custom_window;
}

void RunConfig::validate() const {
    const GridShape& s = model.shape;
    if (channel_names.size() != s.channels) {
        throw ConfigError("[model] channel_names has " + std::to_string(channel_names.size()) +
                          " entries for " + std::to_string(s.channels) + " channels");
    }
    std::set<std::string> seen;
    for (const auto& name : channel_names) {
        if (name.empty() || name == "all" || name.find_first_of(" ,\t@[]=") != std::string::npos) {
            throw ConfigError("[model] invalid channel name '" + name + "'");
        }
        if (!seen.insert(name).second) throw ConfigError("[model] duplicate channel name '" + name + "'");
    }
    if (model.advection_shift.size() != s.channels) {
        throw ConfigError("[model] advection_shift needs one entry per channel");
    }
    if (!(model.diffusion_weight >= 0.0 && model.diffusion_weight <= 0.25)) {
        throw ConfigError("[model] diffusion_weight must lie in [0, 0.25]");
    }
    check_nonneg(model.nonlinearity_gain, "[model] nonlinearity_gain");
    check_nonneg(model.coupling_strength, "[model] coupling_strength");

    if (attack_channels.empty()) throw ConfigError("[attack] channels must not be empty");
    if (!(attack_channels.size() == 1 && attack_channels[0] == "all")) {
        for (const auto& name : attack_channels) channel_index(name);
    }
    if (patch && mask_file) throw ConfigError("[attack] patch and mask_file are mutually exclusive");
    if (patch) {
        const PatchSpec& p = *patch;
        if (p.lat_size == 0 || p.lon_size == 0 || p.lat_origin + p.lat_size > s.lat ||
            p.lon_origin + p.lon_size > s.lon) {
            throw ConfigError("[attack] patch " + std::to_string(p.lat_size) + "x" +
                              std::to_string(p.lon_size) + " at (" + std::to_string(p.lat_origin) +
                              ", " + std::to_string(p.lon_origin) + ") does not fit a " +
                              std::to_string(s.lat) + "x" + std::to_string(s.lon) + " grid");
        }
    }
    if (horizon == 0) throw ConfigError("[attack] horizon must be >= 1");
    check_nonneg(initial_options.anomaly_scale, "[attack] anomaly_scale");
    if (window == WindowKind::custom &&
        (custom_window.first > custom_window.last || custom_window.last > horizon)) {
        throw ConfigError("[attack] penalty_window must satisfy A <= B <= horizon");
    }

    check_nonneg(lambda_inf, "[penalties] lambda_inf");
    check_nonneg(lambda_tv, "[penalties] lambda_tv");
    if (!calibrate) {
        check_pos(epsilon, "[penalties] epsilon");
        check_pos(tau, "[penalties] tau");
    }
    for (const auto& [name, o] : channel_penalties) {
        if (std::find(channel_names.begin(), channel_names.end(), name) == channel_names.end()) {
            throw ConfigError("[penalties." + name + "] does not name a channel");
        }
        if (o.lambda_inf) check_nonneg(*o.lambda_inf, "[penalties." + name + "] lambda_inf");
        if (o.lambda_tv) check_nonneg(*o.lambda_tv, "[penalties." + name + "] lambda_tv");
        if (o.epsilon) check_pos(*o.epsilon, "[penalties." + name + "] epsilon");
        if (o.tau) check_pos(*o.tau, "[penalties." + name + "] tau");
    }

    try {
        optimizer.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("[optimizer] ") + e.what());
    }

    if (!(clip_quantile > 0.0 && clip_quantile <= 1.0)) {
        throw ConfigError("[output] clip_quantile must lie in (0, 1]");
    }
    check_pos(pmrg_sigma, "[output] pmrg_sigma");
    channel_index(render_channel);
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"unconstrained", "channel-only", "patch",
                                                   "patch-smooth", "patch-rough"};
    return names;
}

RunConfig preset(const std::string& name) {
    RunConfig c = base_preset();
    c.preset = name;
    if (name == "unconstrained") {
        c.attack_channels = {"all"};
        c.lambda_inf = 0.0;
        c.lambda_tv = 0.0;
        return c;
    }
    c.attack_channels = {"t2m"};
    c.lambda_inf = 0.01;
    if (name == "channel-only") {
        c.lambda_tv = 0.01;
        return c;
    }
    // A 13 x 9 block of the 32 x 64 desk grid.
    const PatchSpec block{13, 49, 13, 9};
    if (name == "patch" || name == "patch-smooth") {
        c.patch = block;
        c.lambda_tv = 0.01;
        return c;
    }
    if (name == "patch-rough") {
        c.patch = block;
        c.lambda_tv = 0.0;
        return c;
    }
    throw ConfigError("unknown preset '" + name + "' (known: " + join(preset_names()) + ")");
}

RunConfig parse_run_config(const std::string& text, const std::string& source) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
    }

    RunConfig c = base_preset();
    // Top-level keys come first in the tree walk below, but the preset must be
    // applied before any section overrides, so look it up explicitly.
    for (const auto& [key, node] : tree) {
        if (node.empty() && key == "preset") c = preset(trim(node.data()));
    }

    const auto& table = handlers();
    for (const auto& [section, node] : tree) {
        if (node.empty()) {
            // An empty [penalties.<channel>] block overrides nothing.
            if (section.rfind("penalties.", 0) == 0 && node.data().empty()) continue;
            if (section != "preset") {
                throw ConfigError(source + ": unknown top-level key '" + section + "' (only preset)");
            }
            continue;
        }
        if (section.rfind("penalties.", 0) == 0) {
            const std::string channel = section.substr(std::string("penalties.").size());
            ChannelPenaltyOverride& o = c.channel_penalties[channel];
            for (const auto& [key, value] : node) {
                apply_override(o, key, value.data(), Where{source, section, key});
            }
            continue;
        }
        const auto sec = table.find(section);
        if (sec == table.end()) throw ConfigError(source + ": unknown section [" + section + "]");
        for (const auto& [key, value] : node) {
            const auto h = sec->second.find(key);
            if (h == sec->second.end()) {
                throw ConfigError(Where{source, section, key}.str() + ": unknown key");
            }
            h->second(c, value.data(), Where{source, section, key});
        }
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return parse_run_config(os.str(), path.string());
}

std::string format_run_config(const RunConfig& c) {
    std::ostringstream os;
    const auto opt_path = [](const std::optional<std::filesystem::path>& p) {
        return p ? p->string() : std::string("none");
    };
    os << "preset = " << c.preset << "\n\n";

    os << "[model]\n";
    os << "shape = " << c.model.shape.lat << ", " << c.model.shape.lon << ", " << c.model.shape.channels << "\n";
    os << "channel_names = " << join(c.channel_names) << "\n";
    os << "advection_shift = " << join(c.model.advection_shift) << "\n";
    os << "diffusion_weight = " << fmt(c.model.diffusion_weight) << "\n";
    os << "nonlinearity_gain = " << fmt(c.model.nonlinearity_gain) << "\n";
    os << "coupling_strength = " << fmt(c.model.coupling_strength) << "\n";
    os << "seed = " << c.model.seed << "\n\n";

    os << "[attack]\n";
    os << "channels = " << join(c.attack_channels) << "\n";
    if (c.patch) {
        os << "patch_origin = " << c.patch->lat_origin << ", " << c.patch->lon_origin << "\n";
        os << "patch_size = " << c.patch->lat_size << ", " << c.patch->lon_size << "\n";
    } else {
        os << "patch_origin = none\n";
    }
    os << "mask_file = " << opt_path(c.mask_file) << "\n";
    os << "mask_taper = " << c.mask_taper << "\n";
    os << "horizon = " << c.horizon << "\n";
    os << "initial_style = " << to_string(c.initial_options.style) << "\n";
    os << "smoothing_passes = " << c.initial_options.smoothing_passes << "\n";
    os << "anomaly_scale = " << fmt(c.initial_options.anomaly_scale) << "\n";
    os << "initial_seed = " << c.initial_seed << "\n";
    os << "initial_file = " << opt_path(c.initial_file) << "\n";
    os << "target_seed = " << c.target_seed << "\n";
    os << "target_file = " << opt_path(c.target_file) << "\n";
    switch (c.window) {
        case WindowKind::leading:
            os << "penalty_window = leading\n\n";
            break;
        case WindowKind::forecast:
            os << "penalty_window = forecast\n\n";
            break;
        case WindowKind::custom:
            os << "penalty_window = " << c.custom_window.first << ".." << c.custom_window.last << "\n\n";
            break;
    }

    os << "[penalties]\n";
    os << "bounds = " << (c.calibrate ? "calibrate" : "explicit") << "\n";
    os << "lambda_inf = " << fmt(c.lambda_inf) << "\n";
    os << "lambda_tv = " << fmt(c.lambda_tv) << "\n";
    os << "epsilon = " << fmt(c.epsilon) << "\n";
    os << "tau = " << fmt(c.tau) << "\n\n";
    for (const auto& [name, o] : c.channel_penalties) {
        if (o == ChannelPenaltyOverride{}) continue;
        os << "[penalties." << name << "]\n";
        if (o.lambda_inf) os << "lambda_inf = " << fmt(*o.lambda_inf) << "\n";
        if (o.lambda_tv) os << "lambda_tv = " << fmt(*o.lambda_tv) << "\n";
        if (o.epsilon) os << "epsilon = " << fmt(*o.epsilon) << "\n";
        if (o.tau) os << "tau = " << fmt(*o.tau) << "\n";
        os << "\n";
    }

    const OptimizerConfig& o = c.optimizer;
    os << "[optimizer]\n";
    os << "learning_rate = " << fmt(o.learning_rate) << "\n";
    os << "max_iterations = " << o.max_iterations << "\n";
    os << "beta1 = " << fmt(o.beta1) << "\n";
    os << "beta2 = " << fmt(o.beta2) << "\n";
    os << "adam_epsilon = " << fmt(o.adam_epsilon) << "\n";
    os << "clip_norm = " << (o.clip_norm ? fmt(*o.clip_norm) : std::string("none")) << "\n";
    os << "schedule = " << (o.schedule.kind == LearningRateSchedule::Kind::step ? "step" : "constant") << "\n";
    os << "decay_factor = " << fmt(o.schedule.decay_factor) << "\n";
    os << "decay_every = " << o.schedule.decay_every << "\n";
    os << "seed = " << o.seed << "\n";
    os << "keep_best = " << (o.keep_best ? "true" : "false") << "\n\n";

    os << "[output]\n";
    os << "directory = " << c.output_directory.string() << "\n";
    os << "emit_trajectories = " << (c.emit_trajectories ? "true" : "false") << "\n";
    os << "emit_rasters = " << (c.emit_rasters ? "true" : "false") << "\n";
    os << "render_channel = " << c.render_channel << "\n";
    os << "clip_quantile = " << fmt(c.clip_quantile) << "\n";
    os << "pmrg_sigma = " << fmt(c.pmrg_sigma) << "\n";
    os << "pmrg_sampled_seed = " << (c.pmrg_sampled_seed ? std::to_string(*c.pmrg_sampled_seed) : "none") << "\n";
    return os.str();
}

}  // namespace waapo::io
