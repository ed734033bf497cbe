#include "cropforge/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cropforge/errors.hpp"

namespace cropforge {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ModelConfig RunConfig::model_config() const {
  ModelConfig cfg;
  cfg.unet.depth = depth;
  cfg.unet.base_channels = base_channels;
  cfg.unet.input_channels = input_channels;
  cfg.unet.kernel_size = kernel_size;
  cfg.unet.seed = seed;
  cfg.head.grid = roi_grid;
  cfg.head.fc1 = fc1;
  cfg.head.fc2 = fc2;
  return cfg;
}

std::string RunConfig::serialize() const {
  std::ostringstream os;
  os << "sigma = " << fmt_double(sigma) << "\n";
  os << "gamma = " << fmt_double(gamma) << "\n";
  os << "lambda = " << fmt_double(lambda) << "\n";
  os << "fallback_fraction = " << fmt_double(fallback_fraction) << "\n";
  os << "target_side = " << target_side << "\n";
  os << "depth = " << depth << "\n";
  os << "base_channels = " << base_channels << "\n";
  os << "input_channels = " << input_channels << "\n";
  os << "kernel_size = " << kernel_size << "\n";
  os << "roi_grid = " << roi_grid << "\n";
  os << "fc1 = " << fc1 << "\n";
  os << "fc2 = " << fc2 << "\n";
  os << "seed = " << seed << "\n";
  os << "crop_margin = " << fmt_double(crop_margin) << "\n";
  for (int i = 0; i < 3; ++i) {
    const StageSpec& s = schedule.stages[static_cast<std::size_t>(i)];
    os << "stage" << (i + 1) << "_lr = " << fmt_double(s.lr) << "\n";
    os << "stage" << (i + 1) << "_epochs = " << s.epochs << "\n";
  }
  os << "gt_mode = " << gt_mode << "\n";
  os << "teacher_force_saliency = " << (teacher_force_saliency ? "true" : "false") << "\n";
  return os.str();
}

RunConfig RunConfig::parse(std::istream& is) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ParamError("config line " + std::to_string(lineno) + " is not 'key = value': " + stripped);
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));

    auto as_double = [&] { return std::strtod(value.c_str(), nullptr); };
    auto as_int = [&] { return static_cast<int>(std::strtol(value.c_str(), nullptr, 10)); };

    if (key == "sigma") cfg.sigma = as_double();
    else if (key == "gamma") cfg.gamma = as_double();
    else if (key == "lambda") cfg.lambda = as_double();
    else if (key == "fallback_fraction") cfg.fallback_fraction = as_double();
    else if (key == "target_side") cfg.target_side = as_int();
    else if (key == "depth") cfg.depth = as_int();
    else if (key == "base_channels") cfg.base_channels = as_int();
    else if (key == "input_channels") cfg.input_channels = as_int();
    else if (key == "kernel_size") cfg.kernel_size = as_int();
    else if (key == "roi_grid") cfg.roi_grid = as_int();
    else if (key == "fc1") cfg.fc1 = as_int();
    else if (key == "fc2") cfg.fc2 = as_int();
    else if (key == "seed") cfg.seed = std::strtoull(value.c_str(), nullptr, 10);
    else if (key == "crop_margin") cfg.crop_margin = as_double();
    else if (key == "stage1_lr") cfg.schedule.stages[0].lr = as_double();
    else if (key == "stage1_epochs") cfg.schedule.stages[0].epochs = as_int();
    else if (key == "stage2_lr") cfg.schedule.stages[1].lr = as_double();
    else if (key == "stage2_epochs") cfg.schedule.stages[1].epochs = as_int();
    else if (key == "stage3_lr") cfg.schedule.stages[2].lr = as_double();
    else if (key == "stage3_epochs") cfg.schedule.stages[2].epochs = as_int();
    else if (key == "gt_mode") cfg.gt_mode = value;
    else if (key == "teacher_force_saliency") cfg.teacher_force_saliency = (value == "true" || value == "1");
    else throw ParamError("unknown config key '" + key + "' on line " + std::to_string(lineno));
  }
  if (cfg.gt_mode != "crop-box" && cfg.gt_mode != "full-image") {
    throw ParamError("gt_mode must be 'crop-box' or 'full-image', got '" + cfg.gt_mode + "'");
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file: " + path);
  return parse(is);
}

}  // namespace cropforge
