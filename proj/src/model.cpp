#include "cropforge/model.hpp"

#include <map>

#include "cropforge/checkpoint.hpp"
#include "cropforge/errors.hpp"

namespace cropforge {

void build_head(const UNetConfig& unet, const HeadConfig& head, ModelParams& params) {
  if (head.grid < 1 || head.fc1 < 1 || head.fc2 < 1) throw ParamError("build_head: invalid head config");
  // Separate init stream from the saliency net so widening one group never
  // reshuffles the other.
  Rng rng(unet.seed ^ 0x9e3779b97f4a7c15ull);
  const int in_features = unet.bottleneck_channels() * head.grid * head.grid;
  params.add("regress.fc1.weight", ParamGroup::kRegression,
             glorot_uniform({head.fc1, in_features}, in_features, head.fc1, rng));
  params.add("regress.fc1.bias", ParamGroup::kRegression, Tensor({head.fc1}));
  params.add("regress.fc2.weight", ParamGroup::kRegression,
             glorot_uniform({head.fc2, head.fc1}, head.fc1, head.fc2, rng));
  params.add("regress.fc2.bias", ParamGroup::kRegression, Tensor({head.fc2}));
  params.add("regress.fc3.weight", ParamGroup::kRegression, glorot_uniform({4, head.fc2}, head.fc2, 4, rng));
  params.add("regress.fc3.bias", ParamGroup::kRegression, Tensor({4}));
}

Var forward_head(const HeadConfig& head, ModelParams& params, const Var& pooled) {
  if (pooled.value().rank() != 3 || pooled.shape()[1] != head.grid || pooled.shape()[2] != head.grid) {
    throw ShapeError("forward_head expects [C," + std::to_string(head.grid) + "," + std::to_string(head.grid) +
                     "] pooled features, got " + pooled.value().shape_str());
  }
  params.counters.regression_forwards++;
  Var x = flatten(pooled);
  x = relu(fully_connected(x, params.at("regress.fc1.weight"), params.at("regress.fc1.bias")));
  x = relu(fully_connected(x, params.at("regress.fc2.weight"), params.at("regress.fc2.bias")));
  return fully_connected(x, params.at("regress.fc3.weight"), params.at("regress.fc3.bias"));
}

CropModel CropModel::create(const ModelConfig& cfg) {
  CropModel model;
  model.cfg = cfg;
  build_unet(cfg.unet, model.params);
  build_head(cfg.unet, cfg.head, model.params);
  return model;
}

namespace {

Tensor scalar_record(double v) { return Tensor({1}, {v}); }

}  // namespace

void CropModel::save(const std::string& path) const {
  CheckpointWriter writer(path);
  writer.record("_config.depth", scalar_record(cfg.unet.depth));
  writer.record("_config.base_channels", scalar_record(cfg.unet.base_channels));
  writer.record("_config.input_channels", scalar_record(cfg.unet.input_channels));
  writer.record("_config.kernel_size", scalar_record(cfg.unet.kernel_size));
  writer.record("_config.seed", scalar_record(static_cast<double>(cfg.unet.seed)));
  writer.record("_config.grid", scalar_record(cfg.head.grid));
  writer.record("_config.fc1", scalar_record(cfg.head.fc1));
  writer.record("_config.fc2", scalar_record(cfg.head.fc2));
  for (const auto& name : params.names()) writer.record(name, params.at(name).value());
  writer.close();
}

CropModel CropModel::load(const std::string& path) {
  CheckpointReader reader(path);
  std::map<std::string, double> config;
  std::map<std::string, Tensor> tensors;
  while (auto rec = reader.next()) {
    if (rec->first.rfind("_config.", 0) == 0) {
      if (rec->second.size() != 1) throw IoError("malformed config record '" + rec->first + "' in " + path);
      config[rec->first.substr(8)] = rec->second[0];
    } else {
      tensors.emplace(rec->first, std::move(rec->second));
    }
  }

  auto get = [&](const char* key) {
    auto it = config.find(key);
    if (it == config.end()) throw IoError(std::string("checkpoint missing _config.") + key + ": " + path);
    return it->second;
  };
  ModelConfig cfg;
  cfg.unet.depth = static_cast<int>(get("depth"));
  cfg.unet.base_channels = static_cast<int>(get("base_channels"));
  cfg.unet.input_channels = static_cast<int>(get("input_channels"));
  cfg.unet.kernel_size = static_cast<int>(get("kernel_size"));
  cfg.unet.seed = static_cast<std::uint64_t>(get("seed"));
  cfg.head.grid = static_cast<int>(get("grid"));
  cfg.head.fc1 = static_cast<int>(get("fc1"));
  cfg.head.fc2 = static_cast<int>(get("fc2"));

  // Rebuild the canonical structure, then overwrite values record by record;
  // this validates the file against the architecture it claims to carry.
  CropModel model = create(cfg);
  for (const auto& name : model.params.names()) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw IoError("checkpoint missing parameter '" + name + "': " + path);
    Tensor& dst = model.params.at(name).value();
    if (!dst.same_shape(it->second)) {
      throw IoError("checkpoint parameter '" + name + "' has shape " + it->second.shape_str() + ", expected " +
                    dst.shape_str());
    }
    dst.values() = it->second.values();
    tensors.erase(it);
  }
  if (!tensors.empty()) {
    throw IoError("checkpoint carries unknown parameter '" + tensors.begin()->first + "': " + path);
  }
  return model;
}

}  // namespace cropforge
