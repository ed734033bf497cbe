#include "cropforge/params.hpp"

#include "cropforge/errors.hpp"

namespace cropforge {

Var& ModelParams::add(const std::string& name, ParamGroup group, Tensor init) {
  if (index_.count(name)) throw ParamError("duplicate parameter name: " + name);
  auto [it, _] = index_.emplace(name, Entry{Var(std::move(init), /*requires_grad=*/true), group});
  order_.push_back(name);
  return it->second.var;
}

Var& ModelParams::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ParamError("unknown parameter: " + name);
  return it->second.var;
}

const Var& ModelParams::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ParamError("unknown parameter: " + name);
  return it->second.var;
}

ParamGroup ModelParams::group_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ParamError("unknown parameter: " + name);
  return it->second.group;
}

void ModelParams::set_frozen(ParamGroup group, bool frozen) {
  if (group == ParamGroup::kSaliency) {
    frozen_saliency_ = frozen;
  } else {
    frozen_regression_ = frozen;
  }
}

bool ModelParams::frozen(ParamGroup group) const {
  return group == ParamGroup::kSaliency ? frozen_saliency_ : frozen_regression_;
}

void ModelParams::zero_all_grads() {
  for (const auto& name : order_) index_.at(name).var.zero_grad();
}

void sgd_step(ModelParams& params, double learning_rate) {
  for (const auto& name : params.names()) {
    Var& p = params.at(name);
    if (params.frozen(params.group_of(name))) {
      if (p.has_grad()) p.zero_grad();
      continue;
    }
    if (!p.has_grad()) {
      throw TrainingStateError("sgd_step: unfrozen parameter '" + name + "' has no accumulated gradient");
    }
    if (learning_rate != 0.0) {
      double* data = p.value().data();
      const double* g = p.grad().data();
      for (std::size_t i = 0; i < p.size(); ++i) data[i] -= learning_rate * g[i];
    }
    p.zero_grad();
  }
}

}  // namespace cropforge
