#ifndef CROPFORGE_PARAMS_HPP
#define CROPFORGE_PARAMS_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "cropforge/autodiff.hpp"
#include "cropforge/tensor.hpp"

namespace cropforge {

// Parameter partition: the saliency network weights and the offset
// regression head are trained in separate stages, so the optimizer needs to
// freeze one group while stepping the other.
enum class ParamGroup { kSaliency, kRegression };

struct ForwardCounters {
  std::uint64_t saliency_forwards = 0;
  std::uint64_t regression_forwards = 0;
};

// Named trainable leaves in registration order. Registration order is the
// canonical (deterministic) serialization order.
class ModelParams {
 public:
  Var& add(const std::string& name, ParamGroup group, Tensor init);
  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  Var& at(const std::string& name);
  const Var& at(const std::string& name) const;
  ParamGroup group_of(const std::string& name) const;

  const std::vector<std::string>& names() const { return order_; }
  std::size_t count() const { return order_.size(); }

  void set_frozen(ParamGroup group, bool frozen);
  bool frozen(ParamGroup group) const;

  void zero_all_grads();

  ForwardCounters counters;

 private:
  struct Entry {
    Var var;
    ParamGroup group;
  };
  std::vector<std::string> order_;
  std::unordered_map<std::string, Entry> index_;
  bool frozen_saliency_ = false;
  bool frozen_regression_ = false;
};

// p <- p - lr * grad for every parameter in an unfrozen group, then zeroes
// gradients (frozen groups get their scratch gradients cleared too, so a
// later unfreeze never consumes stale accumulation). Parameter data of
// frozen groups is left bit-identical.
void sgd_step(ModelParams& params, double learning_rate);

}  // namespace cropforge

#endif  // CROPFORGE_PARAMS_HPP
