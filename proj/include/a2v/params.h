#ifndef A2V_PARAMS_H_
#define A2V_PARAMS_H_

#include <string>
#include <utility>
#include <vector>

#include "a2v/autodiff.h"
#include "a2v/tensor.h"

namespace a2v {

// Ordered, named collection of trainable leaves. Order is the serialization
// and EMA pairing order, so it must stay stable across construction paths.
struct ParamSet {
  std::vector<std::pair<std::string, ad::Var>> items;

  ad::Var add(const std::string& name, Tensor init);
  ad::Var get(const std::string& name) const;
  bool has(const std::string& name) const;
  void zero_grad();
  void set_requires_grad(bool enabled);
  std::vector<Tensor> values() const;
  int64_t numel() const;
};

}  // namespace a2v

#endif  // A2V_PARAMS_H_
