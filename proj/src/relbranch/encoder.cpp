#include <algorithm>

#include "ird/common/errors.hpp"
#include "ird/numkit/ops.hpp"
#include "ird/relbranch/branch.hpp"
#include "ird/relbranch/spatial.hpp"

namespace ird::rel {

std::size_t pair_input_dim(std::size_t detection_feature_dim, std::size_t global_dim) {
  return 2 * detection_feature_dim + kSpatialDim + global_dim;
}

void write_pair_input(const det::BoxPair& p, std::span<const double> global, std::span<double> out) {
  const auto& xh = *p.human_features;
  const auto& xo = *p.object_features;
  if (xh.size() != xo.size() || out.size() != pair_input_dim(xh.size(), global.size())) {
    throw InvalidInput("pair input: feature dimensions do not match the encoder input");
  }
  auto it = std::copy(xh.begin(), xh.end(), out.begin());
  it = std::copy(xo.begin(), xo.end(), it);
  const auto sp = spatial_encoding(p.human_box, p.object_box);
  it = std::copy(sp.begin(), sp.end(), it);
  std::copy(global.begin(), global.end(), it);
}

num::Tensor pair_inputs(const std::vector<det::BoxPair>& pairs, std::span<const double> global) {
  if (pairs.empty()) return num::Tensor(num::Shape{0, 0});
  const std::size_t dim = pair_input_dim(pairs.front().human_features->size(), global.size());
  num::Tensor out(num::Shape{pairs.size(), dim});
  for (std::size_t i = 0; i < pairs.size(); ++i) write_pair_input(pairs[i], global, out.row(i));
  return out;
}

num::Var RelationBranch::encode(const std::vector<num::Var>& bound, num::Var inputs) const {
  if (inputs.value().cols() != cfg_.encoder.input_dim) {
    throw InvalidInput("encode: input width " + std::to_string(inputs.value().cols()) + " but encoder expects " +
                       std::to_string(cfg_.encoder.input_dim));
  }
  num::Var h = inputs;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    h = num::linear(h, bound[2 * l], bound[2 * l + 1]);
    if (l + 1 < layer_count()) h = num::relu(h);
  }
  return h;
}

num::Tensor RelationBranch::encode(const num::Tensor& inputs) const {
  if (inputs.cols() != cfg_.encoder.input_dim) {
    throw InvalidInput("encode: input width " + std::to_string(inputs.cols()) + " but encoder expects " +
                       std::to_string(cfg_.encoder.input_dim));
  }
  num::Tensor h = inputs;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    h = num::linear(h, params_.value(2 * l), params_.value(2 * l + 1));
    if (l + 1 < layer_count()) {
      for (double& v : h.storage()) v = v > 0.0 ? v : 0.0;
    }
  }
  return h;
}

}  // namespace ird::rel
