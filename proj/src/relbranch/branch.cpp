#include <algorithm>
#include <cmath>

#include "ird/common/errors.hpp"
#include "ird/relbranch/branch.hpp"

namespace ird::rel {

RelationBranch::RelationBranch(BranchConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
  const auto& enc = cfg_.encoder;
  if (enc.input_dim == 0 || enc.feature_dim == 0) throw InvalidInput("relation branch: encoder dims must be positive");
  if (!(cfg_.eta_init > 0.0)) throw InvalidInput("relation branch: eta_init must be positive");
  if (!(cfg_.lambda >= 0.0 && cfg_.lambda <= 1.0)) throw InvalidInput("relation branch: lambda must lie in [0,1]");

  std::vector<std::size_t> widths{enc.input_dim};
  widths.insert(widths.end(), enc.hidden.begin(), enc.hidden.end());
  widths.push_back(enc.feature_dim);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    // He init for the ReLU stack.
    const double sd = std::sqrt(2.0 / static_cast<double>(widths[l]));
    num::Tensor w(num::Shape{widths[l], widths[l + 1]});
    for (double& v : w.storage()) v = normal(rng, sd);
    params_.add("enc." + std::to_string(l) + ".weight", std::move(w));
    params_.add("enc." + std::to_string(l) + ".bias", num::Tensor(num::Shape{widths[l + 1]}));
  }
  params_.add("cls.weight", num::Tensor(num::Shape{0, enc.feature_dim}));
  params_.add("cls.log_eta", num::Tensor(num::Shape{1}, std::log(cfg_.eta_init)));
}

int RelationBranch::row_of(int relation) const {
  auto it = std::find(relations_.begin(), relations_.end(), relation);
  return it == relations_.end() ? -1 : static_cast<int>(it - relations_.begin());
}

double RelationBranch::eta() const { return std::exp(params_.value(cls_eta_index())[0]); }

void RelationBranch::grow_head(const std::vector<int>& new_relations, Rng& rng) {
  for (std::size_t i = 0; i < new_relations.size(); ++i) {
    if (row_of(new_relations[i]) >= 0 ||
        std::find(new_relations.begin(), new_relations.begin() + static_cast<long>(i), new_relations[i]) !=
            new_relations.begin() + static_cast<long>(i)) {
      throw InvalidInput("grow_head: relation " + std::to_string(new_relations[i]) + " is already in the head");
    }
  }
  if (new_relations.empty()) return;
  num::Tensor& w = params_.value(cls_weight_index());
  const std::size_t d = cfg_.encoder.feature_dim;
  std::vector<double> data = w.storage();
  for (std::size_t i = 0; i < new_relations.size() * d; ++i) data.push_back(normal(rng, kNewRowStd));
  w = num::Tensor(num::Shape{relations_.size() + new_relations.size(), d}, std::move(data));
  relations_.insert(relations_.end(), new_relations.begin(), new_relations.end());
}

void RelationBranch::grow_head_from(const RelationBranch& source) {
  if (source.relations_.size() < relations_.size() ||
      !std::equal(relations_.begin(), relations_.end(), source.relations_.begin())) {
    throw InvalidInput("grow_head_from: source head is not an extension of this head");
  }
  const std::size_t d = cfg_.encoder.feature_dim;
  const num::Tensor& src = source.params_.value(cls_weight_index());
  num::Tensor& w = params_.value(cls_weight_index());
  std::vector<double> data = w.storage();
  data.insert(data.end(), src.storage().begin() + static_cast<long>(relations_.size() * d), src.storage().end());
  w = num::Tensor(num::Shape{source.relations_.size(), d}, std::move(data));
  relations_ = source.relations_;
}

num::Var RelationBranch::classify(const std::vector<num::Var>& bound, num::Var z) const {
  return cosine_logits(z, bound[cls_weight_index()], bound[cls_eta_index()]);
}

num::Tensor RelationBranch::classify(const num::Tensor& z) const {
  return cosine_logits(z, params_.value(cls_weight_index()), params_.value(cls_eta_index())[0]);
}

}  // namespace ird::rel
