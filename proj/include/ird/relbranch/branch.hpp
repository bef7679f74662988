#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ird/common/rng.hpp"
#include "ird/detstub/detector.hpp"
#include "ird/numkit/params.hpp"
#include "ird/numkit/tape.hpp"

namespace ird::rel {

struct EncoderConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden{64, 64};
  std::size_t feature_dim = 64;  // D, fixed across phases
};

struct BranchConfig {
  EncoderConfig encoder;
  double eta_init = 10.0;
  double lambda = 0.26;
};

// Stabilizer in the cosine norms: ||v|| + eps.
inline constexpr double kCosineEps = 1e-8;
inline constexpr double kNewRowStd = 0.01;

// Encoder input for one pair: [x_h ; x_o ; spatial ; g].
std::size_t pair_input_dim(std::size_t detection_feature_dim, std::size_t global_dim);
void write_pair_input(const det::BoxPair& p, std::span<const double> global, std::span<double> out);
num::Tensor pair_inputs(const std::vector<det::BoxPair>& pairs, std::span<const double> global);

// Cosine logits s_ik = eta * <w_k/(|w_k|+eps), z_i/(|z_i|+eps)>, eta = exp(log_eta).
num::Tensor cosine_logits(const num::Tensor& z, const num::Tensor& w, double log_eta);
num::Var cosine_logits(num::Var z, num::Var w, num::Var log_eta);

// Final per-relation score: (s_h*s_o)^(1-lambda) * sigmoid(s_k)^lambda.
// Throws InvalidInput for lambda outside [0,1].
std::vector<double> fuse_scores(double human_score, double object_score, std::span<const double> logits,
                                double lambda);

double sigmoid(double x);

// Relation encoder f(p, g; theta) followed by the cosine relation classifier.
// Parameters live in one ordered set:
//   enc.<i>.weight [in,out], enc.<i>.bias [out]  for each layer i
//   cls.weight [K,D]   one row per active relation, in order of introduction
//   cls.log_eta [1]    global learnable scale, eta > 0 by construction
class RelationBranch {
 public:
  RelationBranch() = default;
  RelationBranch(BranchConfig cfg, Rng& rng);

  const BranchConfig& config() const { return cfg_; }
  num::ParameterSet& params() { return params_; }
  const num::ParameterSet& params() const { return params_; }

  // Relation ids in classifier-row order.
  const std::vector<int>& relations() const { return relations_; }
  std::size_t active_relations() const { return relations_.size(); }
  int row_of(int relation) const;
  double eta() const;

  // Appends classifier rows for new relation ids (N(0, 0.01^2) init).
  // Existing rows are untouched. Throws InvalidInput on duplicates.
  void grow_head(const std::vector<int>& new_relations, Rng& rng);
  // Appends rows copied verbatim from another branch (teacher lockstep).
  void grow_head_from(const RelationBranch& source);

  // Tape forward; `bound` is num::bind(tape, params(), ...).
  num::Var encode(const std::vector<num::Var>& bound, num::Var inputs) const;
  num::Var classify(const std::vector<num::Var>& bound, num::Var z) const;

  // Tape-free forward.
  num::Tensor encode(const num::Tensor& inputs) const;
  num::Tensor classify(const num::Tensor& z) const;

  void set_relations(std::vector<int> relations) { relations_ = std::move(relations); }

 private:
  std::size_t layer_count() const { return cfg_.encoder.hidden.size() + 1; }
  std::size_t cls_weight_index() const { return 2 * layer_count(); }
  std::size_t cls_eta_index() const { return 2 * layer_count() + 1; }

  BranchConfig cfg_;
  num::ParameterSet params_;
  std::vector<int> relations_;
};

}  // namespace ird::rel
