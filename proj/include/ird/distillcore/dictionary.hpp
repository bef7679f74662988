#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "ird/common/rng.hpp"

namespace ird::distill {

inline constexpr std::size_t kDefaultQueueCapacity = 10;

struct StoredFeature {
  std::vector<double> feature;
  std::uint64_t timestamp = 0;  // global insertion counter

  friend bool operator==(const StoredFeature&, const StoredFeature&) = default;
};

struct Retrieval {
  int concept_id = -1;
  std::vector<double> feature;
};

// Relation concept -> bounded FIFO queue of teacher relation features.
class ConceptDictionary {
 public:
  explicit ConceptDictionary(std::size_t capacity = kDefaultQueueCapacity);

  std::size_t capacity() const { return capacity_; }
  std::uint64_t clock() const { return clock_; }

  // Creates the entry when absent; evicts the oldest feature when full.
  void store(int concept_id, std::vector<double> feature);

  // Uniform concept among those in `concepts` with a nonempty queue, then a
  // uniform feature from its queue. nullopt when none qualifies.
  std::optional<Retrieval> retrieve(std::span<const int> concepts, Rng& rng) const;

  bool contains(int concept_id) const { return queues_.count(concept_id) != 0; }
  std::size_t size(int concept_id) const;
  std::vector<int> concepts() const;
  const std::deque<StoredFeature>& queue(int concept_id) const;
  std::size_t total_features() const;

  // Text dump: header, then per concept its id, length, width and one
  // "timestamp v..." line per stored feature, oldest first.
  void dump(std::ostream& os) const;
  static ConceptDictionary load(std::istream& is);

  friend bool operator==(const ConceptDictionary&, const ConceptDictionary&) = default;

 private:
  std::size_t capacity_;
  std::uint64_t clock_ = 0;
  std::map<int, std::deque<StoredFeature>> queues_;
};

}  // namespace ird::distill
