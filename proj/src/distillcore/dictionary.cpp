#include "ird/distillcore/dictionary.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "ird/common/errors.hpp"

namespace ird::distill {

ConceptDictionary::ConceptDictionary(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw InvalidInput("dictionary: queue capacity must be positive");
}

void ConceptDictionary::store(int concept_id, std::vector<double> feature) {
  auto& q = queues_[concept_id];
  if (!q.empty() && q.front().feature.size() != feature.size()) {
    throw InvalidInput("dictionary: feature width changed for concept " + std::to_string(concept_id));
  }
  if (q.size() == capacity_) q.pop_front();
  q.push_back({std::move(feature), clock_++});
}

std::optional<Retrieval> ConceptDictionary::retrieve(std::span<const int> concepts, Rng& rng) const {
  std::vector<int> live;
  for (int c : concepts) {
    auto it = queues_.find(c);
    if (it != queues_.end() && !it->second.empty()) live.push_back(c);
  }
  if (live.empty()) return std::nullopt;
  const int c = live[uniform_index(rng, live.size())];
  const auto& q = queues_.at(c);
  return Retrieval{c, q[uniform_index(rng, q.size())].feature};
}

std::size_t ConceptDictionary::size(int concept_id) const {
  auto it = queues_.find(concept_id);
  return it == queues_.end() ? 0 : it->second.size();
}

std::vector<int> ConceptDictionary::concepts() const {
  std::vector<int> out;
  for (const auto& [c, q] : queues_) out.push_back(c);
  return out;
}

const std::deque<StoredFeature>& ConceptDictionary::queue(int concept_id) const {
  auto it = queues_.find(concept_id);
  if (it == queues_.end()) throw InvalidInput("dictionary: no entry for concept " + std::to_string(concept_id));
  return it->second;
}

std::size_t ConceptDictionary::total_features() const {
  std::size_t n = 0;
  for (const auto& [c, q] : queues_) n += q.size();
  return n;
}

void ConceptDictionary::dump(std::ostream& os) const {
  const auto old = os.precision(17);
  os << "ird-dictionary 1 capacity " << capacity_ << " clock " << clock_ << " concepts " << queues_.size() << '\n';
  for (const auto& [c, q] : queues_) {
    os << "concept " << c << ' ' << q.size() << ' ' << (q.empty() ? 0 : q.front().feature.size()) << '\n';
    for (const auto& f : q) {
      os << f.timestamp;
      for (double v : f.feature) os << ' ' << v;
      os << '\n';
    }
  }
  os.precision(old);
}

ConceptDictionary ConceptDictionary::load(std::istream& is) {
  std::string magic, kcap, kclock, kconcepts;
  int version = 0;
  std::size_t cap = 0, n = 0;
  std::uint64_t clock = 0;
  is >> magic >> version >> kcap >> cap >> kclock >> clock >> kconcepts >> n;
  if (!is || magic != "ird-dictionary" || version != 1) throw RuntimeFailure("dictionary: bad dump header");
  ConceptDictionary d(cap);
  d.clock_ = clock;
  for (std::size_t i = 0; i < n; ++i) {
    std::string kw;
    int c = 0;
    std::size_t len = 0, width = 0;
    is >> kw >> c >> len >> width;
    if (!is || kw != "concept") throw RuntimeFailure("dictionary: bad concept record");
    auto& q = d.queues_[c];
    for (std::size_t k = 0; k < len; ++k) {
      StoredFeature f;
      f.feature.resize(width);
      is >> f.timestamp;
      for (double& v : f.feature) is >> v;
      q.push_back(std::move(f));
    }
    if (!is) throw RuntimeFailure("dictionary: truncated dump");
  }
  return d;
}

}  // namespace ird::distill
