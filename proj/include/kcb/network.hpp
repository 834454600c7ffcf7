#pragma once

#include "kcb/graph.hpp"
#include "kcb/kernel.hpp"

#include <vector>

namespace kcb {

/// <round, origin, augmented context, reward>.
struct Message {
  int round = 0;
  AgentId origin = 0;
  AugmentedContext payload;
  double reward = 0.0;
};

/// LOCAL-protocol delivery: a message created by v at round t reaches every
/// v' with 1 <= d(v, v') <= gamma at round t + d(v, v'), exactly once.
/// Messages farther than gamma hops are dropped.
///
/// Pending messages live in a ring of gamma + 1 round slots, so memory stays
/// bounded by the messages in flight.
class MessageBus {
 public:
  MessageBus(const DistanceMatrix& distances, int gamma);

  void broadcast(const Message& m);
  /// Messages due for `agent` at `round`, sorted by (created round, origin).
  /// Each message is handed out once; later calls for the same slot are empty.
  std::vector<Message> deliver(int round, AgentId agent);

  int gamma() const { return gamma_; }
  /// Destinations that will receive a message from `origin`.
  const std::vector<AgentId>& recipients(AgentId origin) const { return recipients_.at(origin); }
  std::size_t in_flight() const;

 private:
  struct Slot {
    int round = -1;
    std::vector<std::vector<Message>> inbox;  // per agent
  };
  Slot& slot_for(int round);

  const DistanceMatrix* distances_;
  int gamma_;
  int agents_;
  std::vector<std::vector<AgentId>> recipients_;
  std::vector<Slot> ring_;
};

}  // namespace kcb
