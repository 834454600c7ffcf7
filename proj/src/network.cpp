#include "kcb/network.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace kcb {

MessageBus::MessageBus(const DistanceMatrix& distances, int gamma)
    : distances_(&distances), gamma_(gamma), agents_(distances.size()) {
  if (gamma < 1) throw std::invalid_argument("message TTL gamma must be >= 1");
  recipients_.resize(agents_);
  for (int v = 0; v < agents_; ++v)
    for (int w = 0; w < agents_; ++w) {
      const int d = distances(v, w);
      if (d >= 1 && d <= gamma_) recipients_[v].push_back(w);
    }
  ring_.resize(static_cast<std::size_t>(gamma_) + 1);
  for (auto& s : ring_) s.inbox.resize(agents_);
}

MessageBus::Slot& MessageBus::slot_for(int round) {
  auto& s = ring_[static_cast<std::size_t>(round) % ring_.size()];
  if (s.round != round) {
    for (const auto& box : s.inbox)
      if (!box.empty())
        throw std::logic_error("message slot for round " + std::to_string(s.round) +
                               " reused before delivery");
    s.round = round;
  }
  return s;
}

void MessageBus::broadcast(const Message& m) {
  if (m.round < 1) throw std::invalid_argument("message round must be >= 1");
  if (m.origin < 0 || m.origin >= agents_) throw std::invalid_argument("message origin out of range");
  for (AgentId w : recipients_[m.origin]) {
    const int due = m.round + (*distances_)(m.origin, w);
    slot_for(due).inbox[w].push_back(m);
  }
}

std::vector<Message> MessageBus::deliver(int round, AgentId agent) {
  if (round < 1) throw std::invalid_argument("delivery round must be >= 1");
  auto& s = ring_[static_cast<std::size_t>(round) % ring_.size()];
  if (s.round != round) return {};
  std::vector<Message> out;
  out.swap(s.inbox.at(agent));
  std::sort(out.begin(), out.end(), [](const Message& a, const Message& b) {
    return a.round != b.round ? a.round < b.round : a.origin < b.origin;
  });
  return out;
}

std::size_t MessageBus::in_flight() const {
  std::size_t total = 0;
  for (const auto& s : ring_)
    for (const auto& box : s.inbox) total += box.size();
  return total;
}

}  // namespace kcb
