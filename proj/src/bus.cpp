#include "dscep/bus.hpp"

#include <chrono>

#include "dscep/errors.hpp"

namespace dscep {

class LocalSubscription : public Subscription {
 public:
  LocalSubscription(LocalBroker* broker, std::string topic, std::string group,
                    std::string consumer)
      : broker_(broker),
        topic_(std::move(topic)),
        group_(std::move(group)),
        consumer_(std::move(consumer)) {}

  ~LocalSubscription() override {
    std::lock_guard<std::mutex> lock(broker_->mu_);
    auto ti = broker_->topics_.find(topic_);
    if (ti == broker_->topics_.end()) return;
    auto gi = ti->second.groups.find(group_);
    if (gi == ti->second.groups.end()) return;
    gi->second.members.erase(consumer_);
  }

  std::optional<Message> next(int timeout_ms) override {
    std::unique_lock<std::mutex> lock(broker_->mu_);
    auto& topic = broker_->topics_.at(topic_);
    auto& group = topic.groups.at(group_);
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (group.cursor >= topic.log.size()) {
      if (broker_->cv_.wait_until(lock, deadline) == std::cv_status::timeout &&
          group.cursor >= topic.log.size()) {
        return std::nullopt;
      }
    }
    Message m{group.cursor, topic.log[group.cursor]};
    group.in_flight.emplace(group.cursor, consumer_);
    group.cursor++;
    return m;
  }

  void ack(uint64_t offset) override {
    std::lock_guard<std::mutex> lock(broker_->mu_);
    auto& group = broker_->topics_.at(topic_).groups.at(group_);
    auto it = group.in_flight.find(offset);
    if (it == group.in_flight.end() || it->second != consumer_)
      throw BusError("ack for offset not held by consumer");
    group.in_flight.erase(it);
  }

 private:
  LocalBroker* broker_;
  std::string topic_, group_, consumer_;
};

uint64_t Bus::publish_batch(const std::string& topic, const std::vector<std::string>& payloads) {
  uint64_t last = 0;
  for (const auto& p : payloads) last = publish(topic, p);
  return last;
}

LocalBroker::Topic& LocalBroker::topic_locked(const std::string& name) {
  return topics_[name];
}

uint64_t LocalBroker::publish(const std::string& topic, const std::string& payload) {
  std::lock_guard<std::mutex> lock(mu_);
  Topic& t = topic_locked(topic);
  t.log.push_back(payload);
  cv_.notify_all();
  return t.log.size() - 1;
}

void LocalBroker::ensure_group(const std::string& topic, const std::string& group) {
  std::lock_guard<std::mutex> lock(mu_);
  Topic& t = topic_locked(topic);
  auto it = t.groups.find(group);
  if (it == t.groups.end()) {
    Group g;
    g.cursor = t.log.size();  // no replay: start at the current end
    t.groups.emplace(group, std::move(g));
  }
}

std::unique_ptr<Subscription> LocalBroker::subscribe(const std::string& topic,
                                                     const std::string& group,
                                                     const std::string& consumer) {
  std::lock_guard<std::mutex> lock(mu_);
  Topic& t = topic_locked(topic);
  auto it = t.groups.find(group);
  if (it == t.groups.end()) {
    Group g;
    g.cursor = t.log.size();
    it = t.groups.emplace(group, std::move(g)).first;
  }
  if (!it->second.members.insert(consumer).second)
    throw BusError("duplicate consumer '" + consumer + "' in group '" + group + "'");
  return std::make_unique<LocalSubscription>(this, topic, group, consumer);
}

uint64_t LocalBroker::topic_end(const std::string& topic) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = topics_.find(topic);
  return it == topics_.end() ? 0 : it->second.log.size();
}

}  // namespace dscep
