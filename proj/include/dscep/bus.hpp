#pragma once

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dscep {

struct Message {
  uint64_t offset = 0;
  std::string payload;
};

class Subscription {
 public:
  virtual ~Subscription() = default;
  // Next undelivered message in this consumer's group share; blocks up to
  // timeout_ms, nullopt on timeout. Each topic offset is handed to exactly
  // one member of the group.
  virtual std::optional<Message> next(int timeout_ms) = 0;
  virtual void ack(uint64_t offset) = 0;
};

class Bus {
 public:
  virtual ~Bus() = default;
  virtual uint64_t publish(const std::string& topic, const std::string& payload) = 0;
  // Ordered bulk publish; returns the last offset (0 for an empty batch).
  // The default loops publish(); transports may pipeline.
  virtual uint64_t publish_batch(const std::string& topic,
                                 const std::vector<std::string>& payloads);
  // Registers the group at the topic's current end without adding a member.
  // Consumers attach later and see everything published after this call.
  virtual void ensure_group(const std::string& topic, const std::string& group) = 0;
  virtual std::unique_ptr<Subscription> subscribe(const std::string& topic,
                                                  const std::string& group,
                                                  const std::string& consumer) = 0;
};

class LocalBroker : public Bus {
 public:
  uint64_t publish(const std::string& topic, const std::string& payload) override;
  void ensure_group(const std::string& topic, const std::string& group) override;
  std::unique_ptr<Subscription> subscribe(const std::string& topic, const std::string& group,
                                          const std::string& consumer) override;

  uint64_t topic_end(const std::string& topic);

 private:
  friend class LocalSubscription;

  struct Group {
    uint64_t cursor = 0;  // next offset to deliver
    std::set<std::string> members;
    std::map<uint64_t, std::string> in_flight;  // offset -> consumer
  };
  struct Topic {
    std::vector<std::string> log;
    std::map<std::string, Group> groups;
  };

  Topic& topic_locked(const std::string& name);

  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, Topic> topics_;
};

}  // namespace dscep
