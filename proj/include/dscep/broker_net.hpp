#pragma once

#include <memory>
#include <mutex>
#include <string>

#include "dscep/bus.hpp"
#include "dscep/net.hpp"

namespace dscep {

// Exposes a LocalBroker over newline-JSON TCP frames:
//   {"op":"pub","topic":t,"payload":p}            -> {"op":"pub-ok","offset":n}
//   {"op":"ensure-group","topic":t,"group":g}     -> {"op":"ensure-ok"}
//   {"op":"sub","topic":t,"group":g,"consumer":c} -> {"op":"sub-ok"}
//   {"op":"next","timeout":ms}                    -> {"op":"msg",...} | {"op":"none"}
//   {"op":"ack","offset":n}                       -> {"op":"ack-ok"}
// Failures answer {"op":"error","msg":m} and keep the connection open.
// A connection carries at most one subscription (established by "sub").
class BrokerServer {
 public:
  BrokerServer(LocalBroker& broker, const std::string& addr);
  std::string address() const { return server_->address(); }
  uint16_t port() const { return server_->port(); }
  void stop() { server_->stop(); }

 private:
  void handle(net::LineSocket sock);

  LocalBroker& broker_;
  std::unique_ptr<net::LineServer> server_;
};

// Bus client speaking the BrokerServer protocol. publish/ensure_group share
// one mutex-guarded connection; every subscription opens its own.
class RemoteBus : public Bus {
 public:
  explicit RemoteBus(std::string addr);

  uint64_t publish(const std::string& topic, const std::string& payload) override;
  void ensure_group(const std::string& topic, const std::string& group) override;
  std::unique_ptr<Subscription> subscribe(const std::string& topic, const std::string& group,
                                          const std::string& consumer) override;

  // Pipelined bulk publish: keeps a bounded number of unacknowledged frames
  // in flight instead of a round trip per message.
  uint64_t publish_batch(const std::string& topic,
                         const std::vector<std::string>& payloads) override;

 private:
  std::string addr_;
  std::mutex pub_mu_;
  net::LineSocket pub_;
};

}  // namespace dscep
