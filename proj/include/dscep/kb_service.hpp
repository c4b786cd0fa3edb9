#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "dscep/engine.hpp"
#include "dscep/net.hpp"
#include "dscep/store.hpp"

namespace dscep {

// Serves batched pattern-block queries against one knowledge base over
// newline-JSON TCP frames:
//   {"op":"query","id":n,"bgp":[item...],"vars":["a",...]}
//     -> {"op":"result","id":n,"rows":[{"a":<term>,...}...],"touched":n}
// where an item is {"s":pt,"p":pt,"o":pt} or {"s":pt,"o":pt,"path":[steps]},
// pt is {"k":"var","v":name} or a wire term, and a step is
// {"pred":iri,"mod":"once"|"star"|"plus"}. Malformed requests answer
// {"op":"error","id":n,"code":"bad-request","msg":m} and keep the connection.
class KbService {
 public:
  KbService(std::shared_ptr<const TripleStore> store, const std::string& addr);
  std::string address() const { return server_->address(); }
  uint16_t port() const { return server_->port(); }
  size_t kb_size() const { return store_->size(); }
  void stop() { server_->stop(); }

 private:
  void handle(net::LineSocket sock);

  std::shared_ptr<const TripleStore> store_;
  std::unique_ptr<net::LineServer> server_;
};

// ServiceTransport speaking the KbService protocol. Endpoint names resolve
// through the address map; each request uses its own connection, so the
// transport is safe to share across engine threads.
class SocketServiceTransport : public ServiceTransport {
 public:
  explicit SocketServiceTransport(std::map<std::string, std::string> endpoints)
      : endpoints_(std::move(endpoints)) {}

  ServiceReply bgp_query(const std::string& endpoint, const std::vector<ServiceItem>& items,
                         const std::vector<Var>& vars) override;

 private:
  std::map<std::string, std::string> endpoints_;
  std::mutex id_mu_;
  uint64_t next_id_ = 1;
};

}  // namespace dscep
