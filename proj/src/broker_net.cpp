#include "dscep/broker_net.hpp"

#include <json.hpp>

#include "dscep/errors.hpp"

namespace dscep {

using nlohmann::json;

namespace {

std::string error_frame(const std::string& msg) {
  json j{{"op", "error"}, {"msg", msg}};
  return j.dump();
}

// Required string/integer field access that degrades to protocol errors.
std::string need_str(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw BusError(std::string("missing field: ") + key);
  return it->get<std::string>();
}

uint64_t need_u64(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) {
    if (it != j.end() && it->is_number_integer() && it->get<int64_t>() >= 0)
      return static_cast<uint64_t>(it->get<int64_t>());
    throw BusError(std::string("missing field: ") + key);
  }
  return it->get<uint64_t>();
}

}  // namespace

BrokerServer::BrokerServer(LocalBroker& broker, const std::string& addr) : broker_(broker) {
  server_ = std::make_unique<net::LineServer>(
      addr, [this](net::LineSocket sock) { handle(std::move(sock)); });
}

void BrokerServer::handle(net::LineSocket sock) {
  std::unique_ptr<Subscription> sub;
  try {
    for (;;) {
      auto line = sock.recv_line();
      if (!line) return;  // client closed
      json reply;
      try {
        json req = json::parse(*line);
        std::string op = need_str(req, "op");
        if (op == "pub") {
          uint64_t off = broker_.publish(need_str(req, "topic"), need_str(req, "payload"));
          reply = {{"op", "pub-ok"}, {"offset", off}};
        } else if (op == "ensure-group") {
          broker_.ensure_group(need_str(req, "topic"), need_str(req, "group"));
          reply = {{"op", "ensure-ok"}};
        } else if (op == "sub") {
          if (sub) throw BusError("connection already subscribed");
          sub = broker_.subscribe(need_str(req, "topic"), need_str(req, "group"),
                                  need_str(req, "consumer"));
          reply = {{"op", "sub-ok"}};
        } else if (op == "next") {
          if (!sub) throw BusError("next without subscription");
          int timeout = static_cast<int>(need_u64(req, "timeout"));
          auto msg = sub->next(timeout);
          if (msg) {
            reply = {{"op", "msg"}, {"offset", msg->offset}, {"payload", msg->payload}};
          } else {
            reply = {{"op", "none"}};
          }
        } else if (op == "ack") {
          if (!sub) throw BusError("ack without subscription");
          sub->ack(need_u64(req, "offset"));
          reply = {{"op", "ack-ok"}};
        } else {
          throw BusError("unknown op: " + op);
        }
      } catch (const json::exception&) {
        sock.send_line(error_frame("malformed request"));
        continue;
      } catch (const BusError& e) {
        sock.send_line(error_frame(e.what()));
        continue;
      }
      sock.send_line(reply.dump());
    }
  } catch (const NetError&) {
    // connection torn down; the subscription (if any) dies with it
  }
}

// ------------------------------------------------------------------ client

namespace {

json expect_reply(net::LineSocket& sock, const char* want) {
  auto line = sock.recv_line();
  if (!line) throw NetError("broker closed connection");
  json j = json::parse(*line, nullptr, false);
  if (j.is_discarded() || !j.contains("op") || !j["op"].is_string())
    throw NetError("broker sent an unintelligible frame");
  std::string op = j["op"].get<std::string>();
  if (op == "error") throw BusError(j.value("msg", "broker error"));
  if (op != want) throw NetError("unexpected broker reply: " + op);
  return j;
}

}  // namespace

RemoteBus::RemoteBus(std::string addr) : addr_(std::move(addr)) {
  pub_ = net::LineSocket::connect_to(addr_);
}

uint64_t RemoteBus::publish(const std::string& topic, const std::string& payload) {
  std::lock_guard<std::mutex> lock(pub_mu_);
  json req{{"op", "pub"}, {"topic", topic}, {"payload", payload}};
  pub_.send_line(req.dump());
  return expect_reply(pub_, "pub-ok")["offset"].get<uint64_t>();
}

uint64_t RemoteBus::publish_batch(const std::string& topic,
                                  const std::vector<std::string>& payloads) {
  constexpr size_t kMaxInFlight = 64;
  std::lock_guard<std::mutex> lock(pub_mu_);
  uint64_t last = 0;
  size_t in_flight = 0;
  for (const auto& p : payloads) {
    json req{{"op", "pub"}, {"topic", topic}, {"payload", p}};
    pub_.send_line(req.dump());
    in_flight++;
    if (in_flight >= kMaxInFlight) {
      last = expect_reply(pub_, "pub-ok")["offset"].get<uint64_t>();
      in_flight--;
    }
  }
  while (in_flight > 0) {
    last = expect_reply(pub_, "pub-ok")["offset"].get<uint64_t>();
    in_flight--;
  }
  return last;
}

void RemoteBus::ensure_group(const std::string& topic, const std::string& group) {
  std::lock_guard<std::mutex> lock(pub_mu_);
  json req{{"op", "ensure-group"}, {"topic", topic}, {"group", group}};
  pub_.send_line(req.dump());
  expect_reply(pub_, "ensure-ok");
}

namespace {

class RemoteSubscription : public Subscription {
 public:
  explicit RemoteSubscription(net::LineSocket sock) : sock_(std::move(sock)) {}

  std::optional<Message> next(int timeout_ms) override {
    std::lock_guard<std::mutex> lock(mu_);
    json req{{"op", "next"}, {"timeout", timeout_ms}};
    sock_.send_line(req.dump());
    auto line = sock_.recv_line();
    if (!line) throw NetError("broker closed connection");
    json j = json::parse(*line);
    std::string op = j["op"].get<std::string>();
    if (op == "none") return std::nullopt;
    if (op == "error") throw BusError(j.value("msg", "broker error"));
    if (op != "msg") throw NetError("unexpected broker reply: " + op);
    return Message{j["offset"].get<uint64_t>(), j["payload"].get<std::string>()};
  }

  void ack(uint64_t offset) override {
    std::lock_guard<std::mutex> lock(mu_);
    json req{{"op", "ack"}, {"offset", offset}};
    sock_.send_line(req.dump());
    expect_reply(sock_, "ack-ok");
  }

 private:
  std::mutex mu_;
  net::LineSocket sock_;
};

}  // namespace

std::unique_ptr<Subscription> RemoteBus::subscribe(const std::string& topic,
                                                   const std::string& group,
                                                   const std::string& consumer) {
  net::LineSocket sock = net::LineSocket::connect_to(addr_);
  json req{{"op", "sub"}, {"topic", topic}, {"group", group}, {"consumer", consumer}};
  sock.send_line(req.dump());
  expect_reply(sock, "sub-ok");
  return std::make_unique<RemoteSubscription>(std::move(sock));
}

}  // namespace dscep
