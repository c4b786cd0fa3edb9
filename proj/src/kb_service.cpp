#include "dscep/kb_service.hpp"

#include <json.hpp>

#include "dscep/errors.hpp"
#include "dscep/wire.hpp"

namespace dscep {

using nlohmann::json;

namespace {

struct BadRequest : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json pattern_term_to_json(const PatternTerm& pt) {
  if (const Var* v = as_var(pt)) return json{{"k", "var"}, {"v", v->name}};
  return term_to_json(*as_term(pt));
}

PatternTerm pattern_term_from_json(const json& j) {
  if (!j.is_object() || !j.contains("k") || !j["k"].is_string())
    throw BadRequest("pattern term is not an object with a kind");
  if (j["k"] == "var") {
    if (!j.contains("v") || !j["v"].is_string() || j["v"].get<std::string>().empty())
      throw BadRequest("variable without a name");
    return Var{j["v"].get<std::string>()};
  }
  try {
    return term_from_json(j);
  } catch (const std::exception& e) {
    throw BadRequest(std::string("bad term: ") + e.what());
  }
}

json item_to_json(const ServiceItem& item) {
  if (const auto* pat = std::get_if<PatternTriple>(&item)) {
    return json{{"s", pattern_term_to_json(pat->s)},
                {"p", pattern_term_to_json(pat->p)},
                {"o", pattern_term_to_json(pat->o)}};
  }
  const auto& path = std::get<PatternPath>(item);
  json steps = json::array();
  for (const auto& st : path.steps) {
    const char* mod = st.mod == PathStep::Mod::Once ? "once"
                      : st.mod == PathStep::Mod::Star ? "star"
                                                      : "plus";
    steps.push_back(json{{"pred", st.pred}, {"mod", mod}});
  }
  return json{{"s", pattern_term_to_json(path.s)},
              {"o", pattern_term_to_json(path.o)},
              {"path", std::move(steps)}};
}

ServiceItem item_from_json(const json& j) {
  if (!j.is_object()) throw BadRequest("bgp item is not an object");
  if (j.contains("path")) {
    PatternPath path;
    path.s = pattern_term_from_json(j.value("s", json{}));
    path.o = pattern_term_from_json(j.value("o", json{}));
    if (!j["path"].is_array() || j["path"].empty()) throw BadRequest("empty path");
    for (const auto& stj : j["path"]) {
      if (!stj.is_object() || !stj.contains("pred") || !stj["pred"].is_string())
        throw BadRequest("path step without pred");
      PathStep st;
      st.pred = stj["pred"].get<std::string>();
      std::string mod = stj.value("mod", "once");
      if (mod == "once") {
        st.mod = PathStep::Mod::Once;
      } else if (mod == "star") {
        st.mod = PathStep::Mod::Star;
      } else if (mod == "plus") {
        st.mod = PathStep::Mod::Plus;
      } else {
        throw BadRequest("unknown path mod: " + mod);
      }
      path.steps.push_back(std::move(st));
    }
    if (path.steps.size() > 3) throw BadRequest("path length exceeds 3 steps");
    return path;
  }
  if (!j.contains("s") || !j.contains("p") || !j.contains("o"))
    throw BadRequest("bgp item missing s/p/o");
  PatternTriple pat;
  pat.s = pattern_term_from_json(j["s"]);
  pat.p = pattern_term_from_json(j["p"]);
  pat.o = pattern_term_from_json(j["o"]);
  return pat;
}

}  // namespace

KbService::KbService(std::shared_ptr<const TripleStore> store, const std::string& addr)
    : store_(std::move(store)) {
  if (!store_) throw ConfigError("kb service requires a store");
  server_ = std::make_unique<net::LineServer>(
      addr, [this](net::LineSocket sock) { handle(std::move(sock)); });
}

void KbService::handle(net::LineSocket sock) {
  try {
    for (;;) {
      auto line = sock.recv_line();
      if (!line) return;
      uint64_t id = 0;
      try {
        json req = json::parse(*line, nullptr, false);
        if (req.is_discarded() || !req.is_object()) throw BadRequest("payload is not json");
        id = req.value("id", 0ULL);
        if (req.value("op", "") != "query") throw BadRequest("unknown op");
        if (!req.contains("bgp") || !req["bgp"].is_array()) throw BadRequest("missing bgp");
        std::vector<ServiceItem> items;
        for (const auto& ij : req["bgp"]) items.push_back(item_from_json(ij));
        std::vector<Var> vars;
        if (req.contains("vars")) {
          if (!req["vars"].is_array()) throw BadRequest("vars is not an array");
          for (const auto& vj : req["vars"]) {
            if (!vj.is_string()) throw BadRequest("vars entries must be strings");
            vars.push_back(Var{vj.get<std::string>()});
          }
        }

        auto [rows, touched] = evaluate_block(*store_, items, vars);
        json jrows = json::array();
        for (const auto& row : rows) {
          json jr = json::object();
          for (const auto& [name, term] : row.bindings) jr[name] = term_to_json(term);
          jrows.push_back(std::move(jr));
        }
        json reply{{"op", "result"}, {"id", id}, {"rows", std::move(jrows)}, {"touched", touched}};
        sock.send_line(reply.dump());
      } catch (const BadRequest& e) {
        json reply{{"op", "error"}, {"id", id}, {"code", "bad-request"}, {"msg", e.what()}};
        sock.send_line(reply.dump());
      } catch (const EvalError& e) {
        json reply{{"op", "error"}, {"id", id}, {"code", "eval"}, {"msg", e.what()}};
        sock.send_line(reply.dump());
      }
    }
  } catch (const NetError&) {
    // connection gone
  }
}

ServiceReply SocketServiceTransport::bgp_query(const std::string& endpoint,
                                               const std::vector<ServiceItem>& items,
                                               const std::vector<Var>& vars) {
  auto it = endpoints_.find(endpoint);
  if (it == endpoints_.end()) throw EvalError("unknown service endpoint", endpoint);
  uint64_t id;
  {
    std::lock_guard<std::mutex> lock(id_mu_);
    id = next_id_++;
  }

  try {
    net::LineSocket sock = net::LineSocket::connect_to(it->second);
    json bgp = json::array();
    for (const auto& item : items) bgp.push_back(item_to_json(item));
    json vj = json::array();
    for (const auto& v : vars) vj.push_back(v.name);
    json req{{"op", "query"}, {"id", id}, {"bgp", std::move(bgp)}, {"vars", std::move(vj)}};
    sock.send_line(req.dump());

    auto line = sock.recv_line();
    if (!line) throw NetError("service closed connection");
    json reply = json::parse(*line, nullptr, false);
    if (reply.is_discarded() || !reply.is_object())
      throw NetError("service sent an unintelligible frame");
    if (reply.value("op", "") == "error")
      throw EvalError("service error: " + reply.value("msg", "unknown"), endpoint);
    if (reply.value("op", "") != "result" || reply.value("id", 0ULL) != id)
      throw NetError("unexpected service reply");

    ServiceReply out;
    out.touched = reply.value("touched", 0ULL);
    if (!reply.contains("rows") || !reply["rows"].is_array())
      throw NetError("service reply without rows");
    for (const auto& jr : reply["rows"]) {
      SolutionMapping row;
      for (auto itr = jr.begin(); itr != jr.end(); ++itr)
        row.bindings.emplace(itr.key(), term_from_json(itr.value()));
      out.rows.push_back(std::move(row));
    }
    return out;
  } catch (const EvalError&) {
    throw;
  } catch (const std::exception& e) {
    throw EvalError("service request to '" + endpoint + "' failed: " + e.what(), endpoint);
  }
}

}  // namespace dscep
