#include "dscep/streamgen.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <json.hpp>

#include "dscep/errors.hpp"
#include "dscep/ntriples.hpp"
#include "dscep/wire.hpp"

namespace dscep {

using nlohmann::json;

namespace {

constexpr const char* kEntityNs = "http://example.org/scep/entity/";
constexpr const char* kTweetNs = "http://example.org/scep/tweet/";
constexpr const char* kPlaceNs = "http://example.org/scep/place/";
constexpr const char* kCountryNs = "http://example.org/scep/country/";

// The class trees hang under their root by level: level l+1 node i has
// parent node i/fanout of level l.
struct ClassTree {
  std::vector<std::vector<Term>> levels;  // levels[0] = {root}
  std::vector<Term> all;                  // flattened, root first

  ClassTree(const Term& root, const std::string& stem, int depth, int fanout) {
    levels.push_back({root});
    size_t width = 1;
    for (int d = 1; d <= depth; d++) {
      width *= static_cast<size_t>(fanout);
      std::vector<Term> level;
      level.reserve(width);
      for (size_t i = 0; i < width; i++)
        level.push_back(Term::iri(voc::ns + stem + std::to_string(d) + "_" + std::to_string(i)));
      levels.push_back(std::move(level));
    }
    for (const auto& lv : levels) all.insert(all.end(), lv.begin(), lv.end());
  }

  void edges(std::vector<Triple>& out, int fanout) const {
    Term sco = Term::iri(rdf_ns::sub_class_of);
    for (size_t d = 1; d < levels.size(); d++) {
      for (size_t i = 0; i < levels[d].size(); i++)
        out.push_back({levels[d][i], sco, levels[d - 1][i / static_cast<size_t>(fanout)]});
    }
  }

  size_t edge_count() const { return all.size() - 1; }
};

std::string one_decimal(int tenths) {
  char buf[16];
  snprintf(buf, sizeof buf, "%d.%d", tenths / 10, tenths % 10);
  return buf;
}

struct Pools {
  std::vector<Term> artists, shows, others;
  std::vector<Term> mentionable;  // artists + shows + others in that order
};

Pools make_pools(const GenConfig& cfg) {
  Pools p;
  auto fill = [](std::vector<Term>& v, const char* stem, size_t n) {
    v.reserve(n);
    for (size_t i = 0; i < n; i++)
      v.push_back(Term::iri(std::string(kEntityNs) + stem + std::to_string(i)));
  };
  fill(p.artists, "artist", cfg.artists);
  fill(p.shows, "show", cfg.shows);
  fill(p.others, "thing", cfg.others);
  p.mentionable.reserve(cfg.artists + cfg.shows + cfg.others);
  for (const auto* v : {&p.artists, &p.shows, &p.others})
    p.mentionable.insert(p.mentionable.end(), v->begin(), v->end());
  return p;
}

void check_config(const GenConfig& cfg) {
  if (cfg.tweet_count == 0) throw ConfigError("tweet_count must be positive");
  if (cfg.artists == 0 || cfg.shows == 0) throw ConfigError("artist/show pools must be non-empty");
  if (cfg.artist_depth < 1 || cfg.show_depth < 1 || cfg.artist_fanout < 1 || cfg.show_fanout < 1)
    throw ConfigError("class tree depth/fanout must be at least 1");
  if (cfg.places == 0 || cfg.countries == 0) throw ConfigError("places/countries must be non-empty");
  if (cfg.max_entities_per_tweet < 1) throw ConfigError("max_entities_per_tweet must be >= 1");
  if (static_cast<size_t>(cfg.max_entities_per_tweet) > cfg.artists + cfg.shows + cfg.others)
    throw ConfigError("max_entities_per_tweet exceeds the entity pool");
  if (cfg.retweet_percent < 0 || cfg.retweet_percent > 100 || cfg.sameas_percent < 0 ||
      cfg.sameas_percent > 100)
    throw ConfigError("percent knobs must be within 0..100");
  if (cfg.ts_step < 1) throw ConfigError("ts_step must be >= 1");
  if (cfg.start_ts < 0) throw ConfigError("start_ts must be >= 0");
  // the fixed per-tweet base is type+createdAt+sentiments+likes+shares+
  // mentions+retweet <= 7 + max_entities
  size_t base_max = 7 + static_cast<size_t>(cfg.max_entities_per_tweet);
  if (cfg.triples_per_tweet < base_max)
    throw ConfigError("triples_per_tweet must be at least " + std::to_string(base_max));
}

size_t tree_edges(int depth, int fanout) {
  size_t total = 0, width = 1;
  for (int d = 1; d <= depth; d++) {
    width *= static_cast<size_t>(fanout);
    total += width;
  }
  return total;
}

}  // namespace

size_t expected_kb_triple_count(const GenConfig& cfg) {
  size_t aliased = (cfg.artists * cfg.sameas_percent) / 100 +
                   (cfg.shows * cfg.sameas_percent) / 100 +
                   (cfg.others * cfg.sameas_percent) / 100;
  return tree_edges(cfg.artist_depth, cfg.artist_fanout) +
         tree_edges(cfg.show_depth, cfg.show_fanout) +
         (cfg.artists + cfg.shows + cfg.others)  // one typing per entity
         + aliased                               // one sameAs per aliased entity
         + cfg.artists                           // birthPlace
         + cfg.places                            // place -> country
         + cfg.countries                         // country -> code
         + 2;                                    // the two flag constants
}

std::vector<Triple> generate_kb_triples(const GenConfig& cfg) {
  check_config(cfg);
  std::mt19937_64 rng(cfg.seed);
  Pools pools = make_pools(cfg);

  ClassTree artist_tree(Term::iri(voc::musical_artist), "ArtistClass_", cfg.artist_depth,
                        cfg.artist_fanout);
  ClassTree show_tree(Term::iri(voc::television_show), "ShowClass_", cfg.show_depth,
                      cfg.show_fanout);

  std::vector<Triple> kb;
  artist_tree.edges(kb, cfg.artist_fanout);
  show_tree.edges(kb, cfg.show_fanout);

  Term type = Term::iri(rdf_ns::type);
  Term same_as = Term::iri(rdf_ns::same_as);

  // Typings; the leading sameas_percent of each pool is typed via an alias
  // whose IRI extends the entity IRI, so canonicalization maps alias->entity.
  auto type_pool = [&](const std::vector<Term>& pool,
                       const std::function<Term(std::mt19937_64&)>& pick_class) {
    size_t aliased = (pool.size() * cfg.sameas_percent) / 100;
    for (size_t i = 0; i < pool.size(); i++) {
      Term cls = pick_class(rng);
      if (i < aliased) {
        Term alias = Term::iri(pool[i].value + "/alias");
        kb.push_back({alias, same_as, pool[i]});
        kb.push_back({alias, type, cls});
      } else {
        kb.push_back({pool[i], type, cls});
      }
    }
  };
  type_pool(pools.artists, [&](std::mt19937_64& r) {
    return artist_tree.all[r() % artist_tree.all.size()];
  });
  type_pool(pools.shows,
            [&](std::mt19937_64& r) { return show_tree.all[r() % show_tree.all.size()]; });
  type_pool(pools.others, [&](std::mt19937_64& r) {
    return Term::iri(voc::ns + "OtherKind_" + std::to_string(r() % 10));
  });

  // Birthplace chains: artist -> place -> country -> code.
  Term birth_place = Term::iri(voc::birth_place);
  for (const auto& artist : pools.artists) {
    kb.push_back(
        {artist, birth_place, Term::iri(std::string(kPlaceNs) + std::to_string(rng() % cfg.places))});
  }
  Term country = Term::iri(voc::country);
  for (size_t i = 0; i < cfg.places; i++) {
    kb.push_back({Term::iri(std::string(kPlaceNs) + std::to_string(i)), country,
                  Term::iri(std::string(kCountryNs) + std::to_string(rng() % cfg.countries))});
  }
  Term code = Term::iri(voc::country_code);
  for (size_t i = 0; i < cfg.countries; i++) {
    char cc[8];
    snprintf(cc, sizeof cc, "C%02zu", i % 100);
    kb.push_back({Term::iri(std::string(kCountryNs) + std::to_string(i)), code,
                  Term::literal(cc)});
  }

  Term flag_value = Term::iri(voc::flag_value);
  kb.push_back({Term::iri(voc::pos_flag), flag_value, Term::typed("1.0", xsd::double_iri)});
  kb.push_back({Term::iri(voc::neg_flag), flag_value, Term::typed("0.0", xsd::double_iri)});
  return kb;
}

std::vector<GraphEvent> generate_stream_events(const GenConfig& cfg) {
  check_config(cfg);
  // Own generator (offset seed) so stream content never shifts when KB-side
  // knobs change the number of KB draws.
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  Pools pools = make_pools(cfg);

  Term type = Term::iri(rdf_ns::type);
  Term tweet_class = Term::iri(voc::tweet_class);
  Term mentions = Term::iri(voc::mentions);
  Term created_at = Term::iri(voc::created_at);
  Term pos = Term::iri(voc::sentiment_pos);
  Term neg = Term::iri(voc::sentiment_neg);
  Term likes = Term::iri(voc::like_count);
  Term shares = Term::iri(voc::share_count);
  Term retweet_of = Term::iri(voc::retweet_of);
  Term note = Term::iri(voc::note);

  std::vector<GraphEvent> out;
  out.reserve(cfg.tweet_count);
  for (size_t i = 0; i < cfg.tweet_count; i++) {
    int64_t ts = cfg.start_ts + static_cast<int64_t>(i) * cfg.ts_step;
    Term tweet = Term::iri(std::string(kTweetNs) + std::to_string(i));
    std::vector<Triple> triples;
    triples.reserve(cfg.triples_per_tweet);

    triples.push_back({tweet, type, tweet_class});
    triples.push_back({tweet, created_at, Term::integer(ts)});

    size_t m = 1 + rng() % static_cast<uint64_t>(cfg.max_entities_per_tweet);
    std::vector<size_t> picked;
    while (picked.size() < m) {
      size_t e = rng() % pools.mentionable.size();
      bool dup = false;
      for (size_t prev : picked) dup = dup || prev == e;
      if (!dup) picked.push_back(e);
    }
    for (size_t e : picked) triples.push_back({tweet, mentions, pools.mentionable[e]});

    triples.push_back({tweet, pos, Term::typed(one_decimal(static_cast<int>(rng() % 51)),
                                               xsd::double_iri)});
    triples.push_back({tweet, neg, Term::typed(one_decimal(static_cast<int>(rng() % 51)),
                                               xsd::double_iri)});
    triples.push_back({tweet, likes, Term::integer(static_cast<int64_t>(rng() % 10000))});
    triples.push_back({tweet, shares, Term::integer(static_cast<int64_t>(rng() % 1000))});
    if (i > 0 && rng() % 100 < static_cast<uint64_t>(cfg.retweet_percent)) {
      triples.push_back(
          {tweet, retweet_of, Term::iri(std::string(kTweetNs) + std::to_string(rng() % i))});
    }
    for (size_t k = triples.size(); k < cfg.triples_per_tweet; k++) {
      triples.push_back(
          {tweet, note, Term::literal("note " + std::to_string(i) + "/" + std::to_string(k))});
    }

    std::vector<TimestampedTriple> tts;
    tts.reserve(triples.size());
    for (auto& t : triples) tts.push_back({std::move(t), ts});
    out.push_back(make_graph_event("tweet/" + std::to_string(i), std::move(tts)));
  }
  return out;
}

GenConfig gen_config_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("generator config is not a json object");
  GenConfig cfg;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    auto as_u = [&](size_t& dst) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<int64_t>() >= 0))
        throw ConfigError("generator config: " + k + " must be a non-negative integer");
      dst = v.get<size_t>();
    };
    auto as_i = [&](int& dst) {
      if (!v.is_number_integer()) throw ConfigError("generator config: " + k + " must be an integer");
      dst = v.get<int>();
    };
    auto as_i64 = [&](int64_t& dst) {
      if (!v.is_number_integer()) throw ConfigError("generator config: " + k + " must be an integer");
      dst = v.get<int64_t>();
    };
    if (k == "seed") {
      if (!v.is_number_integer() && !v.is_number_unsigned())
        throw ConfigError("generator config: seed must be an integer");
      cfg.seed = v.get<uint64_t>();
    } else if (k == "tweet_count") {
      as_u(cfg.tweet_count);
    } else if (k == "artists") {
      as_u(cfg.artists);
    } else if (k == "shows") {
      as_u(cfg.shows);
    } else if (k == "others") {
      as_u(cfg.others);
    } else if (k == "artist_depth") {
      as_i(cfg.artist_depth);
    } else if (k == "artist_fanout") {
      as_i(cfg.artist_fanout);
    } else if (k == "show_depth") {
      as_i(cfg.show_depth);
    } else if (k == "show_fanout") {
      as_i(cfg.show_fanout);
    } else if (k == "places") {
      as_u(cfg.places);
    } else if (k == "countries") {
      as_u(cfg.countries);
    } else if (k == "triples_per_tweet") {
      as_u(cfg.triples_per_tweet);
    } else if (k == "max_entities_per_tweet") {
      as_i(cfg.max_entities_per_tweet);
    } else if (k == "retweet_percent") {
      as_i(cfg.retweet_percent);
    } else if (k == "sameas_percent") {
      as_i(cfg.sameas_percent);
    } else if (k == "start_ts") {
      as_i64(cfg.start_ts);
    } else if (k == "ts_step") {
      as_i64(cfg.ts_step);
    } else {
      throw ConfigError("generator config: unknown key: " + k);
    }
  }
  check_config(cfg);
  return cfg;
}

GenResult generate(const GenConfig& cfg, const std::string& stream_path,
                   const std::string& kb_path, const std::string& voc_path) {
  std::vector<Triple> kb = generate_kb_triples(cfg);
  size_t expected = expected_kb_triple_count(cfg);
  if (kb.size() != expected) {
    throw std::logic_error("kb generator drifted from its closed form: " +
                           std::to_string(kb.size()) + " vs " + std::to_string(expected));
  }
  std::vector<GraphEvent> events = generate_stream_events(cfg);

  {
    std::ofstream f(stream_path, std::ios::trunc | std::ios::binary);
    if (!f) throw ConfigError("cannot open stream output: " + stream_path);
    for (const auto& ev : events) f << encode_event(Event{ev}) << "\n";
  }
  {
    std::ofstream f(kb_path, std::ios::trunc | std::ios::binary);
    if (!f) throw ConfigError("cannot open kb output: " + kb_path);
    f << serialize_ntriples(kb);
  }
  if (!voc_path.empty()) {
    std::ofstream f(voc_path, std::ios::trunc | std::ios::binary);
    if (!f) throw ConfigError("cannot open glossary output: " + voc_path);
    f << "Vocabulary (" << voc::ns << ")\n\n"
      << "Classes\n"
      << "  Tweet              stream event subject\n"
      << "  MusicalArtist      artist class-tree root\n"
      << "  ArtistClass_d_i    artist tree node at depth d\n"
      << "  TelevisionShow     show class-tree root\n"
      << "  ShowClass_d_i      show tree node at depth d\n"
      << "  OtherKind_i        unrelated entity kinds\n\n"
      << "Stream predicates\n"
      << "  mentions           tweet -> entity\n"
      << "  createdAt          tweet timestamp (epoch ms)\n"
      << "  hasSentimentPos    positive score, one decimal in [0,5]\n"
      << "  hasSentimentNeg    negative score, one decimal in [0,5]\n"
      << "  likeCount          integer\n"
      << "  shareCount         integer\n"
      << "  retweetOf          tweet -> earlier tweet\n"
      << "  note               padding literals\n\n"
      << "KB predicates\n"
      << "  rdf:type           entity -> class (aliased entities typed on the alias)\n"
      << "  rdfs:subClassOf    class-tree edges\n"
      << "  owl:sameAs         alias -> entity\n"
      << "  birthPlace         artist -> place\n"
      << "  country            place -> country\n"
      << "  countryCode        country -> literal code\n"
      << "  flagValue          posFlag -> 1.0, negFlag -> 0.0 (xsd:double)\n";
  }

  GenResult res;
  res.events = events.size();
  for (const auto& ev : events) res.stream_triples += ev.triples.size();
  res.kb_triples = kb.size();
  return res;
}

std::vector<GraphEvent> load_stream_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open stream file: " + path);
  std::vector<GraphEvent> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(f, line)) {
    lineno++;
    if (line.empty()) continue;
    Event ev = decode_event(line);
    if (auto* ge = std::get_if<GraphEvent>(&ev)) {
      out.push_back(std::move(*ge));
    } else {
      const auto& tt = std::get<TimestampedTriple>(ev);
      GraphEvent ge2;
      ge2.graph_id = path + "#" + std::to_string(lineno);
      ge2.event_ts = tt.ts;
      ge2.triples.push_back(tt);
      out.push_back(std::move(ge2));
    }
  }
  return out;
}

}  // namespace dscep
