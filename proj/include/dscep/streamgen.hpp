#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dscep/rdf.hpp"

namespace dscep {

// Synthetic social-stream generator: timestamped tweet graph events that
// mention entities, plus a background knowledge base holding class trees,
// entity typings, sameAs aliases and birthplace chains. Deterministic for a
// given config (single mt19937_64, fixed draw order).
struct GenConfig {
  uint64_t seed = 1;
  size_t tweet_count = 2000;

  size_t artists = 2400;
  size_t shows = 1500;
  size_t others = 900;

  int artist_depth = 3;
  int artist_fanout = 18;
  int show_depth = 3;
  int show_fanout = 13;

  size_t places = 300;
  size_t countries = 50;

  size_t triples_per_tweet = 38;   // events are padded to exactly this size
  int max_entities_per_tweet = 4;  // 1..N distinct mentions
  int retweet_percent = 30;
  int sameas_percent = 20;         // leading fraction of each pool is aliased

  int64_t start_ts = 1600000000000;  // epoch ms of the first tweet
  int64_t ts_step = 1;               // strictly increasing
};

// Strict JSON front end: unknown keys are rejected.
GenConfig gen_config_from_json(const std::string& text);

// Closed-form size of the raw (pre-canonicalization) knowledge base.
size_t expected_kb_triple_count(const GenConfig& cfg);

std::vector<GraphEvent> generate_stream_events(const GenConfig& cfg);
std::vector<Triple> generate_kb_triples(const GenConfig& cfg);

struct GenResult {
  size_t events = 0;
  size_t stream_triples = 0;
  size_t kb_triples = 0;
};

// Writes the stream (JSONL, one wire event per line), the KB (N-Triples) and,
// when voc_path is non-empty, a glossary of the vocabulary. Verifies the KB
// against expected_kb_triple_count.
GenResult generate(const GenConfig& cfg, const std::string& stream_path,
                   const std::string& kb_path, const std::string& voc_path = "");

// Reads a JSONL stream file back into ordered graph events.
std::vector<GraphEvent> load_stream_file(const std::string& path);

namespace voc {

inline const std::string ns = "http://example.org/scep/voc#";
inline const std::string out_ns = "http://example.org/scep/out#";

inline const std::string tweet_class = ns + "Tweet";
inline const std::string musical_artist = ns + "MusicalArtist";
inline const std::string television_show = ns + "TelevisionShow";

inline const std::string mentions = ns + "mentions";
inline const std::string created_at = ns + "createdAt";
inline const std::string sentiment_pos = ns + "hasSentimentPos";
inline const std::string sentiment_neg = ns + "hasSentimentNeg";
inline const std::string like_count = ns + "likeCount";
inline const std::string share_count = ns + "shareCount";
inline const std::string retweet_of = ns + "retweetOf";
inline const std::string note = ns + "note";

inline const std::string birth_place = ns + "birthPlace";
inline const std::string country = ns + "country";
inline const std::string country_code = ns + "countryCode";

inline const std::string flag_value = ns + "flagValue";
inline const std::string pos_flag = ns + "posFlag";
inline const std::string neg_flag = ns + "negFlag";

}  // namespace voc

}  // namespace dscep
