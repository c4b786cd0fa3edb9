#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dscep/operator.hpp"
#include "dscep/streamgen.hpp"

namespace dscep {
namespace bench {

// Order-independent digest of a triple multiset: serialize, sort, FNV-1a 64,
// hex. Two result streams are "the same" exactly when these match.
std::string content_digest(const std::vector<Triple>& triples);

// Canonical continuous-query texts, keyed by pipeline name ("q15-local",
// "q16-service", "cquery1-mono", "cquery1-a" ... "cquery1-g"). The same
// texts ship under queries/ for the CLI launchers; a test pins the copies
// together.
const std::vector<std::string>& query_names();
const std::string& query_text(const std::string& name);  // throws std::out_of_range

// One report line: a per-window metrics row tagged with its experiment.
struct ReportRow {
  std::string step;
  std::string pipeline;
  MetricsRow m;
};

struct SummaryRow {
  std::string step;
  std::string pipeline;
  double wall_millis = 0;
  std::string digest;
};

// header: step,pipeline,operator_id,window_seq,triples,eval_millis,
//         kb_triples_touched,engine_id
void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows);
// header: step,pipeline,wall_millis,digest
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);

// Desk-scale data shapes. All knobs that tune an experiment live here; the
// run_step* entry points take a shape so callers may substitute their own.
GenConfig step1_config(uint64_t seed);
GenConfig step2_config(uint64_t seed);
GenConfig step3_config(uint64_t seed);

// Declarative pipeline node; the runner turns it into an OperatorSpec.
struct PipelineOp {
  std::string id;
  std::vector<std::string> inputs;
  std::string output;
  WindowConfig window;
  int engines = 1;
  std::string query;  // bench query name
  KbMode kb = KbMode::None;
};

// One in-process pipeline execution: local broker, operators, terminal
// client, unthrottled replay. Wall time runs from first publish until the
// client has drained EOS on the sink.
struct PipelineEnv {
  std::string source = "t1";
  std::string sink = "out";
  // KB for LocalMerge ops (preloaded, already canonicalized) and for the
  // embedded KB service when any op uses RemoteService.
  std::shared_ptr<const TripleStore> kb;
  // Per-operator KB provisioning: a LocalMerge op whose id has an entry here
  // reloads that N-Triples text every window instead of sharing env.kb.
  std::map<std::string, std::shared_ptr<const std::string>> kb_texts;
  double replay_rate = 0;  // <= 0: unthrottled
};

struct PipelineOutcome {
  double wall_millis = 0;
  std::string digest;
  size_t result_triples = 0;
  size_t client_windows = 0;
  std::vector<MetricsRow> metrics;  // all operators, engine emission order
};

PipelineOutcome run_pipeline(const std::vector<PipelineOp>& ops, const PipelineEnv& env,
                             const std::vector<GraphEvent>& events);

// Named pipeline topologies over the shared source/sink topics.
std::vector<PipelineOp> q15_pipeline(KbMode mode, int engines = 1);
std::vector<PipelineOp> q16_pipeline(KbMode mode);
std::vector<PipelineOp> cquery1_mono_pipeline();
std::vector<PipelineOp> cquery1_dag_pipeline();

// Step 1: Q15/Q16 analogs under both KB access modes; digests must agree
// across modes per query.
struct Step1Result {
  std::vector<SummaryRow> summary;  // 4 sections: query x mode
  std::vector<ReportRow> report;
  bool q15_modes_agree = false;
  bool q16_modes_agree = false;
};
Step1Result run_step1(const GenConfig& shape);

// Step 2: one monolithic query vs its operator decomposition on identical
// input. All KB operators reload their KB every window. The mono operator is
// provisioned with the full KB file; each KB subquery operator (A, B) is
// provisioned with only the KB subset its query uses, computed up front with
// extract_used_kb over the run's windows — the decomposed form can divide the
// KB among operators, the monolith cannot. Digests are compared on
// `digest_seeds` consecutive seeds; wall times are `timing_runs` repetitions
// on the first seed.
struct Step2Result {
  std::vector<uint64_t> seeds;
  std::vector<std::string> mono_digests, dag_digests;  // per seed
  std::vector<double> mono_walls, dag_walls;           // per timing run
  double mono_median_millis = 0, dag_median_millis = 0;
  double reduction_percent = 0;  // (mono - dag) / mono * 100
  bool digests_equal = false;
  size_t kb_total_size = 0;  // triples in the mono operator's KB
  size_t kb_a_size = 0, kb_b_size = 0;  // triples in A's / B's KB part
  std::vector<MetricsRow> mono_metrics, dag_metrics;  // first timing run
  std::vector<ReportRow> report;
  std::vector<SummaryRow> summary;
};
Step2Result run_step2(const GenConfig& shape, int timing_runs = 5, int digest_seeds = 3);

// Step 3: direct per-window evaluation (no bus) of the KB-touching subquery
// analogs under per-window reload. Sweep "used": the KB is the extracted
// used set of a growing window sample (total == used). Sweep "total": the
// full used set plus noise triples the queries never touch.
struct SweepPoint {
  std::string subquery;  // "A" | "B"
  std::string sweep;     // "used" | "total"
  size_t used_size = 0;
  size_t total_size = 0;
  double mean_window_millis = 0;
  size_t windows = 0;
};
struct Step3Result {
  std::vector<SweepPoint> points;
  std::vector<ReportRow> report;
};
Step3Result run_step3(const GenConfig& shape);

// Parallel-equivalence check: the Q15 pipeline must produce one digest per
// seed regardless of engine count.
struct EngineScalingResult {
  std::vector<uint64_t> seeds;
  std::vector<int> engine_counts;
  std::vector<std::vector<std::string>> digests;  // [seed][engine_count]
  bool all_equal = false;
};
EngineScalingResult run_engine_scaling(const std::vector<uint64_t>& seeds,
                                       const std::vector<int>& engine_counts);

}  // namespace bench
}  // namespace dscep
