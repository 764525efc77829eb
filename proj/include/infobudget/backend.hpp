#pragma once

// Uniform scoring interface over synthetic models, recorded score files and a
// remote log-probability endpoint.
//
// Score file (line-delimited JSON, one object per line):
//   line 1  {"kind":"header","schema":"infobudget.scores/1","backend":...,
//            "config_hash":...,"seeds":{...}}
//   line 2+ {"kind":"score","item_id":...,"perm_index":k,"permutation":[1-based],
//            "question":...,"chunks":[permuted order],"labels":[...],
//            "logprobs":[aligned with labels],"backend":...,"latency_ms":...,
//            "smoothed":false}
// Records are sorted by (item_id, perm_index, permutation) and unique per
// (item_id, permutation).

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <vector>

#include "infobudget/dist_core.hpp"
#include "infobudget/permute.hpp"
#include "infobudget/synthmodel.hpp"
#include "json.hpp"

namespace infobudget {

inline constexpr const char* kScoreSchema = "infobudget.scores/1";

struct ScoreRequest {
  std::string item_id;
  std::string question;
  std::vector<std::string> chunks;  // in permuted order
  std::vector<std::string> labels;
  Permutation permutation;
  std::int64_t perm_index = 0;
};

struct ScoreResponse {
  std::vector<std::string> labels;
  std::vector<double> logprobs;  // nats, aligned with labels
  std::string backend;
  double latency_ms = 0.0;
  // Set once smoothing has been applied; smoothing is never applied twice.
  bool smoothed = false;

  friend bool operator==(const ScoreResponse&, const ScoreResponse&) = default;
};

// Predictive distribution of a response: exponentiate, smooth (unless the
// response is already marked smoothed) and order by `labels`.
FiniteDist predictive(const ScoreResponse& response, const std::vector<std::string>& labels,
                      double epsilon = kDefaultSmoothing);

// Returns the response with smoothed log-probabilities and the flag set; a
// response already flagged is returned unchanged.
ScoreResponse smooth_response(ScoreResponse response, double epsilon = kDefaultSmoothing);

// Implementations must be safe to call from several threads at once.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual ScoreResponse score(const ScoreRequest& request) = 0;
  virtual std::string id() const = 0;
};

struct SyntheticBackendConfig {
  ModelGenSpec generator;  // n and seed are overridden per item
  std::uint64_t seed = 0;
  std::string positive_label = "1";
  std::map<std::string, FirstOrderModel> models;  // explicit per-item models
};

// Scores with a first-order model per item: the explicit one if configured,
// otherwise generate_model() with n = chunk count and a seed derived from
// (seed, item_id). The request's permutation drives the prediction.
class SyntheticScorer final : public Scorer {
 public:
  explicit SyntheticScorer(SyntheticBackendConfig config);
  ScoreResponse score(const ScoreRequest& request) override;
  std::string id() const override { return "synthetic"; }

  FirstOrderModel model_for(const std::string& item_id, std::size_t n) const;
  const SyntheticBackendConfig& config() const noexcept { return config_; }

 private:
  SyntheticBackendConfig config_;
};

struct ScoreRecord {
  ScoreRequest request;
  ScoreResponse response;
};

struct ScoreFile {
  nlohmann::json header = nlohmann::json::object();
  std::vector<ScoreRecord> records;
};

nlohmann::json to_json(const ScoreRecord& record);
ScoreRecord score_record_from_json(const nlohmann::json& j);

// Sorts into canonical order and drops later duplicates of (item_id, permutation).
void canonicalize(std::vector<ScoreRecord>& records);

void write_score_file(const std::string& path, const ScoreFile& file);
ScoreFile read_score_file(const std::string& path);
std::string score_file_text(const ScoreFile& file);
ScoreFile parse_score_file(const std::string& text, const std::string& origin = "<memory>");

class ReplayScorer final : public Scorer {
 public:
  explicit ReplayScorer(const ScoreFile& file);
  ScoreResponse score(const ScoreRequest& request) override;
  std::string id() const override { return "replay"; }
  std::size_t size() const noexcept { return table_.size(); }

 private:
  std::map<std::pair<std::string, std::vector<std::size_t>>, ScoreResponse> table_;
};

// Wraps another scorer and keeps every (request, response) pair.
class RecordingScorer final : public Scorer {
 public:
  explicit RecordingScorer(Scorer& inner) : inner_(inner) {}
  ScoreResponse score(const ScoreRequest& request) override;
  std::string id() const override { return inner_.id(); }

  // Canonically sorted, de-duplicated copy.
  std::vector<ScoreRecord> records() const;
  ScoreFile to_file(nlohmann::json header_fields = nlohmann::json::object()) const;

 private:
  Scorer& inner_;
  mutable std::mutex mutex_;
  std::vector<ScoreRecord> records_;
};

// Remote endpoint protocol (HTTP POST, JSON):
//   request  {"item_id":...,"question":...,"chunks":[...],"labels":[...],
//             "permutation":[1-based]}
//   response {"logprobs":{"<label>": <log-prob in nats>, ...}}
// The bearer token, when set, goes in the Authorization header.
struct RemoteConfig {
  std::string url;  // http://host:port/path
  std::string token;
  std::chrono::milliseconds timeout{30000};
  int attempts = 3;
  std::chrono::milliseconds backoff{200};
  std::chrono::milliseconds backoff_cap{2000};
  int max_in_flight = 4;
};

// Environment variable consulted for the bearer token when none is configured.
inline constexpr const char* kRemoteTokenEnv = "INFOBUDGET_REMOTE_TOKEN";

class RemoteScorer final : public Scorer {
 public:
  explicit RemoteScorer(RemoteConfig config);
  ~RemoteScorer() override;
  ScoreResponse score(const ScoreRequest& request) override;
  std::string id() const override { return "remote"; }

  static nlohmann::json request_body(const ScoreRequest& request);
  // Parses a response body; throws MalformedResponseError / NonFiniteResponseError.
  static ScoreResponse parse_body(const std::string& body, const std::vector<std::string>& labels);

 private:
  RemoteConfig config_;
  std::string scheme_host_port_;
  std::string path_;
  std::unique_ptr<std::counting_semaphore<1024>> in_flight_;
};

}  // namespace infobudget
