#include "infobudget/backend.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "infobudget/error.hpp"
#include "infobudget/rng.hpp"

namespace infobudget {

using nlohmann::json;

namespace {

double softplus(double x) noexcept {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

std::string describe_key(const std::string& item_id, const Permutation& perm) {
  std::ostringstream os;
  os << "item '" << item_id << "' permutation [";
  const auto one = perm.to_one_based();
  for (std::size_t i = 0; i < one.size(); ++i) os << (i ? "," : "") << one[i];
  os << "]";
  return os.str();
}

// RAII slot in the in-flight limiter.
class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<1024>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<1024>& sem_;
};

}  // namespace

FiniteDist predictive(const ScoreResponse& response, const std::vector<std::string>& labels,
                      double epsilon) {
  if (response.labels.size() != response.logprobs.size()) {
    throw MalformedResponseError("response labels and log-probabilities differ in length");
  }
  std::vector<double> mass(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = std::find(response.labels.begin(), response.labels.end(), labels[i]);
    if (it == response.labels.end()) {
      throw MalformedResponseError("response lacks label '" + labels[i] + "'");
    }
    const double lp = response.logprobs[static_cast<std::size_t>(it - response.labels.begin())];
    if (!std::isfinite(lp)) throw NonFiniteResponseError("non-finite log-probability for '" + labels[i] + "'");
    mass[i] = std::exp(lp);
  }
  if (response.smoothed) return smooth_normalize(labels, mass, 0.0);
  return smooth_normalize(labels, mass, epsilon);
}

ScoreResponse smooth_response(ScoreResponse response, double epsilon) {
  if (response.smoothed) return response;
  const auto dist = predictive(response, response.labels, epsilon);
  for (std::size_t i = 0; i < response.logprobs.size(); ++i) {
    response.logprobs[i] = std::log(dist.masses()[i]);
  }
  response.smoothed = true;
  return response;
}

// ---------------------------------------------------------------- synthetic

SyntheticScorer::SyntheticScorer(SyntheticBackendConfig config) : config_(std::move(config)) {
  config_.generator.potential.validate();
  for (const auto& [id, model] : config_.models) model.validate();
}

FirstOrderModel SyntheticScorer::model_for(const std::string& item_id, std::size_t n) const {
  if (const auto it = config_.models.find(item_id); it != config_.models.end()) {
    if (it->second.n() != n) {
      throw DataError("synthetic model for '" + item_id + "' has n=" + std::to_string(it->second.n()) +
                      " but the item has " + std::to_string(n) + " chunks");
    }
    return it->second;
  }
  ModelGenSpec spec = config_.generator;
  spec.n = n;
  spec.seed = derive_seed(config_.seed, fnv1a64(item_id));
  return generate_model(spec);
}

ScoreResponse SyntheticScorer::score(const ScoreRequest& request) {
  if (request.labels.size() != 2) throw InputError("synthetic backend scores exactly two labels");
  const auto pos = std::find(request.labels.begin(), request.labels.end(), config_.positive_label);
  if (pos == request.labels.end()) {
    throw InputError("synthetic backend needs the positive label '" + config_.positive_label + "'");
  }
  const auto model = model_for(request.item_id, request.permutation.size());
  const auto table = potential_table(model.potential, model.n());
  const double logit = model_logit(model, table, request.permutation);

  ScoreResponse r;
  r.labels = request.labels;
  r.logprobs.assign(2, 0.0);
  const auto p = static_cast<std::size_t>(pos - request.labels.begin());
  r.logprobs[p] = -softplus(-logit);
  r.logprobs[1 - p] = -softplus(logit);
  r.backend = id();
  return r;
}

// ---------------------------------------------------------------- score files

json to_json(const ScoreRecord& record) {
  const auto& q = record.request;
  const auto& s = record.response;
  json j;
  j["kind"] = "score";
  j["item_id"] = q.item_id;
  j["perm_index"] = q.perm_index;
  j["permutation"] = q.permutation.to_one_based();
  j["question"] = q.question;
  j["chunks"] = q.chunks;
  j["labels"] = s.labels;
  j["logprobs"] = s.logprobs;
  j["backend"] = s.backend;
  j["latency_ms"] = s.latency_ms;
  j["smoothed"] = s.smoothed;
  return j;
}

ScoreRecord score_record_from_json(const json& j) {
  try {
    ScoreRecord r;
    r.request.item_id = j.at("item_id").get<std::string>();
    r.request.perm_index = j.at("perm_index").get<std::int64_t>();
    const auto one = j.at("permutation").get<std::vector<std::int64_t>>();
    r.request.permutation = Permutation::from_one_based(one);
    r.request.question = j.value("question", std::string());
    r.request.chunks = j.value("chunks", std::vector<std::string>());
    r.request.labels = j.at("labels").get<std::vector<std::string>>();
    r.response.labels = r.request.labels;
    for (const auto& v : j.at("logprobs")) {
      if (!v.is_number()) throw NonFiniteResponseError("score record has a non-numeric log-probability");
      r.response.logprobs.push_back(v.get<double>());
    }
    if (r.response.logprobs.size() != r.response.labels.size()) {
      throw DataError("score record labels and log-probabilities differ in length");
    }
    r.response.backend = j.value("backend", std::string());
    r.response.latency_ms = j.value("latency_ms", 0.0);
    r.response.smoothed = j.value("smoothed", false);
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed score record: ") + e.what());
  }
}

void canonicalize(std::vector<ScoreRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const ScoreRecord& a, const ScoreRecord& b) {
    return std::tie(a.request.item_id, a.request.perm_index, a.request.permutation) <
           std::tie(b.request.item_id, b.request.perm_index, b.request.permutation);
  });
  std::set<std::pair<std::string, std::vector<std::size_t>>> seen;
  std::vector<ScoreRecord> unique;
  unique.reserve(records.size());
  for (auto& r : records) {
    if (seen.emplace(r.request.item_id, r.request.permutation.slots()).second) {
      unique.push_back(std::move(r));
    }
  }
  records = std::move(unique);
}

std::string score_file_text(const ScoreFile& file) {
  json header = file.header;
  header["kind"] = "header";
  header["schema"] = kScoreSchema;
  std::string out = header.dump() + "\n";
  auto records = file.records;
  canonicalize(records);
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

void write_score_file(const std::string& path, const ScoreFile& file) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  os << score_file_text(file);
  if (!os) throw DataError("write to '" + path + "' failed");
}

ScoreFile parse_score_file(const std::string& text, const std::string& origin) {
  ScoreFile file;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
    const auto kind = j.value("kind", std::string("score"));
    if (kind == "header") {
      if (j.value("schema", std::string()) != kScoreSchema) {
        throw DataError(origin + ": unsupported score schema '" + j.value("schema", std::string()) + "'");
      }
      file.header = j;
      have_header = true;
    } else {
      file.records.push_back(score_record_from_json(j));
    }
  }
  if (!have_header) throw DataError(origin + ": score file has no header line");
  return file;
}

ScoreFile read_score_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open score file '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_score_file(ss.str(), path);
}

// ---------------------------------------------------------------- replay

ReplayScorer::ReplayScorer(const ScoreFile& file) {
  for (const auto& r : file.records) {
    table_.emplace(std::make_pair(r.request.item_id, r.request.permutation.slots()), r.response);
  }
}

ScoreResponse ReplayScorer::score(const ScoreRequest& request) {
  const auto it = table_.find({request.item_id, request.permutation.slots()});
  if (it == table_.end()) {
    throw MissingRecordError("no recorded score for " + describe_key(request.item_id, request.permutation));
  }
  return it->second;
}

// ---------------------------------------------------------------- recording

ScoreResponse RecordingScorer::score(const ScoreRequest& request) {
  ScoreResponse r = inner_.score(request);
  std::lock_guard lock(mutex_);
  records_.push_back({request, r});
  return r;
}

std::vector<ScoreRecord> RecordingScorer::records() const {
  std::vector<ScoreRecord> copy;
  {
    std::lock_guard lock(mutex_);
    copy = records_;
  }
  canonicalize(copy);
  return copy;
}

ScoreFile RecordingScorer::to_file(json header_fields) const {
  ScoreFile f;
  f.header = std::move(header_fields);
  f.header["backend"] = inner_.id();
  f.records = records();
  return f;
}

// ---------------------------------------------------------------- remote

RemoteScorer::RemoteScorer(RemoteConfig config) : config_(std::move(config)) {
  if (config_.attempts < 1) throw InputError("remote attempts must be >= 1");
  if (config_.max_in_flight < 1 || config_.max_in_flight > 1024) {
    throw InputError("remote max_in_flight must lie in [1, 1024]");
  }
  const auto scheme_end = config_.url.find("://");
  if (scheme_end == std::string::npos || config_.url.compare(0, scheme_end, "http") != 0) {
    throw InputError("remote url must start with http://");
  }
  const auto path_start = config_.url.find('/', scheme_end + 3);
  scheme_host_port_ = config_.url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.url.substr(path_start);
  if (config_.token.empty()) {
    if (const char* env = std::getenv(kRemoteTokenEnv)) config_.token = env;
  }
  in_flight_ = std::make_unique<std::counting_semaphore<1024>>(config_.max_in_flight);
}

RemoteScorer::~RemoteScorer() = default;

json RemoteScorer::request_body(const ScoreRequest& request) {
  return json{{"item_id", request.item_id},
              {"question", request.question},
              {"chunks", request.chunks},
              {"labels", request.labels},
              {"permutation", request.permutation.to_one_based()}};
}

ScoreResponse RemoteScorer::parse_body(const std::string& body, const std::vector<std::string>& labels) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw MalformedResponseError(std::string("remote body is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("logprobs") || !j["logprobs"].is_object()) {
    throw MalformedResponseError("remote body lacks a 'logprobs' object");
  }
  const auto& lp = j["logprobs"];
  ScoreResponse r;
  r.labels = labels;
  for (const auto& label : labels) {
    if (!lp.contains(label)) throw MalformedResponseError("remote body lacks label '" + label + "'");
    const auto& v = lp[label];
    if (v.is_null()) throw NonFiniteResponseError("remote log-probability for '" + label + "' is null");
    if (!v.is_number()) throw MalformedResponseError("remote log-probability for '" + label + "' is not a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw NonFiniteResponseError("remote log-probability for '" + label + "' is not finite");
    r.logprobs.push_back(d);
  }
  return r;
}

ScoreResponse RemoteScorer::score(const ScoreRequest& request) {
  const std::string body = request_body(request).dump();
  std::string last_error = "no attempt made";
  auto delay = config_.backoff;
  for (int attempt = 1; attempt <= config_.attempts; ++attempt) {
    const auto start = std::chrono::steady_clock::now();
    httplib::Result res{nullptr, httplib::Error::Unknown};
    {
      SlotGuard slot(*in_flight_);
      httplib::Client cli(scheme_host_port_);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
      const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
      cli.set_connection_timeout(secs.count(), usecs.count());
      cli.set_read_timeout(secs.count(), usecs.count());
      cli.set_write_timeout(secs.count(), usecs.count());
      httplib::Headers headers;
      if (!config_.token.empty()) headers.emplace("Authorization", "Bearer " + config_.token);
      res = cli.Post(path_, headers, body, "application/json");
    }
    const auto elapsed = std::chrono::steady_clock::now() - start;

    bool retryable = true;
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
    } else if (res->status >= 200 && res->status < 300) {
      ScoreResponse r = parse_body(res->body, request.labels);
      r.backend = id();
      r.latency_ms = std::chrono::duration<double, std::milli>(elapsed).count();
      return r;
    } else {
      last_error = "HTTP status " + std::to_string(res->status);
      retryable = res->status >= 500 || res->status == 429;
    }
    if (!retryable || attempt == config_.attempts) break;
    std::this_thread::sleep_for(delay);
    delay = std::min(delay * 2, config_.backoff_cap);
  }
  throw TransportError("remote scoring of " + describe_key(request.item_id, request.permutation) +
                       " failed: " + last_error);
}

}  // namespace infobudget
