#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "infobudget/backend.hpp"
#include "infobudget/error.hpp"
#include "infobudget/rng.hpp"
#include "support.hpp"

using namespace infobudget;

namespace {

ScoreRequest request_for(const std::string& id, const Permutation& p, std::int64_t k = 0) {
  ScoreRequest r;
  r.item_id = id;
  r.question = "q?";
  for (std::size_t s = 0; s < p.size(); ++s) r.chunks.push_back("c" + std::to_string(p[s]));
  r.labels = {"1", "0"};
  r.permutation = p;
  r.perm_index = k;
  return r;
}

// Local HTTP endpoint on an ephemeral port, torn down on scope exit.
struct MockServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  template <typename Handler>
  explicit MockServer(Handler h) {
    server.Post("/score", h);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~MockServer() {
    server.stop();
    thread.join();
  }
  RemoteConfig config() const {
    RemoteConfig c;
    c.url = "http://127.0.0.1:" + std::to_string(port) + "/score";
    c.timeout = std::chrono::milliseconds(2000);
    c.backoff = std::chrono::milliseconds(1);
    c.backoff_cap = std::chrono::milliseconds(4);
    return c;
  }
};

}  // namespace

TEST_CASE("synthetic scorer follows its model") {
  SyntheticBackendConfig cfg;
  FirstOrderModel m;
  m.weights = {1.0, 0.0};
  m.potential = {1.0, 1.0, -1};
  cfg.models["pair"] = m;
  SyntheticScorer s(cfg);
  const auto r = s.score(request_for("pair", Permutation({1, 0})));
  CHECK(r.labels == std::vector<std::string>{"1", "0"});
  CHECK(std::exp(r.logprobs[0]) == doctest::Approx(model_predict(m, Permutation({1, 0})).q.value()));
  CHECK(std::exp(r.logprobs[0]) + std::exp(r.logprobs[1]) == doctest::Approx(1.0));
  CHECK(s.model_for("other", 6).n() == 6);
  CHECK(s.model_for("other", 6).weights == s.model_for("other", 6).weights);

  auto bad = request_for("pair", Permutation({1, 0}));
  bad.labels = {"a", "b", "c"};
  CHECK_THROWS(s.score(bad));
}

TEST_CASE("predictive distributions and smoothing") {
  ScoreResponse r;
  r.labels = {"0", "1"};
  r.logprobs = {std::log(0.25), std::log(0.75)};
  const auto d = predictive(r, {"1", "0"});
  CHECK(d.masses()[0] == doctest::Approx(0.75));
  const auto once = smooth_response(r, 1e-3);
  CHECK(once.smoothed);
  CHECK(smooth_response(once, 1e-3) == once);
  CHECK(predictive(once, {"1", "0"}, 1e-3).masses()[0] == doctest::Approx(predictive(r, {"1", "0"}, 1e-3).masses()[0]));

  r.logprobs = {std::log(0.25), std::nan("")};
  CHECK_THROWS_AS(predictive(r, {"1", "0"}), NonFiniteResponseError);
  r.logprobs = {std::log(0.25), std::log(0.75)};
  CHECK_THROWS_AS(predictive(r, {"1", "x"}), MalformedResponseError);
  r.logprobs = {-HUGE_VAL, 0.0};
  CHECK_THROWS_AS(predictive(r, {"1", "0"}), NonFiniteResponseError);
  r.logprobs = {-800.0, 0.0};
  CHECK(predictive(r, {"1", "0"}).masses()[1] > 0.0);
}

TEST_CASE("record and replay") {
  SyntheticBackendConfig cfg;
  cfg.seed = 11;
  SyntheticScorer inner(cfg);
  RecordingScorer rec(inner);
  std::vector<ScoreRequest> reqs;
  for (std::uint64_t k = 0; k < 6; ++k) reqs.push_back(request_for(k % 2 ? "b" : "a", uniform_permutation(5, k), static_cast<std::int64_t>(k)));
  std::vector<ScoreResponse> direct;
  for (const auto& q : reqs) direct.push_back(rec.score(q));
  rec.score(reqs[0]);

  const auto file = rec.to_file({{"config_hash", "abc"}});
  CHECK(file.records.size() == 6);
  CHECK(file.header.at("backend") == "synthetic");
  const auto text = score_file_text(file);
  const auto parsed = parse_score_file(text);
  CHECK(score_file_text(parsed) == text);

  ReplayScorer replay(parsed);
  CHECK(replay.size() == 6);
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    const auto r = replay.score(reqs[i]);
    REQUIRE(r.logprobs == direct[i].logprobs);
    REQUIRE(r.labels == direct[i].labels);
  }
  CHECK_THROWS_AS(replay.score(request_for("zzz", Permutation::identity(5))), MissingRecordError);

  // Canonical order does not depend on insertion order.
  auto shuffled = file.records;
  std::reverse(shuffled.begin(), shuffled.end());
  canonicalize(shuffled);
  ScoreFile again{file.header, shuffled};
  CHECK(score_file_text(again) == text);

  const auto dir = testing_support::scratch_dir("backend");
  write_score_file((dir / "s.jsonl").string(), file);
  CHECK(score_file_text(read_score_file((dir / "s.jsonl").string())) == text);

  ScoreFile empty;
  empty.header = {{"backend", "synthetic"}};
  const auto et = score_file_text(empty);
  CHECK(parse_score_file(et).records.empty());
  CHECK_THROWS_AS(parse_score_file(""), DataError);
  CHECK_THROWS_AS(parse_score_file("{\"kind\":\"score\"}\n"), DataError);
  CHECK_THROWS(read_score_file((dir / "missing.jsonl").string()));
}

TEST_CASE("remote scorer against a local endpoint") {
  std::atomic<int> calls{0};
  std::string seen_auth;
  std::mutex auth_mutex;
  MockServer ok([&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    {
      std::lock_guard<std::mutex> lock(auth_mutex);
      seen_auth = req.get_header_value("Authorization");
    }
    const auto body = nlohmann::json::parse(req.body);
    REQUIRE(body.at("permutation").size() == 3);
    res.set_content(R"({"logprobs":{"1":)" + std::to_string(std::log(0.3)) + R"(,"0":)" + std::to_string(std::log(0.1)) + "}}",
                    "application/json");
  });
  auto cfg = ok.config();
  cfg.token = "sekret";
  RemoteScorer remote(cfg);
  const auto r = remote.score(request_for("x", Permutation::identity(3)));
  const auto d = predictive(r, {"1", "0"});
  CHECK(label_renormalize(d.mass_of("1"), d.mass_of("0")).value() == doctest::Approx(0.75).epsilon(1e-5));
  CHECK(seen_auth == "Bearer sekret");
  CHECK(calls == 1);
}

TEST_CASE("remote scorer retries server errors and rejects bad bodies") {
  std::atomic<int> calls{0};
  MockServer flaky([&](const httplib::Request&, httplib::Response& res) {
    if (++calls < 3) {
      res.status = 500;
      return;
    }
    res.set_content(R"({"logprobs":{"1":-0.5,"0":-1.0}})", "application/json");
  });
  auto cfg = flaky.config();
  cfg.attempts = 3;
  RemoteScorer remote(cfg);
  CHECK(remote.score(request_for("x", Permutation::identity(2))).logprobs.size() == 2);
  CHECK(calls == 3);

  calls = 0;
  cfg.attempts = 2;
  RemoteScorer limited(cfg);
  CHECK_THROWS_AS(limited.score(request_for("x", Permutation::identity(2))), TransportError);

  std::atomic<int> denied_calls{0};
  MockServer denied([&](const httplib::Request&, httplib::Response& res) {
    ++denied_calls;
    res.status = 403;
  });
  RemoteScorer forbidden(denied.config());
  CHECK_THROWS_AS(forbidden.score(request_for("x", Permutation::identity(2))), TransportError);
  CHECK(denied_calls == 1);

  const std::vector<std::string> labels{"1", "0"};
  CHECK_THROWS_AS(RemoteScorer::parse_body("not json", labels), MalformedResponseError);
  CHECK_THROWS_AS(RemoteScorer::parse_body(R"({"logprobs":{"1":-0.1}})", labels), MalformedResponseError);
  CHECK_THROWS_AS(RemoteScorer::parse_body(R"({"logprobs":{"1":null,"0":-1}})", labels), NonFiniteResponseError);
  CHECK_THROWS_AS(RemoteScorer::parse_body(R"({"logprobs":{"1":"x","0":-1}})", labels), MalformedResponseError);
  CHECK_THROWS(RemoteScorer(RemoteConfig{"https://example.com/x"}));

  RemoteConfig unreachable;
  unreachable.url = "http://127.0.0.1:1/score";
  unreachable.attempts = 2;
  unreachable.backoff = std::chrono::milliseconds(1);
  unreachable.timeout = std::chrono::milliseconds(200);
  RemoteScorer down(unreachable);
  CHECK_THROWS_AS(down.score(request_for("x", Permutation::identity(2))), TransportError);
}
