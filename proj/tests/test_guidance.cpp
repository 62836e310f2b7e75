#include "fdmopt/error.hpp"
#include "fdmopt/fixtures.hpp"
#include "fdmopt/guidance.hpp"
#include "fdmopt/json_io.hpp"

#include <doctest.h>
#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

using namespace fdmopt;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  std::string s = os.str();
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

// A hand-built report: all vetoes clear, all penalties zero, default config.
EvaluationReport blank_report() {
  EvaluationReport r;
  r.config = default_config();
  for (VetoKind k : kVetoKinds) r.vetoes.push_back({k, false, 0.0, ""});
  r.time_s = 100.0;
  r.cost_g = 2.0;
  r.layer_count = 50;
  return r;
}

EvaluationReport staircase_report() {
  EvaluationReport r = blank_report();
  r.penalties.stair = 0.83;
  r.penalties.zbond = 0.47;
  r.group_scores = {0.83, 0.3, 0.0};
  r.excess = {0.53, 0.05, 0.0};
  r.quality = 0.3;
  return r;
}

EvaluationReport island_report() {
  EvaluationReport r = staircase_report();
  r.vetoes[0] = {VetoKind::unsupported_island, true, 0.95, "1 unanchored region(s)"};
  r.infeasible = true;
  r.quality = 2.0;
  return r;
}

EvaluationReport zbond_report() {
  EvaluationReport r = blank_report();
  r.penalties.zbond = 0.9;
  r.group_scores = {0.0, 0.6, 0.0};
  r.excess = {0.0, 0.35, 0.0};
  return r;
}

// Replays canned replies and records every request it saw.
class CannedProvider final : public GuidanceProvider {
 public:
  explicit CannedProvider(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string name() const override { return "canned"; }
  std::string reply(const GuidanceRequest& request) override {
    seen.push_back(request.user);
    return replies_.at(std::min(seen.size() - 1, replies_.size() - 1));
  }
  std::vector<std::string> seen;

 private:
  std::vector<std::string> replies_;
};

const std::string kValid =
    R"({"primary_issue": "staircasing", "actions": [{"id": "layer_height", "mode": "decrease", "magnitude": 0.05, "rationale": "thinner"}]})";
const std::string kThree =
    R"({"primary_issue": "staircasing", "actions": [{"id": "layer_height", "mode": "decrease", "rationale": "a"}, )"
    R"({"id": "brim_width", "mode": "increase", "rationale": "b"}, {"id": "perimeters", "mode": "increase", "rationale": "c"}]})";

}  // namespace

TEST_SUITE("guidance") {

TEST_CASE("standard catalog covers every tunable parameter plus composites") {
  const ActionCatalog& cat = ActionCatalog::standard();
  for (const ParamSpec& s : parameter_specs()) CHECK(cat.find(s.name) != nullptr);
  CHECK(cat.entries().size() == parameter_specs().size() + 3);
  REQUIRE(cat.find("layer_coverage"));
  CHECK(cat.find("layer_coverage")->parameters == std::vector<std::string>{"perimeters", "infill_density"});
  CHECK(cat.find("adhesion_aid")->disjunctive);
  CHECK(cat.find("nozzle_diameter") == nullptr);
  for (const CatalogEntry& e : cat.entries())
    for (const std::string& p : e.parameters) CHECK_NOTHROW(parameter_spec(p));
}

TEST_CASE("prompt is deterministic and carries diagnostics, catalog, budget and contract") {
  const EvaluationReport r = staircase_report();
  const std::string a = build_prompt(r, ActionCatalog::standard(), true, 2);
  CHECK(a == build_prompt(r, ActionCatalog::standard(), true, 2));
  CHECK(a.find("penalty staircasing = 0.8300") != std::string::npos);
  CHECK(a.find("layer_coverage") != std::string::npos);
  CHECK(a.find("between 1 and 2 actions") != std::string::npos);
  CHECK(a.find("primary_issue") != std::string::npos);
  CHECK(a.find("BUDGET") == std::string::npos);
  CHECK(a.find("Worked examples") != std::string::npos);
  CHECK(a.find("Example 3") != std::string::npos);
}

TEST_CASE("prompt without examples has no example block") {
  const std::string p = build_prompt(staircase_report(), ActionCatalog::standard(), false, 1);
  CHECK(p.find("Worked examples") == std::string::npos);
  CHECK(p.find("Example 1") == std::string::npos);
  CHECK(p.find("between 1 and 1 action.") != std::string::npos);
}

TEST_CASE("triggered vetoes are listed before penalties") {
  const std::string p = build_prompt(island_report(), ActionCatalog::standard(), false, 2);
  const auto veto = p.find("veto unsupported_island");
  const auto pen = p.find("penalty staircasing");
  REQUIRE(veto != std::string::npos);
  REQUIRE(pen != std::string::npos);
  CHECK(veto < pen);
  const auto ranked = rank_diagnostics(island_report());
  CHECK(ranked.front().name == "unsupported_island");
  CHECK(ranked[1].name == "staircasing");
  CHECK(ranked[2].name == "zbond");
}

TEST_CASE("reply parser accepts prose around the object and validates the schema") {
  const auto& cat = ActionCatalog::standard();
  const GuidanceResponse r = parse_guidance_reply("Sure.\n" + kValid + "\nDone.", cat, 2);
  CHECK(r.primary_issue == "staircasing");
  REQUIRE(r.actions.size() == 1);
  CHECK(r.actions[0].mode == ActionMode::decrease);
  CHECK(*r.actions[0].magnitude == 0.05);
  CHECK_FALSE(r.sentinel);

  CHECK_THROWS_AS(parse_guidance_reply(kThree, cat, 2), ValidationError);
  CHECK_NOTHROW(parse_guidance_reply(kThree, cat, 3));
  CHECK_THROWS_AS(parse_guidance_reply("no json here", cat, 2), ValidationError);
  CHECK_THROWS_AS(parse_guidance_reply(R"({"primary_issue": "warping", "actions": []})", cat, 2), ValidationError);
  CHECK_THROWS_AS(parse_guidance_reply(R"({"primary_issue": "zbond", "actions": []})", cat, 2), ValidationError);
  CHECK_THROWS_AS(parse_guidance_reply(
                      R"({"primary_issue": "zbond", "actions": [{"id": "nozzle", "mode": "increase"}]})", cat, 2),
                  ValidationError);
  CHECK_THROWS_AS(
      parse_guidance_reply(R"({"primary_issue": "zbond", "actions": [{"id": "infill_pattern", "mode": "switch", "target": "lattice"}]})",
                           cat, 2),
      ValidationError);
  CHECK_THROWS_AS(
      parse_guidance_reply(R"({"primary_issue": "zbond", "actions": [{"id": "layer_height", "mode": "decrease", "magnitude": -1}]})",
                           cat, 2),
      ValidationError);
  CHECK_THROWS_AS(
      parse_guidance_reply(R"({"primary_issue": "zbond", "actions": [{"id": "layer_height", "mode": "switch", "target": "on"}]})",
                           cat, 2),
      ValidationError);
}

TEST_CASE("guidance JSON round-trips through the parser") {
  const GuidanceResponse r = scripted_guidance(island_report(), 2);
  const GuidanceResponse back = parse_guidance_reply(guidance_to_json_text(r), ActionCatalog::standard(), 2);
  CHECK(back.primary_issue == r.primary_issue);
  CHECK(back.actions == r.actions);
}

TEST_CASE("over-budget reply triggers a retry with an error-correction suffix") {
  CannedProvider p({kThree, kValid});
  const GuidanceResponse r = request_guidance(&p, staircase_report(), {});
  CHECK_FALSE(r.sentinel);
  CHECK(r.attempts == 2);
  REQUIRE(p.seen.size() == 2);
  CHECK(p.seen[1].find("rejected") != std::string::npos);
  CHECK(p.seen[1].find("budget is 2") != std::string::npos);
}

TEST_CASE("three invalid replies degrade to the no-guidance sentinel") {
  CannedProvider p({"garbage"});
  const GuidanceResponse r = request_guidance(&p, staircase_report(), {});
  CHECK(r.sentinel);
  CHECK(r.actions.empty());
  CHECK(p.seen.size() == 3);
  CHECK(r.note.find("3 attempts") != std::string::npos);
}

TEST_CASE("provider none and budget zero give the sentinel") {
  CHECK(make_provider("none") == nullptr);
  CHECK(request_guidance(nullptr, staircase_report(), {}).sentinel);
  CannedProvider p({kValid});
  GuidanceSettings s;
  s.budget = 0;
  CHECK(request_guidance(&p, staircase_report(), s).sentinel);
  CHECK(p.seen.empty());
  CHECK_THROWS_AS(make_provider("oracle"), ValidationError);
}

TEST_CASE("scripted expert: staircasing report matches the golden reply") {
  const GuidanceResponse r = scripted_guidance(staircase_report(), 2);
  CHECK(r.primary_issue == "staircasing");
  CHECK(guidance_to_json_text(r) == slurp(FDMOPT_TEST_DATA "/golden_staircasing.json"));
}

TEST_CASE("scripted expert: unsupported island switches support on") {
  const GuidanceResponse r = scripted_guidance(island_report(), 2);
  REQUIRE_FALSE(r.actions.empty());
  CHECK(r.actions[0].id == "support_material");
  CHECK(r.actions[0].mode == ActionMode::switch_to);
  CHECK(*r.actions[0].target == "on");
  CHECK(guidance_to_json_text(r) == slurp(FDMOPT_TEST_DATA "/golden_island.json"));
}

TEST_CASE("scripted expert: z-bond replies at budgets 1 and 2 are prefix related") {
  const GuidanceResponse one = scripted_guidance(zbond_report(), 1);
  const GuidanceResponse two = scripted_guidance(zbond_report(), 2);
  CHECK(one.primary_issue == "zbond");
  REQUIRE(one.actions.size() == 1);
  REQUIRE(two.actions.size() == 2);
  CHECK(one.actions[0] == two.actions[0]);
  CHECK(two.actions[0].id == "max_volumetric_speed");
  CHECK(two.actions[1].id == "layer_height");
}

TEST_CASE("scripted expert is total and pure") {
  const EvaluationReport zero = blank_report();
  const GuidanceResponse a = scripted_guidance(zero, 2);
  const GuidanceResponse b = scripted_guidance(zero, 2);
  CHECK_FALSE(a.actions.empty());
  CHECK(a.actions.size() <= 2);
  CHECK(guidance_to_json_text(a) == guidance_to_json_text(b));
  // Every reply validates against the schema for real evaluations too.
  const Evaluator ev(fixtures::mushroom());
  for (const PrintConfig& c : sobol_sample(16, 2)) {
    const EvaluationReport rep = ev.evaluate(c, {});
    for (int budget : {1, 2}) {
      const GuidanceResponse r = scripted_guidance(rep, budget);
      CHECK_NOTHROW(parse_guidance_reply(r.raw, ActionCatalog::standard(), budget));
    }
  }
}

TEST_CASE("scripted expert skips remedies already in place") {
  EvaluationReport r = island_report();
  r.config.support_material = true;
  const GuidanceResponse g = scripted_guidance(r, 2);
  for (const auto& a : g.actions) CHECK(a.id != "support_material");
}

TEST_CASE("remote provider speaks the chat-completion protocol") {
  httplib::Server server;
  std::vector<std::string> auth;
  std::vector<Json> bodies;
  int calls = 0;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    auth.push_back(req.get_header_value("Authorization"));
    bodies.push_back(Json::parse(req.body));
    const std::string content = calls++ == 0 ? kThree : kValid;
    Json reply = {{"choices", Json::array({Json{{"message", Json{{"role", "assistant"}, {"content", content}}}}})}};
    res.set_content(reply.dump(), "application/json");
  });
  server.Post("/broken/chat/completions",
              [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("FDMOPT_TEST_KEY", "test-token", 1);
  RemoteProviderOptions opt;
  opt.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/";
  opt.model = "test-model";
  opt.api_key_env = "FDMOPT_TEST_KEY";
  opt.timeout_s = 5;
  auto provider = make_provider("remote", opt);
  const GuidanceResponse r = request_guidance(provider.get(), staircase_report(), {});
  CHECK(r.attempts == 2);
  CHECK(r.primary_issue == "staircasing");
  REQUIRE(bodies.size() == 2);
  CHECK(auth[0] == "Bearer test-token");
  CHECK(bodies[0]["model"] == "test-model");
  CHECK(bodies[0]["temperature"] == 0.0);
  CHECK(bodies[0]["messages"][0]["role"] == "system");
  CHECK(bodies[0]["messages"][1]["role"] == "user");

  opt.base_url = "http://127.0.0.1:" + std::to_string(port) + "/broken";
  RemoteProvider broken(opt);
  CHECK_THROWS_AS(request_guidance(&broken, staircase_report(), {}), TransportError);

  server.stop();
  worker.join();
  ::unsetenv("FDMOPT_TEST_KEY");
  CHECK_THROWS_AS(RemoteProvider(RemoteProviderOptions{"ftp://x", "m", 0.0, "K", 5}), ValidationError);
}

}  // TEST_SUITE
