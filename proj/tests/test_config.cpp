#include <gtest/gtest.h>

#include "mmq/config.hpp"

using namespace mmq;

namespace {

const char* kBase = R"({
  "model": {
    "classes": 2,
    "states": 2,
    "generator": [[-2, 2], [1, -1]],
    "arrival": {"base": [[1, 1.5], [1, 1.5]], "slope": [[0.6, 0.6], [1.2, 1.2]]},
    "service": {"base": [[2.5, 1.5], [2.5, 3]], "slope": [[3, 3], [6, 6]]},
    "holding_costs": [20, 25],
    "discount": 2
  },
  "regime": [{"nu": 1, "alpha": "auto"}, {"nu": "-1/3", "alpha": "2/3"}],
  "run": {
    "n": [4, 9],
    "policies": ["cmu_star", "dynamic_cmu", {"name": "static", "order": [2, 1]}],
    "replications": 40,
    "seed": 7,
    "threads": 0,
    "initial_state": 2
  }
})";

Json base_json() { return Json::parse(kBase); }

ExperimentConfig parse(const Json& j) { return parse_config_text(j.dump(2)); }

std::string error_of(const Json& j) {
  try {
    parse(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, ParsesExample) {
  const auto cfg = parse_config_text(kBase);
  EXPECT_EQ(cfg.classes, 2u);
  EXPECT_EQ(cfg.states, 2u);
  EXPECT_DOUBLE_EQ(cfg.discount, 2.0);
  ASSERT_EQ(cfg.regimes.size(), 2u);
  EXPECT_TRUE(cfg.regimes[0].alpha_auto);
  EXPECT_DOUBLE_EQ(cfg.regimes[0].alpha, 0.5);
  EXPECT_DOUBLE_EQ(cfg.regimes[1].nu, -1.0 / 3.0);
  EXPECT_DOUBLE_EQ(cfg.regimes[1].alpha, 2.0 / 3.0);
  EXPECT_FALSE(cfg.regimes[1].alpha_auto);
  ASSERT_EQ(cfg.run.policies.size(), 3u);
  EXPECT_EQ(cfg.run.policies[2].order, (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(cfg.run.threads, 0u);
  EXPECT_EQ(cfg.run.initial_state, std::optional<std::size_t>(1));
  EXPECT_EQ(cfg.run.n, (std::vector<std::uint64_t>{4, 9}));
  const auto model = cfg.model(cfg.regimes[0]);
  EXPECT_DOUBLE_EQ(model.arrival_rates(4)(1, 0), 1.0 + 1.2 / 2.0);
  EXPECT_EQ(cfg.policies(model, 4).back().name(), "static_2_1");
}

TEST(Config, DefaultsWithoutRunBlock) {
  auto j = base_json();
  j.erase("run");
  j["regime"] = {{"nu", 0}, {"alpha", "1/2"}};
  const auto cfg = parse(j);
  EXPECT_EQ(cfg.regimes.size(), 1u);
  EXPECT_EQ(cfg.run.replications, 2000u);
  EXPECT_EQ(cfg.run.n, (std::vector<std::uint64_t>{25, 100}));
  EXPECT_EQ(cfg.run.policies.size(), 2u);
}

TEST(Config, ErrorsCarryLineAndPointer) {
  const std::string text = "{\n  \"model\": {\n    \"classes\": 2,\n    \"states\": \"two\"\n  }\n}";
  try {
    parse_config_text(text);
    FAIL() << "expected a ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_NE(std::string(e.what()).find("/model/states"), std::string::npos) << e.what();
  }
  try {
    parse_config_text("{\n  \"model\": {,}\n}");
    FAIL() << "expected a syntax error";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("syntax error"), std::string::npos) << e.what();
  }
}

TEST(Config, RejectsBadFields) {
  auto j = base_json();
  j["model"].erase("discount");
  EXPECT_NE(error_of(j).find("missing field 'discount'"), std::string::npos);

  j = base_json();
  j["regime"][1]["nu"] = "1/0";
  EXPECT_NE(error_of(j).find("/regime/1/nu"), std::string::npos);

  j = base_json();
  j["regime"][0]["alpha"] = 1.5;
  EXPECT_NE(error_of(j).find("/regime/0/alpha"), std::string::npos);

  j = base_json();
  j["model"]["holding_costs"] = {20, 0};
  EXPECT_NE(error_of(j).find("/model/holding_costs/1"), std::string::npos);

  j = base_json();
  j["model"]["arrival"]["base"] = {{1, 1.5}};
  EXPECT_NE(error_of(j).find("expected 2 rows"), std::string::npos);

  j = base_json();
  j["run"]["policies"][2]["order"] = {1, 1};
  EXPECT_NE(error_of(j).find("permutation"), std::string::npos);

  j = base_json();
  j["run"]["policies"][0] = "fifo";
  EXPECT_NE(error_of(j).find("unknown policy"), std::string::npos);

  j = base_json();
  j["run"]["replications"] = 1;
  EXPECT_NE(error_of(j).find("/run/replications"), std::string::npos);

  j = base_json();
  j["run"]["engine"] = "warp";
  EXPECT_NE(error_of(j).find("/run/engine"), std::string::npos);

  j = base_json();
  j["run"]["initial_state"] = 3;
  EXPECT_NE(error_of(j).find("/run/initial_state"), std::string::npos);
}

TEST(Config, GeneratorErrorsAreClassified) {
  auto j = base_json();
  j["model"]["generator"] = {{1, -1}, {1, -1}};
  try {
    parse(j);
    FAIL();
  } catch (const ConfigInvariantError&) {
    FAIL() << "a positive diagonal is a malformed field";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("diagonal"), std::string::npos);
  }

  j = base_json();
  j["model"]["generator"] = {{0, 0}, {1, -1}};
  EXPECT_THROW(parse(j), ConfigInvariantError);

  j = base_json();
  j["model"]["generator"] = {{-2, 1}, {1, -1}};
  EXPECT_NE(error_of(j).find("does not sum to 0"), std::string::npos);
}

TEST(Config, TabulatedRatesNeedEveryN) {
  auto j = base_json();
  j["model"]["arrival"] = {{"table", {{"4", {{1, 1}, {1, 1}}}, {"9", {{1.2, 1}, {1, 1.1}}}}}};
  const auto cfg = parse(j);
  EXPECT_FALSE(cfg.arrival.affine);
  EXPECT_DOUBLE_EQ(cfg.model(cfg.regimes[0]).arrival_rates(9)(0, 0), 1.2);

  j["run"]["n"] = {4, 16};
  EXPECT_NE(error_of(j).find("no entry for n = 16"), std::string::npos);

  j.erase("run");  // default n = 25, 100
  EXPECT_NE(error_of(j).find("no entry for n = 25"), std::string::npos);

  j = base_json();
  j["model"]["arrival"] = {{"table", {{"zero", {{1, 1}, {1, 1}}}}}};
  EXPECT_NE(error_of(j).find("positive integers"), std::string::npos);
}

TEST(Config, ResolvedEchoRoundTrips) {
  const auto cfg = parse_config_text(kBase);
  const auto echo = to_json(cfg);
  EXPECT_EQ(echo["regime"][0]["alpha"], 0.5);
  EXPECT_FALSE(echo["run"].contains("threads"));
  const auto again = parse(echo);
  EXPECT_EQ(to_json(again), echo);
  EXPECT_EQ(again.run.policies[2].order, cfg.run.policies[2].order);
  EXPECT_EQ(again.run.initial_state, cfg.run.initial_state);
  EXPECT_EQ(again.generator, cfg.generator);
}
