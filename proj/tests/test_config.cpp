#include "frameflow/run_config.hpp"

#include <doctest.h>

using namespace frameflow;
using nlohmann::json;

TEST_CASE("defaults resolve to the stable preset") {
  const RunConfig c = RunConfig::resolve(json::object());
  CHECK(c.preset == "stable-default");
  CHECK(c.learner.mode == FlowMode::wframe);
  CHECK(c.sampler.steps_per_iter == 50);
  CHECK(c.learner.batch_obs == 9);
  CHECK(c.learner.batch_syn == 9);
  CHECK(c.bank.count == 8);
  CHECK(c.data.shape == Shape{16, 16});
  CHECK(c.learner.lambda == preset_values("stable-default").at("learner.lambda").get<double>());
}

TEST_CASE("document and overrides take precedence in order") {
  const json doc = {{"learner.lambda", 0.5}, {"seed", 4}};
  const RunConfig c = RunConfig::resolve(doc, {"learner.lambda=0.25", "mode=frame"});
  CHECK(c.learner.lambda == 0.25);
  CHECK(c.seed == 4);
  CHECK(c.learner.mode == FlowMode::frame);
}

TEST_CASE("preset selection from document or override") {
  for (const auto& name : preset_names()) {
    const RunConfig c = RunConfig::resolve(json{{"preset", name}});
    CHECK(c.preset == name);
    const json values = preset_values(name);
    const json echo = c.to_json();
    for (const auto& [key, value] : values.items()) CHECK(echo.at(key) == value);
  }
  CHECK(RunConfig::resolve(json{{"preset", "stress"}}, {"preset=clip-baseline"}).learner.clip.has_value());
  CHECK_THROWS_AS(RunConfig::resolve(json{{"preset", "fast"}}), ConfigError);
}

TEST_CASE("shipped presets") {
  const auto names = preset_names();
  for (const char* n : {"stable-default", "stress", "clip-baseline", "paper-literal"})
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
  const RunConfig literal = RunConfig::resolve(json{{"preset", "paper-literal"}});
  CHECK(literal.learner.beta == 60);
  CHECK(literal.sampler.noise_std == 0.01);
  CHECK(literal.bank.ref_variance == doctest::Approx(1e-4));
  CHECK(RunConfig::resolve(json{{"preset", "clip-baseline"}}).learner.clip.has_value());
}

TEST_CASE("unknown keys and bad values are configuration errors") {
  CHECK_THROWS_AS(RunConfig::resolve(json{{"learner.lamda", 0.1}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::resolve(json::object(), {"sampler.speed=2"}), ConfigError);
  CHECK_THROWS_AS(RunConfig::resolve(json{{"learner.lambda", "fast"}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::resolve(json::object(), {"sampler.delta=-1"}), ConfigError);
  CHECK_THROWS_AS(RunConfig::resolve(json::object(), {"learner.clip_lo=-1"}), ConfigError);
  CHECK_THROWS_AS(RunConfig::resolve(json::object(), {"mode=gan"}), ConfigError);
  CHECK_THROWS_AS(RunConfig::resolve(json::object(), {"data.source=pgm"}), ConfigError);
  CHECK_THROWS_AS(RunConfig::resolve(json::object(), {"data.shape=[0,4]"}), ConfigError);
  CHECK_THROWS_AS(RunConfig::resolve(json::object(), {"bank.ref_variance=0"}), ConfigError);
  CHECK_THROWS_AS(RunConfig::resolve(json::object(), {"no-equals-sign"}), ConfigError);
  CHECK_THROWS_AS(RunConfig::resolve(json::array()), ConfigError);
}

TEST_CASE("override parsing") {
  CHECK(parse_override("a=1.5").second == 1.5);
  CHECK(parse_override("a=true").second == true);
  CHECK(parse_override("a=wframe").second == "wframe");
  CHECK(parse_override("a=[1,2]").second == json::array({1, 2}));
  CHECK(parse_override("a=x=y").second == "x=y");
}

TEST_CASE("shape spellings") {
  CHECK(RunConfig::resolve(json{{"data.shape", "8x12"}}).data.shape == Shape{8, 12});
  const RunConfig flat = RunConfig::resolve(json{{"data.shape", 32}, {"data.source", "mixture"}});
  CHECK(flat.data.shape == Shape{32});
  CHECK(flat.bank.rank == 1);
  CHECK(flat.make_dataset().shape() == Shape{32});
}

TEST_CASE("resolved config echoes and re-resolves to itself") {
  const RunConfig c = RunConfig::resolve(json{{"preset", "stress"}}, {"learner.gamma=0.4", "seed=9"});
  const json echo = c.to_json();
  const RunConfig again = RunConfig::resolve(echo);
  CHECK(again.to_json() == echo);
}

TEST_CASE("config builds its dataset and bank") {
  const RunConfig c = RunConfig::resolve(json::object(), {"data.count=5", "bank.count=3"});
  CHECK(c.make_dataset().size() == 5);
  CHECK(c.make_bank().size() == 3);
}
