#include <doctest.h>

#include "mfl/config.hpp"

using namespace mfl;
using nlohmann::json;

namespace {

std::string error_path(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}

}  // namespace

TEST_CASE("empty gan section takes the published coefficients") {
  const RunConfig c = parse_config(json{{"gan", json::object()}});
  CHECK(c.gan.sigma0 == 0.1);
  CHECK(c.gan.sigma1 == 1.0);
  CHECK(c.gan.gamma == 1.0);
  CHECK(c.gan.lambda0 == 0.01);
  CHECK(c.gan.lambda1 == 0.1);
}

TEST_CASE("schema violations carry the key path") {
  CHECK(error_path(json{{"simulate", {{"dt", -0.01}}}}) == "simulate.dt");
  CHECK(error_path(json{{"simulate", {{"steps", -5}}}}) == "simulate.steps");
  CHECK(error_path(json{{"simulate", {{"gamma", "fast"}}}}) == "simulate.gamma");
  CHECK(error_path(json{{"gan", {{"mh", {{"chain", 10}}}}}}) == "gan.mh.chain");
  CHECK(error_path(json{{"surprise", 1}}) == "surprise");
  CHECK(error_path(json{{"simulate", {{"init", {{"law", "cauchy"}}}}}}) == "simulate.init.law");
}

TEST_CASE("missing file is its own error") {
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), MissingFileError);
}

TEST_CASE("command line beats file") {
  RunConfig c = parse_config(json{{"seed", 3}, {"out", "a"}});
  apply_overrides(c, 7, std::nullopt, std::size_t{5});
  CHECK(c.seed == 7);
  CHECK(c.out == "a");
  CHECK(c.record_every == std::size_t{5});
}

TEST_CASE("resolved config round-trips and hashes stably") {
  RunConfig c = parse_config(json{{"simulate", {{"variant", "mean_attraction"}, {"alpha", 0.5}}},
                                  {"gan", {{"generator", "quadrature"}}}});
  const json resolved = to_json(c);
  const json again = to_json(parse_config(resolved));
  CHECK(resolved == again);
  CHECK(config_hash(resolved) == config_hash(again));
  CHECK(config_hash(resolved).size() == 16);
  c.seed = 1;
  CHECK(config_hash(to_json(c)) != config_hash(resolved));
}
