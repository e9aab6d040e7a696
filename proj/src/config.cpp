#include "mfl/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mfl {

using nlohmann::json;

namespace {

// Walks one JSON object, remembering which keys were read so that leftovers
// can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(display(), "expected an object");
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  void number(const std::string& key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) throw ConfigError(key_path(key), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError(key_path(key), "must be finite");
    }
  }

  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (const json* v = take(key)) {
      if (v->is_number_unsigned()) {
        out = static_cast<Int>(v->get<std::uint64_t>());
      } else if (v->is_number_integer()) {
        const std::int64_t i = v->get<std::int64_t>();
        if (i < 0) throw ConfigError(key_path(key), "must be >= 0");
        out = static_cast<Int>(i);
      } else {
        throw ConfigError(key_path(key), "expected a non-negative integer");
      }
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) throw ConfigError(key_path(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) throw ConfigError(key_path(key), "expected an array of numbers");
      out.clear();
      for (std::size_t k = 0; k < v->size(); ++k) {
        if (!(*v)[k].is_number()) {
          throw ConfigError(key_path(key) + "[" + std::to_string(k) + "]", "expected a number");
        }
        out.push_back((*v)[k].get<double>());
      }
    }
  }

  const json* object(const std::string& key) {
    const json* v = take(key);
    if (v && !v->is_object()) throw ConfigError(key_path(key), "expected an object");
    return v;
  }

  const json* array(const std::string& key) {
    const json* v = take(key);
    if (v && !v->is_array()) throw ConfigError(key_path(key), "expected an array");
    return v;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(key_path(it.key()), "unknown key");
    }
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const json* take(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& path, const std::string& message) {
  if (!ok) throw ConfigError(path, message);
}

InitSpec parse_init(const json& j, const std::string& path, const InitSpec& fallback) {
  ObjectReader r(j, path);
  std::string law;
  r.string("law", law);
  InitSpec spec = fallback;
  if (law.empty()) throw ConfigError(r.key_path("law"), "required: point | gaussian | uniform");
  if (law == "point") {
    PointMass p;
    r.numbers("position", p.position);
    r.numbers("velocity", p.velocity);
    spec.law = p;
  } else if (law == "gaussian") {
    IsotropicGaussian g;
    r.numbers("position_mean", g.position_mean);
    r.number("position_variance", g.position_variance);
    r.numbers("velocity_mean", g.velocity_mean);
    r.number("velocity_variance", g.velocity_variance);
    require(g.position_variance >= 0.0, r.key_path("position_variance"), "must be >= 0");
    require(g.velocity_variance >= 0.0, r.key_path("velocity_variance"), "must be >= 0");
    spec.law = g;
  } else if (law == "uniform") {
    UniformBox u;
    r.number("position_low", u.position_low);
    r.number("position_high", u.position_high);
    r.number("velocity_low", u.velocity_low);
    r.number("velocity_high", u.velocity_high);
    require(u.position_low <= u.position_high, r.key_path("position_high"),
            "must be >= position_low");
    require(u.velocity_low <= u.velocity_high, r.key_path("velocity_high"),
            "must be >= velocity_low");
    spec.law = u;
  } else {
    throw ConfigError(r.key_path("law"), "unknown law '" + law + "'");
  }
  r.finish();
  return spec;
}

json init_to_json(const InitSpec& spec) {
  return std::visit(
      [](const auto& law) -> json {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return {{"law", "point"}, {"position", law.position}, {"velocity", law.velocity}};
        } else if constexpr (std::is_same_v<T, IsotropicGaussian>) {
          return {{"law", "gaussian"},
                  {"position_mean", law.position_mean},
                  {"position_variance", law.position_variance},
                  {"velocity_mean", law.velocity_mean},
                  {"velocity_variance", law.velocity_variance}};
        } else {
          return {{"law", "uniform"},
                  {"position_low", law.position_low},
                  {"position_high", law.position_high},
                  {"velocity_low", law.velocity_low},
                  {"velocity_high", law.velocity_high}};
        }
      },
      spec.law);
}

void check_init_dim(const InitSpec& spec, std::size_t dim, const std::string& path) {
  try {
    spec.validate(dim);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

void parse_simulate(const json& j, SimulateSection& s) {
  ObjectReader r(j, "simulate");
  r.string("variant", s.variant);
  r.number("lambda", s.lambda);
  r.number("alpha", s.alpha);
  r.number("gamma", s.dynamics.gamma);
  r.number("sigma", s.dynamics.sigma);
  r.number("speed", s.dynamics.speed);
  r.number("dt", s.dynamics.dt);
  r.integer("steps", s.dynamics.steps);
  r.integer("count", s.count);
  r.integer("dim", s.dim);
  r.integer("entropy_k", s.entropy_k);
  r.integer("bootstrap", s.bootstrap);
  if (const json* init = r.object("init")) s.init = parse_init(*init, "simulate.init", s.init);
  r.finish();

  require(s.variant == "quadratic" || s.variant == "mean_attraction", "simulate.variant",
          "expected quadratic | mean_attraction");
  require(s.lambda > 0.0, "simulate.lambda", "must be > 0");
  require(s.variant == "mean_attraction" || s.alpha == 0.0, "simulate.alpha",
          "only used by the mean_attraction variant");
  require(s.dynamics.gamma > 0.0, "simulate.gamma", "must be > 0");
  require(s.dynamics.sigma > 0.0, "simulate.sigma", "must be > 0");
  require(s.dynamics.speed > 0.0, "simulate.speed", "must be > 0");
  require(s.dynamics.dt > 0.0, "simulate.dt", "must be > 0");
  require(s.dynamics.gamma * s.dynamics.dt < 2.0, "simulate.dt", "gamma * dt must be < 2");
  require(s.count >= 2, "simulate.count", "must be >= 2");
  require(s.dim >= 1, "simulate.dim", "must be >= 1");
  require(s.entropy_k >= 1 && s.entropy_k < s.count, "simulate.entropy_k",
          "must lie in [1, count)");
  check_init_dim(s.init, s.dim, "simulate.init");
}

void parse_rate_inputs(ObjectReader& r, RateInputs& in, const std::string& path) {
  r.number("gamma", in.gamma);
  r.number("lambda", in.lambda);
  r.number("sigma", in.sigma);
  r.number("lipschitz_x", in.lipschitz_x);
  r.number("M", in.M);
  r.number("safety", in.safety);
  require(in.gamma > 0.0, path + ".gamma", "must be > 0");
  require(in.lambda > 0.0, path + ".lambda", "must be > 0");
  require(in.sigma > 0.0, path + ".sigma", "must be > 0");
  require(in.lipschitz_x >= 0.0, path + ".lipschitz_x", "must be >= 0");
  require(in.M > 0.0, path + ".M", "must be > 0");
  require(in.safety > 0.0 && in.safety < 1.0, path + ".safety", "must lie in (0, 1)");
}

void parse_couple(const json& j, CoupleSection& s) {
  ContractionConfig& c = s.experiment;
  ObjectReader r(j, "couple");
  parse_rate_inputs(r, c.rates, "couple");
  r.number("alpha", c.rates.iota);
  r.integer("pairs", c.pairs);
  r.integer("dim", c.dim);
  r.number("dt", c.dt);
  r.number("horizon", c.horizon);
  r.integer("record_every", c.record_every);
  r.number("xi", c.xi);
  r.number("offset", c.offset_b);
  r.number("burn_in", c.burn_in);
  std::string mode = "reflection";
  r.string("mode", mode);
  if (const json* a = r.object("init_a")) c.init_a = parse_init(*a, "couple.init_a", c.init_a);
  if (const json* b = r.object("init_b")) c.init_b = parse_init(*b, "couple.init_b", c.init_b);
  r.finish();

  if (mode == "reflection") {
    c.mode = CouplingMode::kReflection;
  } else if (mode == "synchronous") {
    c.mode = CouplingMode::kSynchronous;
  } else {
    throw ConfigError("couple.mode", "expected reflection | synchronous");
  }
  require(c.rates.iota >= 0.0, "couple.alpha", "must be >= 0");
  require(c.pairs >= 1, "couple.pairs", "must be >= 1");
  require(c.dim >= 1, "couple.dim", "must be >= 1");
  require(c.dt > 0.0, "couple.dt", "must be > 0");
  require(c.horizon > c.dt, "couple.horizon", "must exceed dt");
  require(c.record_every >= 1, "couple.record_every", "must be >= 1");
  require(c.xi >= 0.0, "couple.xi", "must be >= 0 (0 selects 1e-3 M)");
  require(c.burn_in >= 0.0, "couple.burn_in", "must be >= 0");
  check_init_dim(c.init_a, c.dim, "couple.init_a");
  check_init_dim(c.init_b, c.dim, "couple.init_b");
}

void parse_rates(const json& j, RatesSection& s) {
  ObjectReader r(j, "rates");
  parse_rate_inputs(r, s.inputs, "rates");
  r.number("iota", s.inputs.iota);
  r.integer("dim", s.inputs.dim);
  if (const json* sweep = r.object("sweep")) {
    ObjectReader w(*sweep, "rates.sweep");
    w.number("iota_max", s.sweep_max);
    w.integer("points", s.sweep_points);
    w.finish();
  }
  r.finish();
  require(s.inputs.iota >= 0.0, "rates.iota", "must be >= 0");
  require(s.sweep_points >= 2, "rates.sweep.points", "must be >= 2");
}

void parse_gan(const json& j, GanConfig& g) {
  ObjectReader r(j, "gan");
  r.integer("target_count", g.target_count);
  if (const json* mix = r.array("mixture")) {
    g.mixture.clear();
    for (std::size_t k = 0; k < mix->size(); ++k) {
      const std::string path = "gan.mixture[" + std::to_string(k) + "]";
      ObjectReader m((*mix)[k], path);
      MixtureComponent c;
      m.number("weight", c.weight);
      m.number("mean", c.mean);
      m.number("stddev", c.stddev);
      m.finish();
      require(c.weight > 0.0, path + ".weight", "must be > 0");
      require(c.stddev >= 0.0, path + ".stddev", "must be >= 0");
      g.mixture.push_back(c);
    }
  }
  r.number("clip", g.clip);
  r.number("sigma0", g.sigma0);
  r.number("sigma1", g.sigma1);
  r.number("gamma", g.gamma);
  r.number("lambda0", g.lambda0);
  r.number("lambda1", g.lambda1);
  r.number("eta", g.speed);
  r.integer("particles", g.particles);
  r.number("c_max", g.c_max);
  r.number("init_stddev", g.init_stddev);
  std::string generator = "metropolis";
  r.string("generator", generator);
  r.integer("quadrature_points", g.quadrature_points);
  if (const json* mh = r.object("mh")) {
    ObjectReader m(*mh, "gan.mh");
    m.integer("chains", g.mh.chains);
    m.number("initial_scale", g.mh.initial_scale);
    m.number("target_acceptance", g.mh.target_acceptance);
    m.integer("burn_in", g.mh.burn_in);
    m.integer("adapt_sweeps", g.mh.adapt_sweeps);
    m.integer("sweeps", g.mh.sweeps);
    m.finish();
  }
  r.number("dt", g.dt);
  r.integer("max_steps", g.max_steps);
  r.integer("record_every", g.record_every);
  r.number("stop_fraction", g.stop_fraction);
  r.integer("stop_window", g.stop_window);
  r.number("guard", g.guard);
  r.finish();

  if (generator == "metropolis") {
    g.generator = GeneratorMode::kMetropolis;
  } else if (generator == "quadrature") {
    g.generator = GeneratorMode::kQuadrature;
  } else {
    throw ConfigError("gan.generator", "expected metropolis | quadrature");
  }
  require(g.target_count >= 1, "gan.target_count", "must be >= 1");
  require(!g.mixture.empty(), "gan.mixture", "needs at least one component");
  require(g.clip > 0.0, "gan.clip", "must be > 0");
  require(g.sigma0 > 0.0, "gan.sigma0", "must be > 0");
  require(g.sigma1 > 0.0, "gan.sigma1", "must be > 0");
  require(g.gamma > 0.0, "gan.gamma", "must be > 0");
  require(g.lambda0 >= 0.0, "gan.lambda0", "must be >= 0");
  require(g.lambda1 >= 0.0, "gan.lambda1", "must be >= 0");
  require(g.speed > 0.0, "gan.eta", "must be > 0");
  require(g.particles >= 1, "gan.particles", "must be >= 1");
  require(g.c_max > 0.0, "gan.c_max", "must be > 0");
  require(g.dt > 0.0, "gan.dt", "must be > 0");
  require(g.gamma * g.dt < 2.0, "gan.dt", "gamma * dt must be < 2");
  require(g.record_every >= 1, "gan.record_every", "must be >= 1");
  require(g.mh.chains >= 1, "gan.mh.chains", "must be >= 1");
  require(g.mh.initial_scale > 0.0, "gan.mh.initial_scale", "must be > 0");
  require(g.mh.target_acceptance > 0.0 && g.mh.target_acceptance < 1.0,
          "gan.mh.target_acceptance", "must lie in (0, 1)");
  require(g.mh.burn_in >= 1, "gan.mh.burn_in", "must be >= 1");
  require(g.mh.sweeps >= 1, "gan.mh.sweeps", "must be >= 1");
  require(g.stop_fraction >= 0.0, "gan.stop_fraction", "must be >= 0");
  require(g.guard > 0.0, "gan.guard", "must be > 0");
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("gan", e.what());
  }
}

}  // namespace

Potential SimulateSection::potential() const {
  if (variant == "mean_attraction") return MeanAttraction{lambda, alpha};
  return QuadraticConfinement{lambda};
}

RunConfig parse_config(const json& j) {
  RunConfig c;
  ObjectReader r(j, "");
  r.integer("seed", c.seed);
  r.string("out", c.out);
  if (r.has("record_every")) {
    std::size_t k = 0;
    r.integer("record_every", k);
    require(k >= 1, "record_every", "must be >= 1");
    c.record_every = k;
  }
  if (const json* s = r.object("simulate")) parse_simulate(*s, c.simulate);
  if (const json* s = r.object("couple")) parse_couple(*s, c.couple);
  if (const json* s = r.object("rates")) parse_rates(*s, c.rates);
  if (const json* s = r.object("gan")) parse_gan(*s, c.gan);
  r.finish();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

void apply_overrides(RunConfig& config, std::optional<std::uint64_t> seed,
                     std::optional<std::string> out, std::optional<std::size_t> record_every) {
  if (seed) config.seed = *seed;
  if (out) config.out = *out;
  if (record_every) {
    if (*record_every < 1) throw ConfigError("record_every", "must be >= 1");
    config.record_every = *record_every;
  }
}

json to_json(const RunConfig& c) {
  const SimulateSection& s = c.simulate;
  const ContractionConfig& k = c.couple.experiment;
  const GanConfig& g = c.gan;
  json mixture = json::array();
  for (const MixtureComponent& m : g.mixture) {
    mixture.push_back({{"weight", m.weight}, {"mean", m.mean}, {"stddev", m.stddev}});
  }
  json out = {
      {"seed", c.seed},
      {"out", c.out},
      {"simulate",
       {{"variant", s.variant},
        {"lambda", s.lambda},
        {"alpha", s.alpha},
        {"gamma", s.dynamics.gamma},
        {"sigma", s.dynamics.sigma},
        {"speed", s.dynamics.speed},
        {"dt", s.dynamics.dt},
        {"steps", s.dynamics.steps},
        {"count", s.count},
        {"dim", s.dim},
        {"entropy_k", s.entropy_k},
        {"bootstrap", s.bootstrap},
        {"init", init_to_json(s.init)}}},
      {"couple",
       {{"gamma", k.rates.gamma},
        {"lambda", k.rates.lambda},
        {"sigma", k.rates.sigma},
        {"lipschitz_x", k.rates.lipschitz_x},
        {"M", k.rates.M},
        {"safety", k.rates.safety},
        {"alpha", k.rates.iota},
        {"pairs", k.pairs},
        {"dim", k.dim},
        {"dt", k.dt},
        {"horizon", k.horizon},
        {"record_every", k.record_every},
        {"xi", k.xi},
        {"offset", k.offset_b},
        {"burn_in", k.burn_in},
        {"mode", k.mode == CouplingMode::kSynchronous ? "synchronous" : "reflection"},
        {"init_a", init_to_json(k.init_a)},
        {"init_b", init_to_json(k.init_b)}}},
      {"rates",
       {{"gamma", c.rates.inputs.gamma},
        {"lambda", c.rates.inputs.lambda},
        {"sigma", c.rates.inputs.sigma},
        {"lipschitz_x", c.rates.inputs.lipschitz_x},
        {"M", c.rates.inputs.M},
        {"safety", c.rates.inputs.safety},
        {"iota", c.rates.inputs.iota},
        {"dim", c.rates.inputs.dim},
        {"sweep", {{"iota_max", c.rates.sweep_max}, {"points", c.rates.sweep_points}}}}},
      {"gan",
       {{"target_count", g.target_count},
        {"mixture", mixture},
        {"clip", g.clip},
        {"sigma0", g.sigma0},
        {"sigma1", g.sigma1},
        {"gamma", g.gamma},
        {"lambda0", g.lambda0},
        {"lambda1", g.lambda1},
        {"eta", g.speed},
        {"particles", g.particles},
        {"c_max", g.c_max},
        {"init_stddev", g.init_stddev},
        {"generator", g.generator == GeneratorMode::kQuadrature ? "quadrature" : "metropolis"},
        {"quadrature_points", g.quadrature_points},
        {"mh",
         {{"chains", g.mh.chains},
          {"initial_scale", g.mh.initial_scale},
          {"target_acceptance", g.mh.target_acceptance},
          {"burn_in", g.mh.burn_in},
          {"adapt_sweeps", g.mh.adapt_sweeps},
          {"sweeps", g.mh.sweeps}}},
        {"dt", g.dt},
        {"max_steps", g.max_steps},
        {"record_every", g.record_every},
        {"stop_fraction", g.stop_fraction},
        {"stop_window", g.stop_window},
        {"guard", g.guard}}},
  };
  if (c.record_every) out["record_every"] = *c.record_every;
  return out;
}

std::string config_hash(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mfl
