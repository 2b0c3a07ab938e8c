#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tdqmc/config.hpp"
#include "tdqmc/errors.hpp"

using namespace tdqmc;

namespace {

SimConfig from_text(const std::string& text) {
  std::istringstream in(text);
  return make_config(ConfigFile::parse(in));
}

}  // namespace

TEST_CASE("defaults") {
  const auto cfg = from_text("");
  CHECK(cfg.grid == Grid(-10.0, 10.0, 401));
  CHECK(cfg.species.size() == 1);
  CHECK(cfg.M == 500);
  CHECK(cfg.temp.is_zero());
  CHECK_FALSE(cfg.bath.enabled);
  CHECK(cfg.bath.L == 64);
  CHECK(cfg.dt_real == 0.02);
  CHECK(cfg.n_real_steps == 10000);
  CHECK(cfg.pulse.field(cfg.pulse.center) == cfg.pulse.amplitude);
  CHECK(cfg.pulse.field(cfg.pulse.end()) < 1e-8 * cfg.pulse.amplitude);
}

TEST_CASE("parsing, comments and overrides") {
  const auto cfg = from_text(
      "# comment line\n"
      "walkers = 64   # trailing comment\n"
      "  species.count=2\n"
      "bath.enabled = on\n"
      "bath.coupling_scale = 0.07\n"
      "bath.mode = classical_mean_field\n"
      "temperature = 0.1\n"
      "grid.n = 201\n");
  CHECK(cfg.M == 64);
  CHECK(cfg.species.size() == 2);
  CHECK(cfg.bath.enabled);
  CHECK(cfg.bath.scale == 0.07);
  CHECK(cfg.bath.mode == BathMode::classical_mean_field);
  CHECK(cfg.temp.beta == doctest::Approx(10.0));
  CHECK(cfg.grid.size() == 201);
  CHECK(from_text("beta = inf\n").temp.is_zero());
}

TEST_CASE("rejections") {
  CHECK_THROWS_AS(from_text("walker = 10\n"), ConfigError);
  CHECK_THROWS_AS(from_text("walkers = 10\nwalkers = 20\n"), ConfigError);
  CHECK_THROWS_AS(from_text("walkers = ten\n"), ConfigError);
  CHECK_THROWS_AS(from_text("walkers = -3\n"), ConfigError);
  CHECK_THROWS_AS(from_text("dt_real = 0.02x\n"), ConfigError);
  CHECK_THROWS_AS(from_text("dt_real\n"), ConfigError);
  CHECK_THROWS_AS(from_text("dt_real = \n"), ConfigError);
  CHECK_THROWS_AS(from_text("beta = 10\ntemperature = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(from_text("beta = 0\n"), ConfigError);
  CHECK_THROWS_AS(from_text("temperature = -1\n"), ConfigError);
  CHECK_THROWS_AS(from_text("bath.enabled = maybe\n"), ConfigError);
  CHECK_THROWS_AS(from_text("bath.mode = quantum\n"), ConfigError);
  CHECK_THROWS_AS(from_text("species.potential = morse\n"), ConfigError);
  CHECK_THROWS_AS(from_text("grid.n = 2\n"), ConfigError);
  CHECK_THROWS_AS(from_text("grid.x_min = 5\ngrid.x_max = -5\n"), ConfigError);
  CHECK_THROWS_AS(from_text("species.count = 0\n"), ConfigError);
  CHECK_THROWS_AS(from_text("bath.enabled = true\nbath.topology = diagonal\nbath.L = 64\nwalkers = 100\n"),
                  ConfigError);
  CHECK_THROWS_AS(from_text("calibrate.scale_lo = 0.2\ncalibrate.scale_hi = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::load("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("error messages name the key") {
  try {
    from_text("pair.strength = abc\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("pair.strength") != std::string::npos);
  }
}

TEST_CASE("echo round-trips through the parser") {
  auto cfg = from_text("walkers = 33\nbath.enabled = true\nbath.coupling_scale = 0.0712345678901\nbeta = 11.7\n");
  std::ostringstream text;
  for (const auto& [k, v] : echo_config(cfg)) text << k << " = " << v << "\n";
  const auto again = from_text(text.str());
  CHECK(echo_config(again) == echo_config(cfg));
  CHECK(again.bath.scale == cfg.bath.scale);
  CHECK(again.temp.beta == cfg.temp.beta);

  const auto keys = config_keys();
  CHECK(keys.size() == echo_config(cfg).size() + 1);
  CHECK(std::find(keys.begin(), keys.end(), "temperature") != keys.end());
}

TEST_CASE("derived objects") {
  const auto cfg = from_text("species.count = 2\nspecies.potential = harmonic\nharmonic.omega = 2\nbath.L = 8\n"
                             "bath.coupling_scale = 0.5\n");
  const auto v = cfg.static_potential(1);
  CHECK(std::abs(v[200]) < 1e-20);
  CHECK(v[0] == doctest::Approx(0.5 * 4.0 * 100.0));
  const auto spec = cfg.bath_spec();
  CHECK(spec.L == 8);
  CHECK(spec.coupling.species() == 2);
  CHECK(spec.coupling(7, 1) == doctest::Approx(0.5 * 0.6 / std::sqrt(8.0)));
}
