#include <doctest.h>

#include <fstream>

#include "acpkan/config.hpp"
#include "support.hpp"

using namespace acpkan;

TEST_CASE("key = value parsing") {
  const auto kv = parse_key_values("# comment\nproblem = wave  # trailing\n\n  epochs=12\nlr = 1e-2\nepochs = 13\n");
  CHECK(kv.size() == 3);
  CHECK(kv.at("problem") == "wave");
  CHECK(kv.at("epochs") == "13");
  CHECK(kv.at("lr") == "1e-2");
  CHECK_THROWS_AS(parse_key_values("no equals sign"), std::invalid_argument);
  CHECK_THROWS_AS(parse_key_values(" = 3"), std::invalid_argument);
}

TEST_CASE("every documented key lands in its field") {
  TrainConfig c;
  apply_config(c, parse_key_values(R"(
problem = cdr
model = mlp
epochs = 7
seed = 9
lr = 0.01
weight_decay = 0
rga = off
eta = 0.5
beta_w = 0.25
eps = 1e-6
lambda_r = 2
lambda_d = 3
use_log = false
gra_stride = 4
metrics_stride = 5
d_model = 8
d_hidden = 12
layers = 3
degree = 4
mlp_sizes = 2, 20, 1
grid = 15
boundary = 11
eval_grid = 31
wave_coefficient = 3
parallel = no
shard_size = 8
)"));
  CHECK(c.problem == "cdr");
  CHECK(c.model == "mlp");
  CHECK(c.epochs == 7);
  CHECK(c.seed == 9);
  CHECK(c.adam.lr == 0.01);
  CHECK(c.adam.weight_decay == 0.0);
  CHECK(!c.rga.enabled);
  CHECK(c.rga.eta == 0.5);
  CHECK(c.rga.beta_w == 0.25);
  CHECK(c.rga.eps == 1e-6);
  CHECK(c.rga.lambda_r == 2.0);
  CHECK(c.rga.lambda_d == 3.0);
  CHECK(!c.rga.use_log);
  CHECK(c.rga.gra_stride == 4);
  CHECK(c.metrics_stride == 5);
  CHECK(c.acpkan.d_model == 8);
  CHECK(c.acpkan.d_hidden == 12);
  CHECK(c.acpkan.layers == 3);
  CHECK(c.acpkan.degree == 4);
  CHECK(c.mlp_sizes == std::vector<int>{2, 20, 1});
  CHECK(c.problem_options.grid == 15);
  CHECK(c.problem_options.boundary == 11);
  CHECK(c.problem_options.eval_grid == 31);
  CHECK(c.problem_options.wave_coefficient == 3.0);
  CHECK(!c.parallel);
  CHECK(c.shard_size == 8);
}

TEST_CASE("bad keys and values are rejected") {
  TrainConfig c;
  CHECK_THROWS_WITH(apply_config(c, {{"learning_rate", "1"}}), doctest::Contains("unknown key"));
  CHECK_THROWS(apply_config(c, {{"epochs", "ten"}}));
  CHECK_THROWS(apply_config(c, {{"epochs", "10.5"}}));
  CHECK_THROWS(apply_config(c, {{"lr", "1e-3x"}}));
  CHECK_THROWS(apply_config(c, {{"rga", "maybe"}}));
  CHECK_THROWS(apply_config(c, {{"mlp_sizes", "4"}}));
}

TEST_CASE("config files") {
  const auto dir = acpkan::testing::scratch_dir("config");
  {
    std::ofstream(dir / "a.cfg") << "grid = 9\n";
  }
  CHECK(read_key_values(dir / "a.cfg").at("grid") == "9");
  CHECK_THROWS(read_key_values(dir / "missing.cfg"));
}
