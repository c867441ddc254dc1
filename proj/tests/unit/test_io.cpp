#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

#include "vlb/io.hpp"

using namespace vlb;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "vlb_test_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

bool bit_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

TEST_CASE("base64 known vectors", "[io]") {
  auto enc = [](const std::string& s) { return base64_encode(std::vector<std::uint8_t>(s.begin(), s.end())); };
  CHECK(enc("") == "");
  CHECK(enc("f") == "Zg==");
  CHECK(enc("fo") == "Zm8=");
  CHECK(enc("foo") == "Zm9v");
  CHECK(enc("foobar") == "Zm9vYmFy");
  auto dec = base64_decode("Zm9vYmE=");
  CHECK(std::string(dec.begin(), dec.end()) == "fooba");
  CHECK_THROWS_AS(base64_decode("abc"), ConfigError);
  CHECK_THROWS_AS(base64_decode("ab!="), ConfigError);
}

TEST_CASE("float64 payloads round trip bit for bit", "[io]") {
  Vector v{0.0, -0.0, 1.0 / 3.0, std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::max(),
           -std::numeric_limits<double>::infinity(), 1e-300};
  CHECK(bit_equal(decode_doubles(encode_doubles(v)), v));
  CHECK(encode_doubles({1.0}) == "AAAAAAAA8D8=");
}

TEST_CASE("config hash is stable and key-order independent", "[io]") {
  json a = {{"b", 1}, {"a", "x"}};
  json b = json::parse(R"({"a":"x","b":1})");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
  CHECK(fmt(0.1) == "0.10000000000000001");
}

TEST_CASE("csv writer emits the hash line and header", "[io]") {
  auto path = scratch("t.csv");
  {
    CsvWriter w(path.string(), "demo/1", "00ff", {"a", "b"});
    w.row({"1", "2"});
  }
  CHECK(read_text(path.string()) == "# demo/1 config_hash=00ff\na,b\n1,2\n");
}

TEST_CASE("checkpoint round trip is bit exact", "[io]") {
  Checkpoint c;
  c.network.input_dim = 2;
  c.network.hidden = {3, 4};
  c.network.embedding = EmbeddingKind::ReverseCdf;
  c.network.cdf_target = DesignedTarget::AlphaSquared;
  c.schedule = parse_schedule_name("sp-tanh");
  c.warm_start = {"laplace", 0.99, 0.05, 42};
  c.training = {{"lr", 2e-4}};
  Rng rng(1);
  c.state.params.resize(29);
  for (double& v : c.state.params) v = rng.normal();
  c.state.adam.m = c.state.params;
  c.state.adam.v.assign(29, 1.0 / 7.0);
  c.state.adam.step = 12;
  c.state.ema.shadow = c.state.params;
  c.state.ema.rate = 0.999;
  c.state.ema.warmup = false;
  c.state.step = 12;

  auto path = scratch("ckpt.json");
  save_checkpoint(path.string(), c);
  auto d = load_checkpoint(path.string());
  CHECK(bit_equal(d.state.params, c.state.params));
  CHECK(bit_equal(d.state.adam.m, c.state.adam.m));
  CHECK(bit_equal(d.state.adam.v, c.state.adam.v));
  CHECK(bit_equal(d.state.ema.shadow, c.state.ema.shadow));
  CHECK(d.state.adam.step == 12);
  CHECK(d.state.step == 12);
  CHECK(d.state.ema.rate == 0.999);
  CHECK_FALSE(d.state.ema.warmup);
  CHECK(d.network.hidden == c.network.hidden);
  CHECK(d.network.embedding == EmbeddingKind::ReverseCdf);
  CHECK(d.network.cdf_target == DesignedTarget::AlphaSquared);
  CHECK(d.schedule.regime == "sp");
  CHECK(d.schedule.family == "tanh");
  CHECK(d.warm_start.noise == "laplace");
  CHECK(d.warm_start.seed == 42);
  CHECK(d.training.at("lr").get<double>() == 2e-4);

  save_checkpoint(scratch("ckpt2.json").string(), d);
  CHECK(read_text(path.string()) == read_text(scratch("ckpt2.json").string()));
}

TEST_CASE("checkpoint format errors", "[io]") {
  CHECK_THROWS_AS(checkpoint_from_json(json{{"format", "other"}}), ConfigError);
  CHECK_THROWS_AS(read_text("/nonexistent/path/x.json"), ConfigError);
}
