#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "vfplab/config.hpp"
#include "vfplab/errors.hpp"
#include "vfplab/experiment.hpp"
#include "vfplab/io.hpp"

using namespace vfp;
using vfp::test::front_at;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vfplab_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("front save / load keeps the residual to the last bit") {
    const auto dir = scratch("front");
    const auto& f = front_at(257);
    save_front(f, dir / "front.json");
    const auto g = load_front(dir / "front.json");
    CHECK(g.w1.values == f.w1.values);
    CHECK(g.w2.values == f.w2.values);
    CHECK(g.grid.z == f.grid.z);
    CHECK(el_residual(g) == el_residual(f));
    CHECK(g.report.el_residual == f.report.el_residual);
    CHECK(g.report.iterations == f.report.iterations);
  }

  TEST_CASE("JSON doubles round-trip exactly") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Json j = Json::array();
    std::vector<double> xs;
    for (int i = 0; i < 1000; ++i) xs.push_back(std::ldexp(u(rng), static_cast<int>(rng() % 200) - 100));
    xs.push_back(5e-324);
    xs.push_back(1.7976931348623157e308);
    for (double x : xs) j.push_back(x);
    const auto back = Json::parse(j.dump()).get<std::vector<double>>();
    CHECK(back == xs);
  }

  TEST_CASE("CSV rows use 17 significant digits") {
    HydroRecord r;
    r.time = 0.1;
    r.free_energy = 1.0 / 3.0;
    r.mass = {2.0 / 7.0, -1e-300};
    const auto row = csv_row(r);
    CHECK(row.substr(0, 19) == "0.10000000000000001");
    double back = 0.0;
    std::sscanf(row.c_str() + row.find(',') + 1, "%lf", &back);
    CHECK(back == r.free_energy);
    CHECK(std::count(row.begin(), row.end(), ',') == 5);
    CHECK(std::string(kKineticCsvHeader).starts_with("t,norm_M,norm_D,norm_M_gamma"));
  }

  TEST_CASE("checkpoint round trip") {
    const auto dir = scratch("ckpt");
    Checkpoint c;
    c.params = front_at(257).params;
    c.options.order = 3;
    c.options.k_const = 12.5;
    c.state = KineticState(3, 257);
    c.state.time = 1.25;
    for (std::size_t k = 0; k < c.state.coeffs.size(); ++k) c.state.coeffs[k] = std::sin(0.1 * k) * 1e-7;
    save_checkpoint(c, dir / "c.json");
    const auto d = load_checkpoint(dir / "c.json");
    CHECK(d.state.coeffs == c.state.coeffs);
    CHECK(d.state.time == 1.25);
    CHECK(d.options.k_const.value() == 12.5);
    CHECK(d.params.nz == 257);
  }

  TEST_CASE("malformed documents are validation errors") {
    const auto dir = scratch("bad");
    std::ofstream(dir / "x.json") << "{ not json";
    CHECK_THROWS_AS(read_json(dir / "x.json"), ValidationError);
    std::ofstream(dir / "y.json") << R"({"format": "vfplab-front"})";
    CHECK_THROWS_WITH_AS(load_front(dir / "y.json"), doctest::Contains("params"), ValidationError);
    CHECK_THROWS_AS(read_json(dir / "missing.json"), ValidationError);
  }

  TEST_CASE("SHA-256 known answer") {
    const auto dir = scratch("sha");
    std::ofstream(dir / "abc", std::ios::binary) << "abc";
    CHECK(sha256_file(dir / "abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    std::ofstream(dir / "empty", std::ios::binary);
    CHECK(sha256_file(dir / "empty") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  }
}

TEST_SUITE("config") {
  TEST_CASE("empty configuration gives the documented defaults") {
    const auto c = merge_config({}, {});
    CHECK(c.params.beta == 1.25);
    CHECK(c.params.n == 2.0);
    CHECK(c.params.half_width == 12.0);
    CHECK(c.params.nz == 1025);
    CHECK(c.params.hermite_order == 16);
    CHECK(c.params.kernel_radius == 1.0);
    CHECK(c.seed == 12345);
    CHECK_NOTHROW(validate_config(c));
    for (const auto& key : config_keys()) CHECK_FALSE(key.help.empty());
  }

  TEST_CASE("flags override the file, which overrides defaults") {
    const auto file = parse_config_text("beta = 1.25  # file value\nnz = 513\n\n# comment\ntmax=3\n");
    const auto c = merge_config(file, {{"beta", "1.5"}});
    CHECK(c.params.beta == 1.5);
    CHECK(c.params.nz == 513);
    CHECK(c.tmax == 3.0);
  }

  TEST_CASE("unknown keys, type mismatches and duplicates name the key") {
    CHECK_THROWS_WITH_AS(parse_config_text("betta = 1"), doctest::Contains("betta"), ValidationError);
    CHECK_THROWS_WITH_AS(merge_config({}, {{"nz", "1025.5"}}), doctest::Contains("nz"), ValidationError);
    CHECK_THROWS_WITH_AS(merge_config({}, {{"beta", "abc"}}), doctest::Contains("beta"), ValidationError);
    CHECK_THROWS_WITH_AS(merge_config({}, {{"enforce-symmetry", "maybe"}}), doctest::Contains("enforce-symmetry"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse_config_text("nz = 1\nnz = 3"), doctest::Contains("duplicate"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_config_text("nz 3"), doctest::Contains(":1:"), ValidationError);
    CHECK_THROWS_WITH_AS(merge_config({}, {{"seed", "-1"}}), doctest::Contains("seed"), ValidationError);
  }

  TEST_CASE("up-front validation: parity, domain / radius, CFL") {
    auto invalid = [](ConfigValues v, const char* key) {
      CHECK_THROWS_WITH_AS(validate_config(merge_config({}, v)), doctest::Contains(key), ValidationError);
    };
    invalid({{"nz", "1024"}}, "nz");
    invalid({{"domain", "8"}}, "domain");
    invalid({{"dt", "0.01"}}, "CFL");
    invalid({{"cfl", "0.5"}}, "CFL");
    invalid({{"record-every", "0"}}, "record-every");
    invalid({{"front-damping", "1.5"}}, "front-damping");
    invalid({{"perturbation", "custom"}}, "perturbation");
  }

  TEST_CASE("canonical text round-trips") {
    auto c = merge_config({}, {{"beta", "1.3"}, {"out", "somewhere"}, {"with-hydro", "yes"}});
    const auto again = merge_config(parse_config_text(config_to_text(c)), {});
    CHECK(config_values(again) == config_values(c));
    CHECK(again.with_hydro);
  }

  TEST_CASE("config file on disk") {
    const auto dir = scratch("cfg");
    std::ofstream(dir / "run.cfg") << "nz = 257\nbeta = 1.4\n";
    const auto c = parse_config(dir / "run.cfg", {{"nz", "513"}});
    CHECK(c.params.nz == 513);
    CHECK(c.params.beta == 1.4);
    CHECK_THROWS_AS(parse_config(dir / "nope.cfg"), ValidationError);
  }
}

TEST_SUITE("experiment") {
  TEST_CASE("stage plans") {
    ExperimentConfig c;
    CHECK(stage_plan(c) == std::vector<std::string>{"thermo", "front", "spectrum", "evolve"});
    c.with_hydro = true;
    CHECK(stage_plan(c).back() == "hydro");
    c.experiment = Experiment::hydro;
    CHECK(stage_plan(c) == std::vector<std::string>{"thermo", "front", "hydro"});
    CHECK(experiment_from_string("spectrum") == Experiment::spectrum);
  }

  TEST_CASE("derived seeds are distinct per stream and reproducible") {
    CHECK(derive_seed(1, 1) != derive_seed(1, 2));
    CHECK(derive_seed(1, 1) != derive_seed(2, 1));
    CHECK(derive_seed(7, 3) == derive_seed(7, 3));
  }

  TEST_CASE("subcritical pipeline stops after thermo with a front-nonexistence notice") {
    const auto dir = scratch("sub");
    auto c = merge_config({}, {{"beta", "0.9"}, {"nz", "257"}, {"out", dir.string()}});
    const auto m = run_pipeline(c);
    CHECK(m.status == "failed");
    REQUIRE(m.failed_stage.has_value());
    CHECK(*m.failed_stage == "front");
    CHECK(m.error->find("no front exists") != std::string::npos);
    CHECK(m.stages[0].status == "ok");
    CHECK(m.stages[2].status == "skipped");
    CHECK(exit_code(m) == 2);
    CHECK(fs::exists(dir / "thermo.json"));
    CHECK_FALSE(fs::exists(dir / "front.json"));
  }

  TEST_CASE("short pipeline: manifest lists every file with a matching hash") {
    const auto dir = scratch("pipe");
    auto c = merge_config({}, {{"nz", "257"}, {"tmax", "0.3"}, {"hermite-order", "6"}, {"lgap-samples", "50"},
                               {"aprime-samples", "10"}, {"with-hydro", "true"}, {"hydro-tmax", "0.05"},
                               {"out", dir.string()}});
    const auto m = run_pipeline(c);
    REQUIRE(m.status == "ok");
    CHECK(exit_code(m) == 0);
    std::vector<std::string> names;
    for (const auto& f : m.files) {
      names.push_back(f.name);
      CHECK(sha256_file(dir / f.name) == f.sha256);
      CHECK(fs::file_size(dir / f.name) == f.bytes);
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
      const auto n = entry.path().filename().string();
      if (n != "manifest.json") CHECK(std::find(names.begin(), names.end(), n) != names.end());
    }
    for (const char* want : {"front.json", "spectrum.json", "kinetic.csv", "checkpoint.json", "hydro.csv"})
      CHECK(std::find(names.begin(), names.end(), want) != names.end());
    const auto manifest = read_json(dir / "manifest.json");
    CHECK(manifest["status"] == "ok");
    CHECK(manifest["config"]["nz"] == "257");
    CHECK(manifest["files"].size() == m.files.size());
  }

  TEST_CASE("front file and checkpoint resume") {
    const auto dir = scratch("resume");
    auto base = ConfigValues{{"nz", "257"}, {"hermite-order", "6"}, {"tmax", "0.2"}, {"out", (dir / "a").string()}};
    auto c = merge_config({}, base);
    c.experiment = Experiment::evolve;
    REQUIRE(run_experiment(c).status == "ok");
    const auto first = load_checkpoint(dir / "a" / "checkpoint.json");
    CHECK(first.state.time == doctest::Approx(0.2));

    base["out"] = (dir / "b").string();
    base["front-file"] = (dir / "a" / "front.json").string();
    base["checkpoint-file"] = (dir / "a" / "checkpoint.json").string();
    c = merge_config({}, base);
    c.experiment = Experiment::evolve;
    REQUIRE(run_experiment(c).status == "ok");
    CHECK(load_checkpoint(dir / "b" / "checkpoint.json").state.time == doctest::Approx(0.4));
    CHECK(slurp(dir / "a" / "front.json") == slurp(dir / "b" / "front.json"));

    base["nz"] = "513";
    base["out"] = (dir / "c").string();
    c = merge_config({}, base);
    c.experiment = Experiment::evolve;
    const auto m = run_experiment(c);
    CHECK(*m.failed_stage == "front");
    CHECK(exit_code(m) == 2);
  }
}
