#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "mecsched_test_cli";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& args, const std::string& tag = "last") {
  const std::string cmd = std::string(MECSCHED_CLI_PATH) + " " + args + " >" +
                          (kDir / (tag + ".out")).string() + " 2>" + (kDir / (tag + ".err")).string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

struct Workspace {
  Workspace() {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
    write(kDir / "cfg.json", R"({
      "seed": 4, "count_per_n": 4,
      "distribution": {"n_values": [3, 6]},
      "ga": {"generations": 10, "population_size": 12},
      "net": {"embed_dim": 8, "head_count": 2, "ffn_dim": 8, "encoder_layers": 1},
      "training": {"epochs": 1, "batch_size": 4},
      "paths": {"checkpoint_dir": ")" + (kDir / "ck").string() + R"("}
    })");
    write(kDir / "one.json", R"({"tasks": [[2e5, 1.2e9, 5e6, 3e-11]]})");
  }
  std::string cfg() const { return "--config " + (kDir / "cfg.json").string(); }
};

}  // namespace

TEST_CASE("cli") {
  const Workspace ws;

  SUBCASE("usage errors") {
    CHECK(run("--help") == 0);
    CHECK(run("") == 2);
    CHECK(run("generate --out x") == 2);
    CHECK(run("frobnicate") == 2);
    write(kDir / "unknown.json", R"({"gaa": {}})");
    CHECK(run("generate --config " + (kDir / "unknown.json").string() + " --out " +
              (kDir / "x").string()) == 2);
    CHECK(slurp(kDir / "last.err").find("gaa") != std::string::npos);
  }

  SUBCASE("io errors") {
    CHECK(run("generate --config " + (kDir / "missing.json").string() + " --out " +
              (kDir / "x").string()) == 3);
    CHECK(run("evaluate " + ws.cfg() + " --data " + (kDir / "nodata").string() + " --out " +
              (kDir / "r.csv").string()) == 3);
  }

  SUBCASE("generate is reproducible") {
    REQUIRE(run("generate " + ws.cfg() + " --out " + (kDir / "d1").string()) == 0);
    REQUIRE(run("generate " + ws.cfg() + " --out " + (kDir / "d2").string() + " --workers 2") == 0);
    const std::string a = slurp(kDir / "d1" / "dataset.jsonl");
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(kDir / "d2" / "dataset.jsonl"));
    CHECK(slurp(kDir / "d1" / "manifest.json") == slurp(kDir / "d2" / "manifest.json"));

    SUBCASE("train, evaluate and solve") {
      const std::string data = " --data " + (kDir / "d1").string();
      REQUIRE(run("train " + ws.cfg() + " --net offload" + data + " --out " +
                  (kDir / "ck" / "offload.json").string()) == 0);
      REQUIRE(run("train " + ws.cfg() + " --net resource" + data + " --out " +
                  (kDir / "ck" / "resource.json").string()) == 0);
      CHECK(fs::exists(kDir / "ck" / "offload.history.csv"));
      CHECK(run("train " + ws.cfg() + " --net cnn" + data + " --out " + (kDir / "c.json").string()) == 2);

      REQUIRE(run("evaluate " + ws.cfg() + data + " --methods all-local ga tsnet-sac --out " +
                  (kDir / "rep" / "r.csv").string()) == 0);
      const std::string csv = slurp(kDir / "rep" / "r.csv");
      CHECK(csv.rfind("schema_version,method,n,", 0) == 0);
      CHECK(csv.find(",tsnet-sac,6,") != std::string::npos);
      CHECK(fs::exists(kDir / "rep" / "r_plots" / "sac_gain_vs_k.dat"));
      CHECK(run("evaluate " + ws.cfg() + data + " --methods annealing --out " +
                (kDir / "r2.csv").string()) == 2);

      REQUIRE(run("solve " + ws.cfg() + " --instance " + (kDir / "one.json").string() +
                  " --method tsnet-sac", "solve") == 0);
      const auto out = nlohmann::json::parse(slurp(kDir / "solve.out"));
      CHECK(out.at("method") == "tsnet-sac");
      CHECK(out.at("schedule").at("m").size() == 1);
      CHECK(out.at("cost").at("U").get<double>() > 0.0);
      CHECK(slurp(kDir / "solve.err").find("latency_ms:") != std::string::npos);
    }
  }

  SUBCASE("solve baselines") {
    REQUIRE(run("solve " + ws.cfg() + " --instance " + (kDir / "one.json").string() +
                " --method oracle", "solve") == 0);
    const auto oracle = nlohmann::json::parse(slurp(kDir / "solve.out"));
    REQUIRE(run("solve " + ws.cfg() + " --instance " + (kDir / "one.json").string() +
                " --method all-local", "solve") == 0);
    const auto local = nlohmann::json::parse(slurp(kDir / "solve.out"));
    CHECK(local.at("schedule").at("m")[0] == 0);
    CHECK(oracle.at("cost").at("U").get<double>() <= local.at("cost").at("U").get<double>());
    CHECK(run("solve " + ws.cfg() + " --instance " + (kDir / "one.json").string() +
              " --method quantum") == 2);
    // Learned methods without any checkpoint are a usage error.
    CHECK(run("solve " + ws.cfg() + " --instance " + (kDir / "one.json").string() +
              " --method mlp") == 2);
    write(kDir / "empty.json", R"({"tasks": []})");
    CHECK(run("solve " + ws.cfg() + " --instance " + (kDir / "empty.json").string() +
              " --method all-local") == 2);
  }
}
