#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string err;
};

fs::path scratch_root() {
  static fs::path root = [] {
    fs::path p = fs::temp_directory_path() / "roughlab_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = scratch_root() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliRun run_cli(const std::string& args, const fs::path& dir) {
  fs::path errfile = dir / "stderr.txt";
  std::string cmd = std::string(ROUGHLAB_CLI_PATH) + " " + args + " 2>'" + errfile.string() + "' >/dev/null";
  int status = std::system(cmd.c_str());
  CliRun r;
  if (status != -1 && WIFEXITED(status)) r.code = WEXITSTATUS(status);
  r.err = read_file(errfile);
  return r;
}

fs::path write_config(const fs::path& dir, const json& cfg) {
  fs::path p = dir / "config.json";
  std::ofstream out(p);
  out << cfg.dump(2) << "\n";
  return p;
}

json read_json(const fs::path& p) { return json::parse(read_file(p)); }

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Cli, HormanderHeisenberg) {
  fs::path dir = fresh_dir("hormander");
  fs::path cfg = write_config(dir, json{{"vf", {{"name", "heisenberg"}}}, {"d", 2}, {"e", 3}});
  CliRun r = run_cli("hormander --config " + quoted(cfg) + " --out-dir " + quoted(dir), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  json out = read_json(dir / "hormander.json");
  EXPECT_EQ(out.at("rank").get<int>(), 3);
  EXPECT_EQ(out.at("depth").get<int>(), 2);
  json manifest = read_json(dir / "manifest.json");
  EXPECT_EQ(manifest.at("subcommand"), "hormander");
  EXPECT_EQ(manifest.at("exit_code").get<int>(), 0);
  EXPECT_EQ(manifest.at("schema"), "run-manifest/1");
}

TEST(Cli, CertifyAdditiveIsCertified) {
  fs::path dir = fresh_dir("certify_ok");
  json cfg = {{"vf", {{"name", "additive"}, {"params", {{"dim", 1}}}}},
              {"d", 1},
              {"e", 1},
              {"a", {0.0}},
              {"z", {0.3}},
              {"K", 16},
              {"N", 4},
              {"starts", 2},
              {"substeps", 4}};
  CliRun r = run_cli("certify --config " + quoted(write_config(dir, cfg)) + " --out-dir " + quoted(dir), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  json cert = read_json(dir / "certificate.json");
  EXPECT_EQ(cert.at("verdict"), "Certified");
  EXPECT_LT(cert.at("residual").get<double>(), cert.at("eps_res").get<double>());
}

TEST(Cli, CertifyDegenerateExitsFour) {
  fs::path dir = fresh_dir("certify_degenerate");
  json cfg = {{"vf", {{"name", "polynomial"}, {"params", {{"e", 2}, {"d", 1}}}}},
              {"d", 1},
              {"e", 2},
              {"a", {0.0, 0.0}},
              {"z", {0.4, 0.1}},
              {"K", 16},
              {"N", 4},
              {"starts", 2},
              {"max_iterations", 5},
              {"substeps", 4}};
  CliRun r = run_cli("certify --config " + quoted(write_config(dir, cfg)) + " --out-dir " + quoted(dir), dir);
  EXPECT_EQ(r.code, 4);
  json cert = read_json(dir / "certificate.json");
  EXPECT_EQ(cert.at("verdict"), "NotCertified");
  json manifest = read_json(dir / "manifest.json");
  EXPECT_EQ(manifest.at("exit_code").get<int>(), 4);
}

TEST(Cli, InvalidConfigExitsTwoWithFieldMessage) {
  fs::path dir = fresh_dir("invalid_config");
  fs::path cfg = write_config(dir, json{{"t", 2.0}});
  CliRun r = run_cli("certify --config " + quoted(cfg) + " --out-dir " + quoted(dir), dir);
  EXPECT_EQ(r.code, 2);
  json err = json::parse(r.err);
  EXPECT_EQ(err.at("error").at("type"), "invalid_config");
  EXPECT_NE(err.at("error").at("message").get<std::string>().find("'t'"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "manifest.json"));
}

TEST(Cli, BadInvocationsExitTwo) {
  fs::path dir = fresh_dir("bad_invocations");
  EXPECT_EQ(run_cli("frobnicate", dir).code, 2);
  EXPECT_EQ(run_cli("lift --bogus-flag", dir).code, 2);
  EXPECT_EQ(run_cli("", dir).code, 2);
  EXPECT_EQ(run_cli("--help", dir).code, 0);
  EXPECT_EQ(run_cli("lift --set K=0 --out-dir " + quoted(dir), dir).code, 2);
}

TEST(Cli, LiftRerunsAreByteIdentical) {
  fs::path a = fresh_dir("lift_a");
  fs::path b = fresh_dir("lift_b");
  std::string args = "lift --set K=8 --set H=0.4 --set seed=7 --out-dir ";
  ASSERT_EQ(run_cli(args + quoted(a), a).code, 0);
  ASSERT_EQ(run_cli(args + quoted(b), b).code, 0);
  EXPECT_EQ(read_file(a / "rough_path.csv"), read_file(b / "rough_path.csv"));
  EXPECT_EQ(read_file(a / "lift_summary.json"), read_file(b / "lift_summary.json"));
  ASSERT_FALSE(read_file(a / "rough_path.csv").empty());

  // The manifests may differ only in their timing fields.
  json ma = read_json(a / "manifest.json");
  json mb = read_json(b / "manifest.json");
  for (const char* key : {"started_at", "finished_at", "wall_seconds"}) {
    ma.erase(key);
    mb.erase(key);
  }
  EXPECT_EQ(ma.dump(), mb.dump());
}

TEST(Cli, DensityWorkerCountDoesNotChangeOutput) {
  json cfg = {{"vf", {{"name", "additive"}, {"params", {{"dim", 1}}}}},
              {"d", 1},
              {"e", 1},
              {"z", {0.0}},
              {"K", 16},
              {"N_sim", 8},
              {"n_samples", 300},
              {"seed", 3}};
  fs::path a = fresh_dir("density_w1");
  fs::path b = fresh_dir("density_w4");
  ASSERT_EQ(run_cli("density --config " + quoted(write_config(a, cfg)) + " --workers 1 --out-dir " + quoted(a), a).code,
            0);
  ASSERT_EQ(run_cli("density --config " + quoted(write_config(b, cfg)) + " --workers 4 --out-dir " + quoted(b), b).code,
            0);
  EXPECT_EQ(read_file(a / "density.json"), read_file(b / "density.json"));
  ASSERT_FALSE(read_file(a / "density.json").empty());
}

TEST(Cli, DivergentSolveExitsThree) {
  fs::path dir = fresh_dir("solve_divergent");
  json cfg = {{"vf",
               {{"name", "polynomial"},
                {"params",
                 {{"e", 1}, {"d", 1}, {"drift", json::array({json{{"2", 1.0}}})}, {"radius", 1e9}, {"width", 1.0}}}}},
              {"d", 1},
              {"e", 1},
              {"a", {4.0}},
              {"K", 16}};
  CliRun r = run_cli("solve --config " + quoted(write_config(dir, cfg)) + " --out-dir " + quoted(dir), dir);
  EXPECT_EQ(r.code, 3);
  json err = json::parse(r.err);
  EXPECT_EQ(err.at("error").at("type"), "divergence");
}

TEST(Cli, SolveWritesCsvAndSummary) {
  fs::path dir = fresh_dir("solve_ok");
  json cfg = {{"vf", {{"name", "additive"}, {"params", {{"dim", 2}}}}}, {"d", 2}, {"e", 2}, {"K", 8}};
  CliRun r = run_cli("solve --config " + quoted(write_config(dir, cfg)) + " --out-dir " + quoted(dir), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  std::string csv = read_file(dir / "solution.csv");
  EXPECT_EQ(csv.substr(0, 8), "t,y_0,y_");
  json summary = read_json(dir / "solve_summary.json");
  EXPECT_EQ(summary.at("state_at_t").size(), 2u);
  EXPECT_EQ(summary.at("terminal").size(), 2u);
}

TEST(Cli, DerivCheckPasses) {
  fs::path dir = fresh_dir("deriv_check");
  json cfg = {{"vf", {{"name", "elliptic-rot2d"}}}, {"d", 2}, {"e", 2}, {"K", 16}, {"substeps", 16}};
  CliRun r = run_cli("deriv-check --config " + quoted(write_config(dir, cfg)) + " --out-dir " + quoted(dir), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  json out = read_json(dir / "deriv_check.json");
  EXPECT_TRUE(out.at("pass").get<bool>());
  EXPECT_LT(out.at("max_duhamel_sup_diff").get<double>(), 1e-6);
}

TEST(Cli, KlConvergenceWritesTable) {
  fs::path dir = fresh_dir("kl_convergence");
  json cfg = {{"H", 0.4}, {"K", 16}, {"N_list", {2, 4}}, {"n_samples", 20}, {"r", 2}};
  CliRun r = run_cli("kl-convergence --config " + quoted(write_config(dir, cfg)) + " --out-dir " + quoted(dir), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  std::string csv = read_file(dir / "kl_convergence.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "N,level,metric,value,std_error");
  json out = read_json(dir / "kl_convergence.json");
  EXPECT_EQ(out.at("schema"), "kl-convergence/1");
  EXPECT_EQ(out.at("rows").size(), 2u);
}

TEST(Cli, CrossCheckReportsConsistent) {
  fs::path dir = fresh_dir("cross_check");
  json cfg = {{"vf", {{"name", "additive"}, {"params", {{"dim", 1}}}}},
              {"d", 1},
              {"e", 1},
              {"z", {0.2}},
              {"K", 16},
              {"N", 4},
              {"N_sim", 8},
              {"n_samples", 400},
              {"starts", 2},
              {"substeps", 4}};
  CliRun r = run_cli("cross-check --config " + quoted(write_config(dir, cfg)) + " --out-dir " + quoted(dir), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  json out = read_json(dir / "cross_check.json");
  EXPECT_EQ(out.at("status"), "CONSISTENT");
  EXPECT_TRUE(fs::exists(dir / "certificate.json"));
  EXPECT_TRUE(fs::exists(dir / "density.json"));
}
