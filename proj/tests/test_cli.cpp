#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace {

std::string fixture(const std::string& name) { return std::string(VFC_FIXTURE_DIR) + "/" + name; }

int run_cli(const std::string& args, const std::string& out_path) {
  std::string cmd = std::string(VFC_CLI_PATH) + " " + args + " > " + out_path + " 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("complete-polytope matches the library result") {
  int code = run_cli("complete-polytope " + fixture("interval01_polytope.json") + " --point 0",
                     "/tmp/vfc_cli_cp.json");
  CHECK(code == 0);
  std::string out = slurp("/tmp/vfc_cli_cp.json");
  CHECK(out.find("\"complete\": true") != std::string::npos);
  CHECK(out.find("\"b\": \"0\"") != std::string::npos);
}

TEST_CASE("integrate reports the frozen counts") {
  REQUIRE(run_cli("integrate " + fixture("dbar_zsq.json"), "/tmp/vfc_cli_int.json") == 0);
  std::string out = slurp("/tmp/vfc_cli_int.json");
  CHECK(out.find("\"integral\": 2.0") != std::string::npos);
}

TEST_CASE("reports are byte-identical for identical inputs") {
  REQUIRE(run_cli("check " + fixture("dbar_z.json") + " --report /tmp/vfc_rep_a.json", "/tmp/devnull_a") ==
          0);
  REQUIRE(run_cli("check " + fixture("dbar_z.json") + " --report /tmp/vfc_rep_b.json", "/tmp/devnull_b") ==
          0);
  std::string a = slurp("/tmp/vfc_rep_a.json");
  std::string b = slurp("/tmp/vfc_rep_b.json");
  REQUIRE(!a.empty());
  CHECK(a == b);
}

TEST_CASE("malformed scenario exits with the input-error code") {
  std::ofstream bad("/tmp/vfc_bad_scenario.json");
  bad << "{ \"version\": 1, \"charts\": \"oops\" }";
  bad.close();
  CHECK(run_cli("validate /tmp/vfc_bad_scenario.json", "/tmp/vfc_bad_out.txt") == 2);
  CHECK(run_cli("validate /tmp/does_not_exist.json", "/tmp/vfc_bad_out2.txt") == 2);
}

TEST_CASE("vclass report carries branch weights") {
  REQUIRE(run_cli("vclass " + fixture("equivariant_z2.json"), "/tmp/vfc_cli_vc.json") == 0);
  std::string out = slurp("/tmp/vfc_cli_vc.json");
  CHECK(out.find("\"1/2\"") != std::string::npos);
  CHECK(out.find("\"branches\": 2") != std::string::npos);
}
