#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <sys/wait.h>

#include "doctest.h"

namespace {

namespace fs = std::filesystem;

const fs::path kOut = fs::temp_directory_path() / "xcl-cli-test";

// Small, fast blob setup shared by every invocation.
const char* kFast =
    " --set blobs.classes=3 --set run.topk=2 --set blobs.dim=4 --set blobs.per_class=20 --set blobs.test_per_class=10"
    " --set teacher.hidden=8 --set teacher.epochs=3 --set student.hidden=8 --set student.epochs=3";

int shell(const std::string& cmd) {
  const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int xcl(const std::string& args) { return shell(std::string(XCL_CLI_PATH) + " " + args); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("exit codes") {
  fs::remove_all(kOut);
  fs::create_directories(kOut);
  const std::string out = " --out " + kOut.string();

  SUBCASE("success") { CHECK(xcl("train-teacher --seed 1" + out + kFast) == 0); }
  SUBCASE("unknown option") { CHECK(xcl("train-teacher --bogus") == 2); }
  SUBCASE("unknown config key") {
    write(kOut / "bad.cfg", "student.layers = 3\n");
    CHECK(xcl("train-teacher --config " + (kOut / "bad.cfg").string() + out) == 2);
  }
  SUBCASE("bad override value") { CHECK(xcl("train-teacher --set student.lr=fast" + out) == 2); }
  SUBCASE("wrong data kind for the experiment") {
    write(kOut / "blobs.cfg", "data.kind = blobs\n");
    CHECK(xcl("curve-uncertainty --config " + (kOut / "blobs.cfg").string() + out) == 2);
  }
  SUBCASE("missing teacher") { CHECK(xcl("distill --seed 77" + out + kFast) == 3); }
  SUBCASE("non-finite loss") {
    CHECK(xcl("train-teacher --seed 1 --set teacher.lr=1e200" + out + kFast) == 4);
  }
  SUBCASE("bad thread count") { CHECK(shell("XCL_THREADS=zero " + std::string(XCL_CLI_PATH) + " train-teacher" + out) == 2); }
  fs::remove_all(kOut);
}

TEST_CASE("reruns write byte-identical results and refuse a changed config") {
  fs::remove_all(kOut);
  const std::string out = " --out " + kOut.string();
  REQUIRE(xcl("train-teacher --seed 2" + out + kFast) == 0);
  REQUIRE(xcl("distill --seed 2 --set sampler.kind=mix" + out + kFast) == 0);
  const std::string first = slurp(kOut / "distill.csv");
  REQUIRE(xcl("distill --seed 2 --set sampler.kind=mix" + out + kFast) == 0);
  CHECK(slurp(kOut / "distill.csv") == first);
  CHECK(first.rfind("experiment,seed,method,metric,value,config_hash\n", 0) == 0);

  CHECK(xcl("distill --seed 2 --set sampler.kind=noise" + out + kFast) == 2);
  CHECK(slurp(kOut / "distill.csv") == first);

  REQUIRE(xcl("distill --seed 2 --json --set sampler.kind=mix" + out + kFast) == 0);
  CHECK(slurp(kOut / "distill.json").front() == '[');
  fs::remove_all(kOut);
}

}  // TEST_SUITE
