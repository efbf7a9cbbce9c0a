#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "probe_latency/cli.h"

namespace probe_latency {
namespace {

namespace fs = std::filesystem;

// Flags used by tools/regenerate_golden.sh to write the committed fixtures.
const std::vector<std::string> kFixtureSynthFlags = {"--inject-slowdown", "3",
                                                      "--inject-recovery", "5"};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Golden, SynthRegeneratesCommittedFixtures) {
  const fs::path dir = fs::temp_directory_path() / "probe_latency_fixture_regen";
  fs::remove_all(dir);
  std::vector<std::string> args = {"synth", "--out", dir.string()};
  args.insert(args.end(), kFixtureSynthFlags.begin(), kFixtureSynthFlags.end());
  std::ostringstream out, err;
  ASSERT_EQ(cli::run(args, out, err), 0) << err.str();
  const fs::path fixtures = PROBE_LATENCY_FIXTURE_DIR;
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(fixtures)) {
    const auto name = e.path().filename();
    EXPECT_EQ(slurp(e.path()), slurp(dir / name)) << name;
    ++compared;
  }
  EXPECT_EQ(compared, 6u);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace probe_latency
