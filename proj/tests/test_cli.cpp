#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "cliqueseg/cli.hpp"
#include "test_util.hpp"

using namespace cliqueseg;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> synth_args(const std::string& dir) {
  return {"synth", "--out", dir, "--seed", "4", "--lemmas", "60", "--train", "60", "--dev", "15", "--test", "15",
          "--max-words", "6", "--workers", "1"};
}

}  // namespace

TEST(Cli, SynthIsReproducible) {
  testutil::TempDir a("cli"), b("cli");
  ASSERT_EQ(run(synth_args(a.path().string())).code, 0);
  ASSERT_EQ(run(synth_args(b.path().string())).code, 0);
  for (const char* f : {"schema.json", "train.corpus.jsonl", "train.candidates.jsonl", "test.corpus.jsonl"})
    EXPECT_EQ(slurp(a.file(f)), slurp(b.file(f))) << f;
  const auto manifest = nlohmann::json::parse(slurp(a.file("manifest.json")));
  EXPECT_EQ(manifest.at("subcommand"), "synth");
  EXPECT_EQ(manifest.at("seed"), 4);
  FileHeader h;
  read_corpus(a.file("train.corpus.jsonl"), &h);
  EXPECT_EQ(h.config_fingerprint, manifest.at("config_fingerprint").get<std::string>());
}

TEST(Cli, FullPipeline) {
  testutil::TempDir d("cli");
  const auto dir = d.path().string();
  ASSERT_EQ(run(synth_args(dir)).code, 0);
  auto r = run({"stats", "--corpus", d.file("train.corpus.jsonl"), "--out", d.file("stats.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::vector<std::string> common{"--schema", d.file("schema.json"), "--stats", d.file("stats.json")};
  auto with = [&](std::vector<std::string> a) {
    a.insert(a.begin() + 1, common.begin(), common.end());
    return a;
  };
  r = run(with({"featgen", "--candidates", d.file("train.candidates.jsonl"), "--out", d.file("fs.json"), "-k", "30"}));
  ASSERT_EQ(r.code, 0) << r.err;
  r = run(with({"train", "--features", d.file("fs.json"), "--candidates", d.file("train.candidates.jsonl"),
                "--dev-candidates", d.file("dev.candidates.jsonl"), "--dev-gold", d.file("dev.corpus.jsonl"),
                "--epochs", "2", "--hidden", "8", "--out", d.file("m.json"), "--log", d.file("log.jsonl")}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(d.file("m.json.manifest.json")));
  std::ifstream log(d.file("log.jsonl"));
  std::string line;
  std::size_t epochs = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("mean_loss"));
    ++epochs;
  }
  EXPECT_EQ(epochs, 2u);

  r = run(with({"infer", "--features", d.file("fs.json"), "--model", d.file("m.json"), "--candidates",
                d.file("test.candidates.jsonl"), "--out", d.file("p.jsonl"), "--prune-k", "3"}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("prune-k 3: edges"), std::string::npos) << r.err;
  EXPECT_EQ(read_predictions(d.file("p.jsonl")).size(), 15u);

  r = run({"eval", "--predictions", d.file("p.jsonl"), "--gold", d.file("test.corpus.jsonl"), "--task", "both",
           "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_LE(j.at("WP3T").at("F").get<double>(), j.at("WPT").at("F").get<double>());

  r = run({"eval", "--predictions", d.file("p.jsonl"), "--gold", d.file("test.corpus.jsonl"), "--group", "pos",
           "--schema", d.file("schema.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("noun"), std::string::npos) << r.out;

  // A model trained against another feature spec is refused.
  r = run(with({"featgen", "--candidates", d.file("train.candidates.jsonl"), "--out", d.file("fs2.json"), "-k", "20"}));
  ASSERT_EQ(r.code, 0) << r.err;
  r = run(with({"infer", "--features", d.file("fs2.json"), "--model", d.file("m.json"), "--candidates",
                d.file("test.candidates.jsonl"), "--out", d.file("p2.jsonl")}));
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(std::filesystem::exists(d.file("p2.jsonl")));
}

TEST(Cli, UsageAndDataErrors) {
  testutil::TempDir d("cli");
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"stats"}).code, 1);  // missing required options
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({"synth", "--out", d.file("x"), "--rule", "bad"}).code, 1);
  std::ofstream(d.file("junk.jsonl")) << "{oops\n";
  const auto r = run({"stats", "--corpus", d.file("junk.jsonl"), "--out", d.file("s.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("junk.jsonl:1"), std::string::npos) << r.err;
}

TEST(Cli, BinaryExitCodes) {
  const std::string bin = CLIQUESEG_CLI_PATH;
  auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status(bin + " --help"), 0);
  EXPECT_EQ(status(bin + " eval"), 1);
  testutil::TempDir d("cli");
  std::ofstream(d.file("bad.jsonl")) << "{\"header\":{\"format\":\"cliqueseg-corpus\",\"version\":7}}\n";
  EXPECT_EQ(status(bin + " stats --corpus " + d.file("bad.jsonl") + " --out " + d.file("s.json")), 2);
}
