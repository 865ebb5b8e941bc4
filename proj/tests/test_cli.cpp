#include <gtest/gtest.h>

#include <random>

#include "cli_support.hpp"
#include "density/cli.hpp"

using namespace density;
using clitest::Json;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = DENSITY_FIXTURES;
const std::string kTool = DENSITYTOOL_PATH;

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("densitytool_test_" + name);
  fs::remove_all(p);
  return p;
}

int run(const std::string& cmd, const std::string& fixture, const fs::path& out) {
  std::ostringstream o, e;
  int code = cli::run(cmd, (kFixtures / fixture).string(), out.string(), "", o, e);
  EXPECT_NE(code, -1) << e.str();
  return code;
}

int check(const fs::path& artifact) {
  std::ostringstream o, e;
  return cli::run("check", "", "", artifact.string(), o, e);
}

std::vector<std::string> csv_row(const fs::path& csv, std::size_t row) {
  std::istringstream in(clitest::slurp(csv));
  std::string line;
  for (std::size_t i = 0; i <= row; ++i) std::getline(in, line);
  std::vector<std::string> cells;
  std::istringstream ls(line);
  for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
  return cells;
}

Json doc_of(const fs::path& dir) { return Json::parse(clitest::slurp(dir / "artifact.json")); }

Json inline_config(const std::string& text) { return Json::parse(text); }

}  // namespace

TEST(CliDensity, ProfilesMatchClosedForms) {
  auto out = scratch("density");
  ASSERT_EQ(run("density", "density_basic.json", out), cli::kOk);
  EXPECT_EQ(csv_row(out / "density_R1.csv", 0), (std::vector<std::string>{"n", "count", "rho_num", "rho_den", "rho_float"}));
  EXPECT_EQ(csv_row(out / "density_R1.csv", 1024)[1], "256");
  EXPECT_EQ(csv_row(out / "density_mod4.csv", 1000)[1], "500");
  for (std::size_t n = 1; n <= 1024; n += 97) EXPECT_EQ(csv_row(out / "density_none.csv", n)[1], "0");
  auto wb = clitest::slurp(out / "window_bounds.csv");
  // ρ_18(R_1) = |{2,6,10,14}|/18 is the window minimum.
  EXPECT_NE(wb.find("R1,16,1024,2/9,18,"), std::string::npos) << wb;
}

TEST(CliDensity, SeededRandomSetsReproduce) {
  auto a = scratch("seed_a"), b = scratch("seed_b");
  ASSERT_EQ(run("density", "density_basic.json", a), cli::kOk);
  ASSERT_EQ(run("density", "density_basic.json", b), cli::kOk);
  std::string why;
  EXPECT_TRUE(clitest::same_tree(a, b, &why)) << why;
  auto raw = Json::parse(clitest::slurp(kFixtures / "density_basic.json"));
  raw["seed"] = 18;
  auto cfg_path = scratch("seed_cfg");
  fs::create_directories(cfg_path);
  clitest::spit(cfg_path / "c.json", raw.dump());
  std::ostringstream o, e;
  auto c = scratch("seed_c");
  ASSERT_EQ(cli::run("density", (cfg_path / "c.json").string(), c.string(), "", o, e), cli::kOk);
  EXPECT_NE(clitest::slurp(a / "density_coin.csv"), clitest::slurp(c / "density_coin.csv"));
}

TEST(CliConstruct, BarzdinArtifactReverifies) {
  auto out = scratch("barzdin");
  ASSERT_EQ(run("construct", "construct_barzdin_omega.json", out), cli::kOk);
  for (const char* f : {"artifact.json", "trace.jsonl", "certificates.csv", "verify.txt"}) EXPECT_TRUE(fs::exists(out / f)) << f;
  EXPECT_NE(clitest::slurp(out / "verify.txt").find("result: PASS"), std::string::npos);
  auto doc = doc_of(out);
  EXPECT_EQ(doc["format_version"], io::kFormatVersion);
  EXPECT_EQ(doc["config"]["construction"]["kind"], "barzdin");
  EXPECT_GE(doc["artifact"]["checkpoints"].size(), 21u);
  EXPECT_EQ(check(out / "artifact.json"), cli::kOk);
}

TEST(CliConstruct, DoubleWithZeroGIsEmpty) {
  auto out = scratch("double_zero");
  ASSERT_EQ(run("construct", "construct_double_zero.json", out), cli::kOk);
  auto a = io::build_from(doc_of(out)["artifact"]);
  EXPECT_EQ(std::count_if(a.entry.begin(), a.entry.end(), [](auto e) { return e != kNever; }), 0);
  EXPECT_TRUE(a.trace.empty());
}

TEST(CliConstruct, NononzeroTraceRecordsWitness) {
  auto out = scratch("nononzero");
  ASSERT_EQ(run("construct", "construct_nononzero_one.json", out), cli::kOk);
  std::istringstream in(clitest::slurp(out / "trace.jsonl"));
  std::size_t finalized = 0, lines = 0;
  std::uint64_t prev_stage = 0;
  for (std::string line; std::getline(in, line); ++lines) {
    auto st = Json::parse(line);
    if (lines) {
      EXPECT_GT(st["stage"].get<std::uint64_t>(), prev_stage);
    }
    prev_stage = st["stage"].get<std::uint64_t>();
    for (const auto& ev : st["events"])
      if (ev["kind"] == "finalize") {
        ++finalized;
        EXPECT_TRUE(ev.contains("x"));
      }
  }
  EXPECT_EQ(finalized, 1u);
}

TEST(CliConstruct, EveryFixtureReverifiesAndReproduces) {
  for (const auto& e : fs::directory_iterator(kFixtures)) {
    auto name = e.path().filename().string();
    if (name.rfind("construct_", 0) != 0) continue;
    auto a = scratch("repro_a"), b = scratch("repro_b");
    ASSERT_EQ(run("construct", name, a), cli::kOk) << name;
    ASSERT_EQ(run("construct", name, b), cli::kOk) << name;
    std::string why;
    EXPECT_TRUE(clitest::same_tree(a, b, &why)) << name << ": " << why;
    EXPECT_EQ(check(a / "artifact.json"), cli::kOk) << name;
  }
}

TEST(CliCheck, MutationsAreRejected) {
  std::mt19937_64 rng(5);
  for (const char* fixture : {"construct_barzdin_evens.json", "construct_infsup_alternating.json",
                              "construct_double_settling.json", "construct_lookahead_burst.json",
                              "construct_nononzero_roster.json", "construct_high_cofinal.json",
                              "construct_generic_not_coarse.json"}) {
    auto out = scratch("mutate");
    ASSERT_EQ(run("construct", fixture, out), cli::kOk);
    auto original = doc_of(out);
    auto target = out / "mutated.json";
    for (int trial = 0; trial < 3; ++trial) {
      auto doc = original;
      clitest::flip_member(doc, rng() % clitest::certified_extent(doc));
      clitest::spit(target, doc.dump());
      EXPECT_EQ(check(target), cli::kIntegrity) << fixture << " bit flip " << trial;
    }
    auto doc = original;
    clitest::edit_checkpoint(doc, 0);
    clitest::spit(target, doc.dump());
    EXPECT_EQ(check(target), cli::kIntegrity) << fixture << " checkpoint edit";
  }
}

TEST(CliCheck, CorruptDocuments) {
  auto out = scratch("corrupt");
  ASSERT_EQ(run("construct", "construct_sparse_roster.json", out), cli::kOk);
  auto text = clitest::slurp(out / "artifact.json");
  auto target = out / "bad.json";
  clitest::spit(target, text.substr(0, text.size() / 2));
  EXPECT_EQ(check(target), cli::kIntegrity);
  auto doc = Json::parse(text);
  doc["format_version"] = 99;
  clitest::spit(target, doc.dump());
  EXPECT_EQ(check(target), cli::kIntegrity);
  doc = Json::parse(text);
  doc["artifact"]["entry"]["length"] = 7;
  clitest::spit(target, doc.dump());
  EXPECT_EQ(check(target), cli::kIntegrity);
  doc = Json::parse(text);
  doc["artifact"]["certificates"].erase(0);
  clitest::spit(target, doc.dump());
  EXPECT_EQ(check(target), cli::kIntegrity);
  EXPECT_EQ(check(out / "missing.json"), cli::kIntegrity);
}

TEST(CliGeneric, Reports) {
  auto out = scratch("generic");
  ASSERT_EQ(run("generic", "generic_avoid.json", out), cli::kOk);
  auto s = Json::parse(clitest::slurp(out / "generic_summary.json"));
  EXPECT_EQ(s["density"], "1/8");
  EXPECT_EQ(s["modulus"], 64u);
  ASSERT_EQ(run("generic", "generic_partial.json", out), cli::kOk);
  s = Json::parse(clitest::slurp(out / "generic_summary.json"));
  EXPECT_EQ(s["errors"], 0u);
  EXPECT_EQ(s["alpha_estimate_kind"], "window estimator");
  ASSERT_EQ(run("generic", "generic_strong.json", out), cli::kOk);
  s = Json::parse(clitest::slurp(out / "generic_summary.json"));
  ASSERT_EQ(s["sets"].size(), 3u);
  EXPECT_EQ(s["sets"][2]["set"], Json::array({17}));
}

TEST(CliMetrics, PairsAndSummary) {
  auto out = scratch("metrics");
  ASSERT_EQ(run("metrics", "metrics_pairs.json", out), cli::kOk);
  // E △ M4 = residues {2} mod 4.
  EXPECT_EQ(csv_row(out / "metrics_E_M4.csv", 2000)[3], "1/4");
  auto summary = clitest::slurp(out / "metrics_summary.csv");
  EXPECT_NE(summary.find("E,M4,10,2000,"), std::string::npos);
}

TEST(CliExitCodes, Binary) {
  auto out = scratch("exit");
  auto fx = [](const char* f) { return "\"" + (kFixtures / f).string() + "\""; };
  EXPECT_EQ(clitest::run_tool(kTool, "density -c " + fx("density_basic.json") + " -o " + out.string()), 0);
  EXPECT_EQ(clitest::run_tool(kTool, "construct -c " + fx("error_label.json") + " -o " + out.string()), 2);
  EXPECT_EQ(clitest::run_tool(kTool, "density -c " + fx("error_budget.json") + " -o " + out.string()), 3);
  EXPECT_EQ(clitest::run_tool(kTool, "check -a " + (out / "nothing.json").string()), 4);
  EXPECT_EQ(clitest::run_tool(kTool, "frobnicate"), 2);
  EXPECT_EQ(clitest::run_tool(kTool, "density"), 2);
}

TEST(CliConfig, VocabularyErrors) {
  auto bad = [](const std::string& text) {
    EXPECT_THROW(cli::parse_config(inline_config(text)), cli::ConfigError) << text;
  };
  bad(R"({"sets": []})");
  bad(R"({"universe": {"n_max": 0, "stage_max": 1}})");
  bad(R"({"universe": {"n_max": 10, "stage_max": 1}, "sets": [{"label": "a", "kind": "wat"}]})");
  bad(R"({"universe": {"n_max": 10, "stage_max": 1}, "sets": [{"label": "a", "kind": "empty"}, {"label": "a", "kind": "omega"}]})");
  bad(R"({"universe": {"n_max": 10, "stage_max": 1}, "sets": [{"label": "a", "kind": "residue", "modulus": 3, "residues": [5]}]})");
  bad(R"({"universe": {"n_max": 10, "stage_max": 1}, "streams": [{"label": "s", "kind": "scripted", "script": {"x": [1]}}]})");
  bad(R"({"universe": {"n_max": 10, "stage_max": 1}, "roster": {"streams": ["nope"]}})");
  bad(R"({"universe": {"n_max": 10, "stage_max": 1}, "sets": [{"label": "r", "kind": "random", "p": "3/2"}]})");
  auto cfg = cli::parse_config(inline_config(R"({"universe": {"n_max": 10, "stage_max": 4},
      "sets": [{"label": "e", "kind": "parity"}, {"label": "o", "kind": "complement", "of": "e"}],
      "streams": [{"label": "s", "kind": "set", "set": "o", "schedule": {"kind": "burst", "period": 2}}],
      "deciders": [{"label": "d", "kind": "threshold-delay", "set": "e", "threshold": 2, "delay": 1}]})"));
  EXPECT_TRUE(cfg.set("o").contains(3));
  EXPECT_EQ(cfg.decider("d").eval(1, 0), Tri::Zero);
  EXPECT_EQ(cfg.decider("d").eval(4, 4), Tri::Undefined);
  EXPECT_EQ(cfg.decider("d").eval(4, 5), Tri::One);
  EXPECT_EQ(cfg.decider("d").label(), "d");
}

TEST(CliArtifactIo, RoundTrips) {
  std::vector<bool> bits{true, true, false, true, false, false, false, true};
  EXPECT_EQ(io::bits_from(io::bits_json(bits)), bits);
  EXPECT_EQ(io::bits_from(io::bits_json({})), std::vector<bool>{});
  std::vector<std::uint64_t> vals{kNever, kNever, 3, 3, 0, kNever};
  EXPECT_EQ(io::values_from(io::values_json(vals)), vals);
  TraceEvent ev{7, "appoint", {}};
  ev.set("xs", std::vector<std::uint64_t>{1, 2}).set("ok", true).set("label", "R_0").set("j", std::uint64_t{4});
  auto back = io::trace_from(io::trace_json({ev}));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].stage, 7u);
  EXPECT_EQ(back[0].num("j"), 4u);
  EXPECT_EQ(back[0].str("label"), "R_0");
  auto c = Certificate::make("f", 1, 2, Rational(1, 3), Rel::Lt, Rational(1, 2));
  EXPECT_TRUE(io::same_certificate(io::certificate_from(io::certificate_json(c)), c));
  EXPECT_THROW(io::parse_document("{}"), io::ArtifactCorrupt);
}
