#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "density/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Exact density profiles, subset approximations and finite-stage constructions"};
  app.require_subcommand(1);
  std::string config, out, artifact;

  auto add = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config,-c", config, "run configuration (JSON)")->required();
    sub->add_option("--out,-o", out, "output directory (overrides output.dir)");
    return sub;
  };
  add("density", "profile every declared set; CSV per set plus window bounds");
  add("construct", "run the configured construction; artifact, trace, certificates, verify report");
  add("generic", "genericity reports: partial, coarse, hitset, avoid, strong_array");
  add("metrics", "symmetric-difference profiles and d/D window estimates");
  auto* check = app.add_subcommand("check", "re-verify a stored artifact against its embedded configuration");
  check->add_option("--artifact,-a", artifact, "artifact.json written by construct")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : density::cli::kConfig;
  }
  auto* sub = app.get_subcommands().front();
  return density::cli::run(sub->get_name(), config, out, artifact, std::cout, std::cerr);
}
