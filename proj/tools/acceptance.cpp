// Acceptance runner: one PASS/FAIL line per criterion, all ten always run.

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "hamfold/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"hamfold acceptance criteria"};
  hamfold::acceptance::Settings st;
  st.keep_going = true;
  std::string json_out;
  app.add_option("--seed", st.seed, "seed");
  app.add_option("--cli", st.cli, "hamfold binary for the determinism criterion");
  app.add_option("--scratch", st.scratch_dir, "working directory for the determinism runs");
  app.add_option("--json", json_out, "also write the report here");
  app.add_option("--only", st.only, "criterion ids")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  std::filesystem::create_directories(st.scratch_dir);
  const auto rep = hamfold::acceptance::run(st, [](const hamfold::acceptance::CriterionResult& r) {
    std::cout << hamfold::acceptance::line(r) << std::endl;
  });
  std::size_t passed = 0;
  for (const auto& r : rep.results) passed += r.pass ? 1 : 0;
  std::cout << passed << "/" << rep.results.size() << " criteria pass" << std::endl;
  if (!json_out.empty())
    hamfold::report::write_file(json_out, hamfold::report::dump(hamfold::acceptance::to_json(rep)));
  return rep.all_pass() ? EXIT_SUCCESS : EXIT_FAILURE;
}
