#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fluxctl/config.hpp"
#include "fluxctl/error.hpp"
#include "fluxctl/run.hpp"

int main(int argc, char** argv)
{
  using namespace fluxctl;

  CLI::App app{"Optimal control of scalar conservation laws"};
  app.set_version_flag("--version", "fluxctl 0.1.0");
  std::string mode_name, config_path, output_dir;
  std::optional<int> max_iters;
  std::optional<double> tol;
  bool parallel = false;
  app.add_option("mode", mode_name, "control | forward | compare | check")
      ->required()
      ->check(CLI::IsMember({"control", "forward", "compare", "check"}));
  app.add_option("--config", config_path, "run configuration file")->required();
  app.add_option("--output", output_dir, "artifact directory (overrides [output] dir)");
  app.add_option("--max-iters", max_iters, "iteration cap of the primal-dual solver")->check(CLI::PositiveNumber);
  app.add_option("--tol", tol, "residual tolerance of the primal-dual solver")->check(CLI::PositiveNumber);
  app.add_flag("--parallel", parallel, "parallel pointwise primal update");

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const& e) {
    int const rc = app.exit(e);
    return rc == 0 ? 0 : exit_status::config_error;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (max_iters) cfg.solver.max_iters = *max_iters;
    if (tol) cfg.solver.tol = *tol;
    cfg.solver.parallel = parallel;
    std::filesystem::path const out = output_dir.empty() ? std::filesystem::path(cfg.output_dir) : std::filesystem::path(output_dir);

    RunResult const res = run(cfg, *parse_mode(mode_name), out, std::cerr);
    std::cout << res.summary.str();
    for (auto const& a : res.artifacts) std::cerr << "wrote " << a.string() << '\n';
    return res.exit_code;
  } catch (Error const& e) {
    std::cerr << "fluxctl: " << e.what() << '\n';
    return exit_status_for(e);
  } catch (std::exception const& e) {
    std::cerr << "fluxctl: " << e.what() << '\n';
    return exit_status::numerical_failure;
  }
}
