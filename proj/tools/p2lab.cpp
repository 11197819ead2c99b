#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "p2lab/p2lab.hpp"

namespace {

int run(const std::string& command, const std::string& config_path, const std::string& out_path) {
  try {
    p2lab::RunConfig cfg = p2lab::load_config(config_path);
    p2lab::apply_environment(cfg);
    p2lab::CommandResult result = p2lab::run_command(command, cfg);

    std::filesystem::path out = out_path;
    if (out.empty() && !cfg.output.empty()) out = cfg.output;
    if (out.empty() && result.mesh_text) {
      std::cout << *result.mesh_text;
      return result.exit_code;
    }
    if (out.empty()) out = "p2lab_" + command + ".json";
    p2lab::write_outputs(result, out);
    std::cerr << "p2lab " << command << ": wrote " << out.string();
    if (result.csv) std::cerr << " and " << p2lab::csv_path_for(out).string();
    std::cerr << " (exit " << result.exit_code << ")\n";
    return result.exit_code;
  } catch (const p2lab::Error& e) {
    std::cerr << "p2lab " << command << ": " << e.what() << '\n';
    return p2lab::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "p2lab " << command << ": " << e.what() << '\n';
    return p2lab::kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear Steklov eigenvalue lab for the p-Laplacian plus Laplacian"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  const std::pair<const char*, const char*> commands[] = {
      {"nu1", "threshold eigenvalue, minimizer and scaling table"},
      {"solve", "one eigenpair at the configured lambda"},
      {"scan", "classify every lambda on the configured grid"},
      {"verify", "run every invariant check on the configured problem"},
      {"meshgen", "write the configured mesh in the text mesh format"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_path, "report path (overrides the config 'output' key)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : p2lab::kExitConfig;
  }
  return run(app.get_subcommands().front()->get_name(), config_path, out_path);
}
