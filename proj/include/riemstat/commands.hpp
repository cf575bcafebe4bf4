#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

// Subcommands of the `riemstat` executable, callable without a process.
namespace riemstat::app {

struct GlobalOptions {
  std::uint64_t seed = 1;
  double tol = 1e-6;                 // fixed-point loops
  std::optional<int> max_iter;       // overrides every iteration cap
  std::filesystem::path out_dir = ".";
  bool plot = false;
};

struct CommandResult {
  std::vector<std::filesystem::path> files;  // data and model outputs
  std::string summary;                       // one line for stdout
};

CommandResult cmd_mean(const std::filesystem::path& dataset, const GlobalOptions& opt);
CommandResult cmd_gmm(const std::filesystem::path& dataset, int k, const GlobalOptions& opt,
                      std::optional<double> tol_ll = std::nullopt);
CommandResult cmd_gmr(const std::filesystem::path& model, const std::vector<std::size_t>& input_parts,
                      const std::filesystem::path& queries, const GlobalOptions& opt);
CommandResult cmd_fuse(const std::vector<std::filesystem::path>& models, const GlobalOptions& opt);
CommandResult cmd_mpc(const std::filesystem::path& scenario, const GlobalOptions& opt);
// name is one of fig1, fig4, fig5, fig6; throws ConfigError otherwise.
CommandResult cmd_demo(const std::string& name, const GlobalOptions& opt);

// 0 ok, 2 numerical failure, 3 input error, 4 config error.
int exit_code(const std::exception& e);

// Reads RIEMSTAT_LOG (trace, debug, info, warn, error, off); default warn.
void init_logging();

}  // namespace riemstat::app
