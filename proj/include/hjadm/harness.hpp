#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hjadm/config.hpp"

namespace hjadm::cli {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Subcommand { Series, CriticalTime, Characteristics, FdSolve, Compare, Radius };

/// Throws ConfigError for an unknown name.
Subcommand parse_subcommand(std::string_view name);
std::string_view subcommand_name(Subcommand sub);
const std::vector<std::string_view>& subcommand_names();

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;

struct OutputFile {
    /// Relative to the output directory.
    std::string path;
    std::vector<std::string> columns;
    /// Data rows, header excluded.
    std::size_t rows = 0;
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct ErrorRecord {
    /// "config", "numerical", "domain", "cfl", "node_cap" or "internal".
    std::string kind;
    std::string message;
    int exit_code = 0;
};

struct RunManifest {
    std::string subcommand;
    std::string version{kVersion};
    RunConfig config;
    std::vector<StageTiming> timings;
    std::vector<OutputFile> outputs;
    /// Headline numbers of the stage (T*, first crossing, ...), already JSON text.
    std::string summary_json = "{}";
    std::optional<ErrorRecord> error;

    int exit_code() const noexcept { return error ? error->exit_code : kExitOk; }
};

/// Classifies an in-flight exception. Rethrows nothing.
ErrorRecord classify(const std::exception& e);

/// Runs one stage, writes its outputs and `manifest.json` into
/// cfg.outputs.directory. Stage failures are recorded in the manifest rather
/// than thrown; only an unwritable output directory escapes as an exception.
RunManifest run(Subcommand sub, const RunConfig& cfg);

/// Serialized manifest (what lands in manifest.json).
std::string manifest_json(const RunManifest& m);

/// Routes logging to stderr at the level named by HJADM_LOG (quiet, info,
/// debug; info when unset). Safe to call more than once.
void init_logging();

/// Entry point of the `hjadm` executable.
int main(int argc, char** argv);

}  // namespace hjadm::cli
