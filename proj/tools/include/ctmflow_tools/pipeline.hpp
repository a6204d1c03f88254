#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ctmflow/ctmflow.hpp"

namespace ctmflow::tools {

struct ExperimentConfig {
    std::string command;
    std::filesystem::path scenario;
    std::string cost = "ttt";      ///< ttt, ttd, delay, quad
    std::string model = "fifo";    ///< fifo, fifo-priority, nonfifo
    std::string kind = "fnc";      ///< dta, fnc
    double epsilon = 0.0;
    std::vector<double> deltas;    ///< sweep grid
    int jobs = 1;
    std::filesystem::path out = "out";
};

/// Exit codes of the command-line tool.
enum ExitCode { kOk = 0, kConfigError = 2, kSolverError = 3, kInvariantError = 4 };

/// "START:STEP:END" -> inclusive grid. ConfigError unless STEP > 0 and START <= END.
std::vector<double> parse_grid(const std::string& spec);

CostSpec parse_cost(const std::string& name);
JunctionModel parse_model(const std::string& name);
ProgramKind parse_kind(const std::string& name);

/// Artifacts written by a run, keyed by file name relative to the output directory.
class ArtifactSet {
public:
    explicit ArtifactSet(std::filesystem::path dir);

    void write(const std::string& name, const std::string& content);
    const std::filesystem::path& dir() const { return dir_; }
    const std::map<std::string, std::uint64_t>& hashes() const { return hashes_; }
    /// manifest.json: every artifact with its FNV-1a 64-bit content hash.
    void write_manifest();

private:
    std::filesystem::path dir_;
    std::map<std::string, std::uint64_t> hashes_;
};

struct ReproduceSummary {
    std::map<std::string, double> table;   ///< "FIFO,TTT" -> value
    double lambda_hat_fifo = 0.0;
    double lambda_hat_nonfifo = 0.0;
    std::vector<std::string> artifacts;
};

/// Runs one command and writes its artifacts plus manifest.json under config.out.
void run(const ExperimentConfig& config);

/// Tables, trajectories, robustness sweeps and the epsilon tradeoff for the bundled scenarios.
ReproduceSummary reproduce_paper(const std::filesystem::path& out, const std::filesystem::path& scenario_dir,
                                 int jobs = 1);

/// Maps an exception to an exit code and writes error.json into `out` (best effort).
int report_error(const std::exception& e, const std::string& stage, const std::filesystem::path& out);

/// Stage name attached to pipeline failures.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::exception& cause, int code);
    const std::string& stage() const { return stage_; }
    int code() const { return code_; }

private:
    std::string stage_;
    int code_;
};

int exit_code_for(const std::exception& e);

}  // namespace ctmflow::tools
