#ifndef BIRKHOFF_CLI_HPP
#define BIRKHOFF_CLI_HPP

#include "birkhoff/corpus.hpp"
#include "birkhoff/evaluation.hpp"
#include "birkhoff/model.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace birkhoff {

enum class OutputFormat { json, text, csv };

OutputFormat output_format_from_string(std::string_view name);

/// Worker-count policy: the BIRKHOFF_PERF_WORKERS environment variable
/// overrides the flag; 0 means the number of available cores.
int resolve_workers(int flag_value);

/// Parse, align and extract features for every manifest entry, data-parallel
/// over entries. Score files shared between entries are parsed once.
std::vector<LabeledSample> extract_corpus(const std::vector<CorpusEntry>& entries,
                                          int workers);

/// Write via a temp file plus atomic rename so consumers never observe a
/// partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

struct ExtractOptions {
    std::filesystem::path score;
    std::filesystem::path perf;
    std::filesystem::path out; // empty = stdout
};

struct AlignOptions {
    std::filesystem::path score;
    std::filesystem::path perf;
    std::filesystem::path out;
};

struct SynthOptions {
    std::filesystem::path out_dir;
    SynthConfig config;
};

struct TrainOptions {
    std::filesystem::path manifest;
    std::filesystem::path out_model;
    double learning_rate = 0.01;
    int iterations = 1000;
    std::uint64_t seed = 0;
    int workers = 0;
};

struct ScoreOptions {
    std::filesystem::path model;
    std::filesystem::path score;
    std::filesystem::path perf;
    std::filesystem::path out;
};

struct EvaluateOptions {
    std::filesystem::path manifest;
    double ratio = 0.8;
    std::uint64_t seed = 0;
    double learning_rate = 0.01;
    int iterations = 1000;
    int workers = 0;
    OutputFormat format = OutputFormat::json;
    std::filesystem::path out;
    std::filesystem::path dump_distributions; // empty = no CSV dump
};

struct AblateOptions {
    std::filesystem::path manifest;
    double ratio = 0.8;
    std::uint64_t seed = 0;
    double learning_rate = 0.01;
    int iterations = 1000;
    int workers = 0;
    OutputFormat format = OutputFormat::json;
    std::filesystem::path out;
};

// Each command writes its report to `out` (stdout when the options carry no
// output path) and progress/warnings to `log`. Errors surface as
// birkhoff::Error; main() maps categories onto exit codes.
int cmd_extract(const ExtractOptions& options, std::ostream& out, std::ostream& log);
int cmd_align(const AlignOptions& options, std::ostream& out, std::ostream& log);
int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& log);
int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& log);
int cmd_score(const ScoreOptions& options, std::ostream& out, std::ostream& log);
int cmd_evaluate(const EvaluateOptions& options, std::ostream& out, std::ostream& log);
int cmd_ablate(const AblateOptions& options, std::ostream& out, std::ostream& log);

} // namespace birkhoff

#endif
