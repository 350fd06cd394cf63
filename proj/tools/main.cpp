#include "birkhoff/cli.hpp"
#include "birkhoff/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

namespace {

using namespace birkhoff;

int dispatch(CLI::App& app, const std::string& format_name, ExtractOptions& extract_opts,
             AlignOptions& align_opts, SynthOptions& synth_opts, TrainOptions& train_opts,
             ScoreOptions& score_opts, EvaluateOptions& eval_opts, AblateOptions& ablate_opts) {
    if (app.got_subcommand("extract")) return cmd_extract(extract_opts, std::cout, std::cerr);
    if (app.got_subcommand("align")) return cmd_align(align_opts, std::cout, std::cerr);
    if (app.got_subcommand("synth")) return cmd_synth(synth_opts, std::cout, std::cerr);
    if (app.got_subcommand("train")) return cmd_train(train_opts, std::cout, std::cerr);
    if (app.got_subcommand("score")) return cmd_score(score_opts, std::cout, std::cerr);
    if (app.got_subcommand("evaluate")) {
        eval_opts.format = output_format_from_string(format_name);
        return cmd_evaluate(eval_opts, std::cout, std::cerr);
    }
    if (app.got_subcommand("ablate")) {
        ablate_opts.format = output_format_from_string(format_name);
        return cmd_ablate(ablate_opts, std::cout, std::cerr);
    }
    std::cerr << app.help() << "\n";
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Aesthetic-quality assessment of homophonic music performances"};
    app.require_subcommand(0, 1);

    ExtractOptions extract_opts;
    AlignOptions align_opts;
    SynthOptions synth_opts;
    TrainOptions train_opts;
    ScoreOptions score_opts;
    EvaluateOptions eval_opts;
    AblateOptions ablate_opts;
    std::string format_name = "json";

    auto* extract = app.add_subcommand("extract", "Compute the 10 basic features of a pair");
    extract->add_option("--score", extract_opts.score, "score MIDI file")->required();
    extract->add_option("--perf", extract_opts.perf, "performance MIDI file")->required();
    extract->add_option("--out", extract_opts.out, "output file (default stdout)");

    auto* align_cmd = app.add_subcommand("align", "Align a performance to its score");
    align_cmd->add_option("--score", align_opts.score, "score MIDI file")->required();
    align_cmd->add_option("--perf", align_opts.perf, "performance MIDI file")->required();
    align_cmd->add_option("--out", align_opts.out, "output file (default stdout)");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic three-class corpus");
    synth->add_option("--out", synth_opts.out_dir, "output directory")->required();
    synth->add_option("--seed", synth_opts.config.seed, "RNG seed");
    synth->add_option("--pieces", synth_opts.config.n_pieces, "number of pieces")
        ->check(CLI::PositiveNumber);
    synth->add_option("--bars", synth_opts.config.bars_per_piece, "bars per piece")
        ->check(CLI::Range(4, 1 << 20));

    auto* train = app.add_subcommand("train", "Train a model from a corpus manifest");
    train->add_option("--manifest", train_opts.manifest, "corpus manifest")->required();
    train->add_option("--out", train_opts.out_model, "model output file")->required();
    train->add_option("--lr", train_opts.learning_rate, "learning rate")
        ->check(CLI::PositiveNumber);
    train->add_option("--iterations", train_opts.iterations, "gradient-descent iterations")
        ->check(CLI::PositiveNumber);
    train->add_option("--seed", train_opts.seed, "seed recorded in training metadata");
    train->add_option("--workers", train_opts.workers, "extraction worker threads (0 = cores)");

    auto* score_cmd = app.add_subcommand("score", "Score one performance with a trained model");
    score_cmd->add_option("--model", score_opts.model, "model file")->required();
    score_cmd->add_option("--score", score_opts.score, "score MIDI file")->required();
    score_cmd->add_option("--perf", score_opts.perf, "performance MIDI file")->required();
    score_cmd->add_option("--out", score_opts.out, "output file (default stdout)");

    auto* evaluate = app.add_subcommand("evaluate", "Train/test split evaluation");
    evaluate->add_option("--manifest", eval_opts.manifest, "corpus manifest")->required();
    evaluate->add_option("--ratio", eval_opts.ratio, "train fraction")
        ->check(CLI::Range(1e-9, 1.0 - 1e-9));
    evaluate->add_option("--seed", eval_opts.seed, "split + training seed");
    evaluate->add_option("--lr", eval_opts.learning_rate, "learning rate")
        ->check(CLI::PositiveNumber);
    evaluate->add_option("--iterations", eval_opts.iterations, "training iterations")
        ->check(CLI::PositiveNumber);
    evaluate->add_option("--workers", eval_opts.workers, "extraction worker threads");
    evaluate->add_option("--format", format_name, "json or text")
        ->check(CLI::IsMember({"json", "text"}));
    evaluate->add_option("--out", eval_opts.out, "output file (default stdout)");
    evaluate->add_option("--dump-distributions", eval_opts.dump_distributions,
                         "write per-sample feature CSV to this path");

    auto* ablate = app.add_subcommand("ablate", "Five-way ablation study");
    ablate->add_option("--manifest", ablate_opts.manifest, "corpus manifest")->required();
    ablate->add_option("--ratio", ablate_opts.ratio, "train fraction")
        ->check(CLI::Range(1e-9, 1.0 - 1e-9));
    ablate->add_option("--seed", ablate_opts.seed, "split + training seed");
    ablate->add_option("--lr", ablate_opts.learning_rate, "learning rate")
        ->check(CLI::PositiveNumber);
    ablate->add_option("--iterations", ablate_opts.iterations, "training iterations")
        ->check(CLI::PositiveNumber);
    ablate->add_option("--workers", ablate_opts.workers, "extraction worker threads");
    ablate->add_option("--format", format_name, "json or text")
        ->check(CLI::IsMember({"json", "text"}));
    ablate->add_option("--out", ablate_opts.out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints usage, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        return dispatch(app, format_name, extract_opts, align_opts, synth_opts, train_opts,
                        score_opts, eval_opts, ablate_opts);
    } catch (const birkhoff::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
