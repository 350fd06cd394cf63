#include "birkhoff/cli.hpp"

#include "birkhoff/alignment.hpp"
#include "birkhoff/errors.hpp"
#include "birkhoff/features.hpp"
#include "birkhoff/midi.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace birkhoff {

namespace {

using nlohmann::json;

std::string format_double(double v, const char* spec = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

json features_to_json(const BasicFeatures& f) {
    json j;
    for (const char* name : BasicFeatures::names) j[name] = f.get(name);
    json flags;
    for (const char* name : BasicFeatures::names) flags[name] = f.flag(name);
    j["flags"] = flags;
    return j;
}

json alignment_to_json(const AlignmentResult& alignment) {
    json matches = json::array();
    for (const auto& [si, pj] : alignment.matches) matches.push_back({si, pj});
    return json{{"matches", matches},
                {"missing_score", alignment.missing_score},
                {"extra_perf", alignment.extra_perf},
                {"total_cost", alignment.total_cost}};
}

json confusion_to_json(const ConfusionMatrix& cm) {
    json rows = json::array();
    for (const auto& row : cm.counts) rows.push_back(row);
    return rows;
}

json means_to_json(const FeatureMeansTable& table) {
    json by_class;
    for (std::size_t row = 0; row < 3; ++row) {
        json cols;
        for (std::size_t k = 0; k < FeatureMeansTable::columns.size(); ++k)
            cols[FeatureMeansTable::columns[k]] = table.means[row][k];
        by_class[kClassNames[row]] = cols;
    }
    json orientation;
    for (std::size_t k = 0; k < FeatureMeansTable::columns.size(); ++k)
        orientation[FeatureMeansTable::columns[k]] =
            FeatureMeansTable::higher_is_better[k] ? "up" : "down";
    return json{{"by_class", by_class}, {"orientation", orientation}};
}

void emit(const std::filesystem::path& out_path, const std::string& content,
          std::ostream& fallback) {
    if (out_path.empty())
        fallback << content;
    else
        write_file_atomic(out_path, content);
}

std::string means_table_text(const FeatureMeansTable& table) {
    std::ostringstream os;
    os << "class ";
    for (std::size_t k = 0; k < FeatureMeansTable::columns.size(); ++k) {
        char cell[32];
        std::snprintf(cell, sizeof cell, "%9s%s", FeatureMeansTable::columns[k],
                      FeatureMeansTable::higher_is_better[k] ? "+" : "-");
        os << cell;
    }
    os << "\n";
    for (std::size_t row = 0; row < 3; ++row) {
        char head[16];
        std::snprintf(head, sizeof head, "%-6s", kClassNames[row]);
        os << head;
        for (double v : table.means[row]) {
            char cell[32];
            std::snprintf(cell, sizeof cell, "%10.4f", v);
            os << cell;
        }
        os << "\n";
    }
    return os.str();
}

struct ExtractedPair {
    NoteSequence score;
    NoteSequence perf;
    AlignmentResult alignment;
    BasicFeatures features;
};

ExtractedPair extract_pair(const std::filesystem::path& score_path,
                           const std::filesystem::path& perf_path) {
    ExtractedPair pair;
    pair.score = load_midi_file(score_path);
    pair.perf = load_midi_file(perf_path);
    pair.alignment = align(pair.score, pair.perf);
    pair.features = extract_all(pair.score, pair.perf, pair.alignment);
    return pair;
}

void require_min_pieces_per_class(const std::vector<CorpusEntry>& entries, int minimum) {
    std::array<std::set<std::string>, 3> pieces;
    for (const CorpusEntry& e : entries)
        pieces[static_cast<std::size_t>(e.label)].insert(e.piece_id);
    for (std::size_t k = 0; k < 3; ++k) {
        if (pieces[k].empty())
            throw Error::data("MissingClass", "no samples labeled '" +
                                                  std::string(kClassNames[k]) + "'");
        if (static_cast<int>(pieces[k].size()) < minimum)
            throw Error::data("TooFewPieces",
                              "need at least " + std::to_string(minimum) +
                                  " pieces labeled '" + std::string(kClassNames[k]) + "'");
    }
}

} // namespace

OutputFormat output_format_from_string(std::string_view name) {
    if (name == "json") return OutputFormat::json;
    if (name == "text") return OutputFormat::text;
    if (name == "csv") return OutputFormat::csv;
    throw Error::usage("BadFormat", "unknown output format '" + std::string(name) + "'");
}

int resolve_workers(int flag_value) {
    if (const char* env = std::getenv("BIRKHOFF_PERF_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    if (flag_value > 0) return flag_value;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

std::vector<LabeledSample> extract_corpus(const std::vector<CorpusEntry>& entries,
                                          int workers) {
    const std::size_t n = entries.size();
    std::vector<LabeledSample> samples(n);

    // Scores shared by several renditions are parsed once.
    std::mutex cache_mutex;
    std::map<std::string, std::shared_ptr<const NoteSequence>> score_cache;
    const auto score_for = [&](const std::filesystem::path& path) {
        {
            std::lock_guard lock(cache_mutex);
            if (auto it = score_cache.find(path.string()); it != score_cache.end())
                return it->second;
        }
        auto parsed = std::make_shared<const NoteSequence>(load_midi_file(path));
        std::lock_guard lock(cache_mutex);
        return score_cache.try_emplace(path.string(), std::move(parsed)).first->second;
    };

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    const auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                const CorpusEntry& entry = entries[i];
                const auto score = score_for(entry.score_path);
                const NoteSequence perf = load_midi_file(entry.perf_path);
                const AlignmentResult alignment = align(*score, perf);
                samples[i] = {entry.piece_id, entry.label,
                              extract_all(*score, perf, alignment)};
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const int thread_count = std::max(1, std::min<int>(resolve_workers(workers),
                                                       static_cast<int>(n)));
    if (thread_count <= 1 || n <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(thread_count));
        for (int t = 0; t < thread_count; ++t) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return samples;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error::data("IoError", "cannot open " + tmp.string());
        out << content;
        if (!out) throw Error::data("IoError", "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error::data("IoError", "cannot rename " + tmp.string() + ": " + ec.message());
}

int cmd_extract(const ExtractOptions& options, std::ostream& out, std::ostream& log) {
    (void)log;
    const ExtractedPair pair = extract_pair(options.score, options.perf);
    emit(options.out, features_to_json(pair.features).dump(2) + "\n", out);
    return 0;
}

int cmd_align(const AlignOptions& options, std::ostream& out, std::ostream& log) {
    (void)log;
    const NoteSequence score = load_midi_file(options.score);
    const NoteSequence perf = load_midi_file(options.perf);
    emit(options.out, alignment_to_json(align(score, perf)).dump(2) + "\n", out);
    return 0;
}

int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& log) {
    const std::filesystem::path manifest = generate_synthetic(options.config, options.out_dir);
    log << "wrote " << 3 * options.config.n_pieces << " renditions for "
        << options.config.n_pieces << " pieces\n";
    out << manifest.string() << "\n";
    return 0;
}

int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& log) {
    const std::vector<CorpusEntry> entries = load_manifest(options.manifest);
    if (entries.empty()) throw Error::data("MissingClass", "manifest has no entries");
    require_min_pieces_per_class(entries, 2);

    const std::vector<LabeledSample> samples = extract_corpus(entries, options.workers);
    log << "extracted features for " << samples.size() << " performances\n";

    TrainConfig config;
    config.learning_rate = options.learning_rate;
    config.iterations = options.iterations;
    config.seed = options.seed;
    std::vector<double> history;
    const TrainedModel model = train_model(samples, config, &history);

    log << "measure training loss: initial " << format_double(history.front()) << "\n";
    for (std::size_t i = 100; i + 1 < history.size(); i += 100)
        log << "  iter " << i << ": " << format_double(history[i]) << "\n";
    log << "  final: " << format_double(history.back()) << "\n";

    write_file_atomic(options.out_model, model_to_json(model));
    out << options.out_model.string() << "\n";
    return 0;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error::data("IoError", "cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace

int cmd_score(const ScoreOptions& options, std::ostream& out, std::ostream& log) {
    (void)log;
    const TrainedModel model = model_from_json(read_file(options.model));
    const ExtractedPair pair = extract_pair(options.score, options.perf);
    const AestheticFeatures aesthetics = aesthetic_features(pair.features, model.regressors);
    const Prediction prediction = predict(pair.features, model);

    json report;
    report["basic_features"] = features_to_json(pair.features);
    report["aesthetic_features"] = {{"h", aesthetics.h},
                                    {"s", aesthetics.s},
                                    {"c", aesthetics.c},
                                    {"r", aesthetics.r}};
    report["measure"] = prediction.measure;
    report["class_probabilities"] = prediction.probabilities;
    report["predicted_class"] =
        model.class_names[static_cast<std::size_t>(prediction.predicted_class)];
    report["alignment_stats"] = {
        {"matches", pair.alignment.matches.size()},
        {"missing_score", pair.alignment.missing_score.size()},
        {"extra_perf", pair.alignment.extra_perf.size()},
        {"total_cost", pair.alignment.total_cost}};
    emit(options.out, report.dump(2) + "\n", out);
    return 0;
}

namespace {

std::vector<ClassifiedFeatures> classify_all(const std::vector<LabeledSample>& samples,
                                             const TrainedModel& model) {
    std::vector<ClassifiedFeatures> rows;
    rows.reserve(samples.size());
    for (const LabeledSample& s : samples)
        rows.push_back({s.label, s.features, aesthetic_features(s.features, model.regressors)});
    return rows;
}

std::string distributions_csv(const std::vector<LabeledSample>& samples,
                              const TrainedModel& model) {
    std::ostringstream csv;
    csv << "sample_id,class";
    for (const char* name : BasicFeatures::names) csv << "," << name;
    csv << ",h,s,c,r,m\n";
    for (const LabeledSample& s : samples) {
        const AestheticFeatures a = aesthetic_features(s.features, model.regressors);
        csv << s.piece_id << ":" << to_string(s.label) << "," << to_string(s.label);
        for (const char* name : BasicFeatures::names)
            csv << "," << format_double(s.features.get(name), "%.10g");
        csv << "," << format_double(a.h, "%.10g") << "," << format_double(a.s, "%.10g")
            << "," << format_double(a.c, "%.10g") << "," << format_double(a.r, "%.10g")
            << "," << format_double(aesthetic_measure(a, model.measure), "%.10g") << "\n";
    }
    return csv.str();
}

} // namespace

int cmd_evaluate(const EvaluateOptions& options, std::ostream& out, std::ostream& log) {
    const std::vector<CorpusEntry> entries = load_manifest(options.manifest);
    if (entries.empty()) throw Error::data("MissingClass", "manifest has no entries");
    const std::vector<LabeledSample> samples = extract_corpus(entries, options.workers);
    const auto [train, test] = split_samples(samples, options.ratio, options.seed);
    log << "split: " << train.size() << " train / " << test.size() << " test samples\n";

    TrainConfig config;
    config.learning_rate = options.learning_rate;
    config.iterations = options.iterations;
    config.seed = options.seed;
    const EvaluatedModel result = train_and_evaluate(train, test, config);
    const FeatureMeansTable means = feature_means(classify_all(samples, result.model));

    if (!options.dump_distributions.empty())
        write_file_atomic(options.dump_distributions,
                          distributions_csv(samples, result.model));

    if (options.format == OutputFormat::text) {
        std::ostringstream text;
        text << "accuracy: " << format_double(result.accuracy, "%.4f")
             << "  kappa: " << format_double(result.kappa, "%.4f") << "\n";
        text << "confusion (rows true, cols predicted):\n";
        for (std::size_t r = 0; r < 3; ++r) {
            char head[16];
            std::snprintf(head, sizeof head, "%-6s", kClassNames[r]);
            text << head;
            for (std::int64_t c : result.confusion.counts[r]) {
                char cell[24];
                std::snprintf(cell, sizeof cell, "%8lld", static_cast<long long>(c));
                text << cell;
            }
            text << "\n";
        }
        text << "feature means:\n" << means_table_text(means);
        emit(options.out, text.str(), out);
    } else {
        json report;
        report["accuracy"] = result.accuracy;
        report["kappa"] = result.kappa;
        report["confusion"] = confusion_to_json(result.confusion);
        report["n_train"] = train.size();
        report["n_test"] = test.size();
        report["feature_means"] = means_to_json(means);
        emit(options.out, report.dump(2) + "\n", out);
    }
    return 0;
}

int cmd_ablate(const AblateOptions& options, std::ostream& out, std::ostream& log) {
    const std::vector<CorpusEntry> entries = load_manifest(options.manifest);
    if (entries.empty()) throw Error::data("MissingClass", "manifest has no entries");
    const std::vector<LabeledSample> samples = extract_corpus(entries, options.workers);

    EvalConfig config;
    config.ratio = options.ratio;
    config.seed = options.seed;
    config.learning_rate = options.learning_rate;
    config.iterations = options.iterations;
    const AblationReport report = run_ablation(samples, config);
    log << "trained 5 variants\n";

    if (options.format == OutputFormat::text) {
        std::ostringstream text;
        text << "variant              accuracy    kappa\n";
        for (std::size_t v = 0; v < 5; ++v) {
            char line[80];
            std::snprintf(line, sizeof line, "%-20s %8.4f %8.4f\n",
                          kAblationVariantNames[v], report.variants[v].accuracy,
                          report.variants[v].kappa);
            text << line;
        }
        emit(options.out, text.str(), out);
    } else {
        json j;
        for (std::size_t v = 0; v < 5; ++v)
            j["variants"][kAblationVariantNames[v]] = {
                {"accuracy", report.variants[v].accuracy},
                {"kappa", report.variants[v].kappa},
                {"confusion", confusion_to_json(report.variants[v].confusion)}};
        emit(options.out, j.dump(2) + "\n", out);
    }
    return 0;
}

} // namespace birkhoff
