#include "seqclf/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "seqclf/api_learner.hpp"
#include "seqclf/baselines.hpp"
#include "seqclf/data_io.hpp"
#include "seqclf/eval.hpp"
#include "seqclf/model_io.hpp"

namespace seqclf {

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_argument:
        return kUsage;
    case ErrorKind::numerical_failure:
        return kNumerical;
    default:
        return kData;
    }
}

struct RolloutOptions {
    double lambda = 0.01;
    bool constrained = false;
    bool no_intercept = false;
    std::size_t iterations = 10;
    std::size_t rollout_states = 2000;
    double alpha = 0.9;
    std::size_t rollouts = 1;
    std::size_t threads = 0;
    std::string diagnostics;

    api::RolloutConfig config(std::uint64_t seed) const {
        api::RolloutConfig c;
        c.iterations = iterations;
        c.num_states = rollout_states;
        c.alpha = alpha;
        c.rollouts_per_action = rollouts;
        c.threads = threads;
        c.seed = seed;
        return c;
    }

    dwsc::Featurization featurization() const {
        return constrained ? dwsc::Featurization::constrained : dwsc::Featurization::unconstrained;
    }

    nlohmann::json to_json(std::uint64_t seed) const {
        const auto c = config(seed);
        return {{"lambda", lambda},
                {"featurization", constrained ? "constrained" : "unconstrained"},
                {"intercept", !no_intercept},
                {"iterations", c.iterations},
                {"rollout_states", c.num_states},
                {"alpha", c.alpha},
                {"rollouts_per_action", c.rollouts_per_action},
                {"ridge", c.ridge},
                {"zero_mask_fraction", c.zero_mask_fraction},
                {"seed", seed}};
    }
};

struct SplitOptions {
    std::string data;
    double train_fraction = 0.5;
    std::uint64_t seed = 1;
};

void add_split_options(CLI::App* cmd, SplitOptions& o, const char* data_help) {
    cmd->add_option("--data", o.data, data_help)->required();
    cmd->add_option("--train-fraction", o.train_fraction, "share of rows used for training")
        ->capture_default_str();
    cmd->add_option("--seed", o.seed, "seed for the split and for training")->capture_default_str();
}

void add_rollout_options(CLI::App* cmd, RolloutOptions& o, bool with_lambda, bool with_featurization) {
    if (with_lambda)
        cmd->add_option("--lambda", o.lambda, "cost of acquiring one feature")->capture_default_str();
    if (with_featurization)
        cmd->add_flag("--constrained", o.constrained, "use the constrained (global order) featurization");
    cmd->add_flag("--no-intercept", o.no_intercept, "drop the per-action constant term");
    cmd->add_option("--iterations", o.iterations, "policy iterations")->capture_default_str();
    cmd->add_option("--rollout-states", o.rollout_states, "states sampled per iteration")->capture_default_str();
    cmd->add_option("--alpha", o.alpha, "weight of the newest policy in rollouts")->capture_default_str();
    cmd->add_option("--rollouts", o.rollouts, "rollouts per state-action pair")->capture_default_str();
    cmd->add_option("--threads", o.threads, "worker threads, 0 = all cores")->capture_default_str();
    cmd->add_option("--diagnostics", o.diagnostics, "write per-iteration JSON lines here");
}

struct Prepared {
    data::Split split;
    data::MinMaxScaler scaler;
};

Prepared prepare_tabular(const SplitOptions& o) {
    const auto dataset = data::parse_sparse_rows(std::filesystem::path(o.data));
    Prepared p{data::split(dataset, o.train_fraction, o.seed), {}};
    p.scaler = data::normalize_features(p.split.train);
    p.scaler.apply(p.split.test);
    return p;
}

void write_text(const std::string& path, const std::string& contents, std::ostream& fallback) {
    if (path.empty() || path == "-")
        fallback << contents;
    else
        model_io::write_file_atomic(path, contents);
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string s;
    for (const auto& l : lines)
        s += l + "\n";
    return s;
}

std::string diagnostics_text(const std::vector<api::IterationDiagnostics>& diagnostics) {
    std::vector<std::string> lines;
    for (const auto& d : diagnostics)
        lines.push_back(d.to_json());
    return join_lines(lines);
}

std::string dwsc_traces(const std::vector<dwsc::ClassifyResult>& traces, const data::TabularDataset& test,
                        const std::vector<std::size_t>& rows) {
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        nlohmann::json j{{"row", rows.empty() ? i : rows[i]},
                         {"label", test.label(i)},
                         {"predicted", traces[i].label},
                         {"features", traces[i].features}};
        lines.push_back(j.dump());
    }
    return join_lines(lines);
}

std::string text_traces(const std::vector<text::DocumentResult>& traces, const data::Corpus& test) {
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        std::vector<std::string> actions;
        for (const auto& a : traces[i].trace) {
            switch (a.kind) {
            case text::TextAction::Kind::classify:
                actions.push_back("classify:" + test.categories[a.category]);
                break;
            case text::TextAction::Kind::next:
                actions.push_back("next");
                break;
            case text::TextAction::Kind::stop:
                actions.push_back("stop");
                break;
            }
        }
        std::vector<int> y_hat(traces[i].y_hat.begin(), traces[i].y_hat.end());
        nlohmann::json j{{"doc", test.docs[i].doc.id},
                         {"y_hat", y_hat},
                         {"sentences_read", traces[i].sentences_read},
                         {"actions", actions}};
        lines.push_back(j.dump());
    }
    return join_lines(lines);
}

int run_train(const SplitOptions& so, const RolloutOptions& ro, const std::string& model_out, std::ostream& out) {
    auto prepared = prepare_tabular(so);
    const auto& train = prepared.split.train;
    auto result = api::train_dwsc(train, ro.config(so.seed), ro.featurization(), {ro.lambda}, !ro.no_intercept);
    const dwsc::DwscLayout layout(train.n(), train.num_classes(), ro.featurization(), !ro.no_intercept);
    const auto report = eval::evaluate(result.policy, layout, prepared.split.test);

    if (!model_out.empty()) {
        nlohmann::json config = ro.to_json(so.seed);
        config["command"] = "train";
        config["data"] = so.data;
        config["train_fraction"] = so.train_fraction;
        model_io::save_model(model_out,
                             model_io::ModelFile::from_dwsc(result.policy, layout, prepared.scaler,
                                                            train.label_names()),
                             config.dump(2));
    }
    if (!ro.diagnostics.empty())
        write_text(ro.diagnostics, diagnostics_text(result.diagnostics), out);
    out << report.to_json() << "\n";
    return kOk;
}

int run_eval(const SplitOptions& so, const std::string& model_path, bool all, const std::string& traces_out,
             std::ostream& out) {
    const auto model = model_io::load_model(model_path);
    if (model.is_text())
        raise(ErrorKind::invalid_argument, "eval: " + model_path + " holds a text model; use text-eval");
    const auto dataset = data::parse_sparse_rows(std::filesystem::path(so.data));
    if (dataset.n() > model.n)
        raise(ErrorKind::dimension, "eval: data has " + std::to_string(dataset.n()) +
                                        " features, model expects " + std::to_string(model.n));
    // Trailing all-zero columns are not visible in the sparse format; pad them back.
    data::TabularDataset padded = dataset;
    if (dataset.n() < model.n) {
        std::vector<double> values(dataset.rows() * model.n, 0.0);
        for (std::size_t i = 0; i < dataset.rows(); ++i)
            std::copy(dataset.row(i).begin(), dataset.row(i).end(), values.begin() + i * model.n);
        padded = data::TabularDataset(model.n, std::move(values), dataset.labels(), dataset.label_names());
    }

    data::TabularDataset test;
    std::vector<std::size_t> rows;
    if (all) {
        test = padded;
    } else {
        auto s = data::split(padded, so.train_fraction, so.seed);
        test = std::move(s.test);
        rows = std::move(s.test_rows);
    }
    if (model.scaler)
        model.scaler->apply(test);
    if (test.num_classes() > model.c)
        raise(ErrorKind::dimension, "eval: data has more labels than the model");

    std::vector<dwsc::ClassifyResult> traces;
    const auto report = eval::evaluate(model.policy, model.dwsc_layout(), test, &traces);
    if (!traces_out.empty())
        write_text(traces_out, dwsc_traces(traces, test, rows), out);
    out << report.to_json() << "\n";
    return kOk;
}

int run_sweep(const SplitOptions& so, const RolloutOptions& ro, const std::vector<double>& grid,
              const std::string& csv_out, const std::string& reports_out, std::ostream& out) {
    auto prepared = prepare_tabular(so);
    auto sweep = eval::sweep_lambda(prepared.split.train, prepared.split.test, grid, ro.config(so.seed),
                                    ro.featurization(), !ro.no_intercept);
    std::ostringstream csv;
    eval::write_curve_csv(csv, sweep.curve);
    write_text(csv_out, csv.str(), out);
    if (!reports_out.empty()) {
        std::vector<std::string> lines;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            auto j = nlohmann::json::parse(sweep.reports[k].to_json());
            j["lambda"] = grid[k];
            lines.push_back(j.dump());
        }
        write_text(reports_out, join_lines(lines), out);
    }
    return kOk;
}

int run_baseline(const SplitOptions& so, const std::vector<double>& grid, std::size_t max_iters,
                 const std::string& csv_out, std::ostream& out) {
    auto prepared = prepare_tabular(so);
    auto sweep = eval::sweep_l1(prepared.split.train, prepared.split.test, grid, max_iters);
    const auto majority = baselines::majority_baseline(prepared.split.train);
    const auto floor = eval::evaluate(majority, prepared.split.test);
    std::ostringstream csv;
    csv << "# majority baseline accuracy=" << floor.accuracy << "\n";
    eval::write_curve_csv(csv, sweep.curve);
    write_text(csv_out, csv.str(), out);
    return kOk;
}

struct ReportOptions {
    std::vector<double> fractions = eval::kReportFractions;
    std::vector<double> targets = eval::kReportTargets;
    std::vector<double> lambda_grid{0.0, 0.001, 0.01, 0.05, 0.1, 0.2};
    std::vector<double> l1_grid{0.001, 0.003, 0.01, 0.03, 0.1};
    std::size_t repeats = 3;
};

int run_report(const SplitOptions& so, const RolloutOptions& ro, const ReportOptions& rep, const std::string& path,
               std::ostream& out) {
    const auto dataset = data::parse_sparse_rows(std::filesystem::path(so.data));
    eval::ReportConfig config;
    config.train_fractions = rep.fractions;
    config.targets = rep.targets;
    config.lambda_grid = rep.lambda_grid;
    config.l1_grid = rep.l1_grid;
    config.repeats = rep.repeats;
    config.rollout = ro.config(so.seed);
    const auto report = eval::run_report(dataset, config);
    std::ostringstream table;
    eval::write_report(table, report);
    write_text(path, table.str(), out);
    return kOk;
}

struct TextPrepared {
    data::Corpus corpus;
    data::Corpus train;
    data::Corpus test;
};

TextPrepared prepare_text(const data::Corpus& corpus, const SplitOptions& so, bool all) {
    TextPrepared p{corpus, {}, {}};
    if (all) {
        p.test = corpus;
        return p;
    }
    std::size_t k = 0;
    const auto order = data::split_order(corpus.docs.size(), so.train_fraction, so.seed, &k);
    const std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    const std::vector<std::size_t> test_idx(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
    p.train = corpus.subset(train_idx);
    p.test = corpus.subset(test_idx);
    return p;
}

int run_text_train(const SplitOptions& so, const RolloutOptions& ro, const std::string& mode_name,
                   const std::string& model_out, std::ostream& out) {
    const auto mode = text::parse_label_mode(mode_name);
    auto prepared = prepare_text(data::tfidf_vectorize(so.data), so, false);
    auto result = api::train_text(prepared.train, ro.config(so.seed), mode, !ro.no_intercept);
    const text::TextLayout layout(prepared.corpus.vocabulary.size(), prepared.corpus.num_classes(),
                                  !ro.no_intercept);
    const auto report = eval::evaluate_text(result.policy, layout, prepared.test, mode);
    if (!model_out.empty()) {
        nlohmann::json config = ro.to_json(so.seed);
        config.erase("lambda");
        config.erase("featurization");
        config["command"] = "text-train";
        config["mode"] = text::to_string(mode);
        config["data"] = so.data;
        config["train_fraction"] = so.train_fraction;
        model_io::save_model(model_out,
                             model_io::ModelFile::from_text(result.policy, layout, mode, prepared.corpus.vocabulary,
                                                            prepared.corpus.categories),
                             config.dump(2));
    }
    if (!ro.diagnostics.empty())
        write_text(ro.diagnostics, diagnostics_text(result.diagnostics), out);
    out << report.to_json() << "\n";
    return kOk;
}

int run_text_eval(const SplitOptions& so, const std::string& model_path, bool all, const std::string& traces_out,
                  std::ostream& out) {
    const auto model = model_io::load_model(model_path);
    if (!model.is_text())
        raise(ErrorKind::invalid_argument, "text-eval: " + model_path + " holds a tabular model; use eval");
    auto prepared = prepare_text(data::tfidf_transform(so.data, *model.vocabulary, model.label_names), so, all);
    std::vector<text::DocumentResult> traces;
    const auto report = eval::evaluate_text(model.policy, model.text_layout(), prepared.test, model.mode, &traces);
    if (!traces_out.empty())
        write_text(traces_out, text_traces(traces, prepared.test), out);
    out << report.to_json() << "\n";
    return kOk;
}

} // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Datum-wise sparse classification and sequential text reading"};
    app.name("seqclf");
    app.require_subcommand(1);

    SplitOptions so;
    RolloutOptions ro;
    std::string model_out, model_in, traces_out, csv_out, reports_out, mode = "mono";
    bool all = false;
    std::vector<double> lambda_grid{0.001, 0.01, 0.1};
    std::vector<double> l1_grid{0.001, 0.003, 0.01, 0.03, 0.1};
    std::size_t max_iters = 5000;
    ReportOptions rep;

    auto* train = app.add_subcommand("train", "train a feature-acquisition policy on a sparse-row dataset");
    add_split_options(train, so, "dataset in `<label> <idx>:<val> ...` format");
    add_rollout_options(train, ro, true, true);
    train->add_option("--out", model_out, "model file to write");

    auto* evalc = app.add_subcommand("eval", "evaluate a saved model on the test split of a dataset");
    add_split_options(evalc, so, "dataset in `<label> <idx>:<val> ...` format");
    evalc->add_option("--model", model_in, "model file")->required();
    evalc->add_flag("--all", all, "evaluate every row instead of the test split");
    evalc->add_option("--traces", traces_out, "write one JSON line per evaluated row");

    auto* sweep = app.add_subcommand("sweep", "train one policy per lambda and write the sparsity/accuracy curve");
    add_split_options(sweep, so, "dataset in `<label> <idx>:<val> ...` format");
    add_rollout_options(sweep, ro, false, true);
    sweep->add_option("--lambda-grid", lambda_grid, "comma-separated lambda values")->delimiter(',');
    sweep->add_option("--out", csv_out, "curve CSV (default stdout)");
    sweep->add_option("--reports", reports_out, "write per-lambda reports as JSON lines");

    auto* text_train = app.add_subcommand("text-train", "train a sentence-reading policy on a corpus manifest");
    add_split_options(text_train, so, "manifest: `<doc-path>\\t<categories>` per line");
    add_rollout_options(text_train, ro, false, false);
    text_train->add_option("--mode", mode, "mono or multi")->check(CLI::IsMember({"mono", "multi"}));
    text_train->add_option("--out", model_out, "model file to write");

    auto* text_eval = app.add_subcommand("text-eval", "evaluate a saved text model on a corpus manifest");
    add_split_options(text_eval, so, "manifest: `<doc-path>\\t<categories>` per line");
    text_eval->add_option("--model", model_in, "model file")->required();
    text_eval->add_flag("--all", all, "evaluate every document instead of the test split");
    text_eval->add_option("--traces", traces_out, "write one JSON line per document");

    auto* baseline = app.add_subcommand("baseline", "L1-regularized logistic baseline over a strength grid");
    add_split_options(baseline, so, "dataset in `<label> <idx>:<val> ...` format");
    baseline->add_option("--l1-grid", l1_grid, "comma-separated l1 strengths")->delimiter(',');
    baseline->add_option("--max-iters", max_iters, "proximal gradient steps per class")->capture_default_str();
    baseline->add_option("--out", csv_out, "curve CSV (default stdout)");

    auto* report = app.add_subcommand("report", "accuracy at fixed sparsity over several train fractions");
    add_split_options(report, so, "dataset in `<label> <idx>:<val> ...` format");
    add_rollout_options(report, ro, false, false);
    report->add_option("--train-fractions", rep.fractions, "comma-separated train fractions")->delimiter(',');
    report->add_option("--targets", rep.targets, "comma-separated sparsity targets")->delimiter(',');
    report->add_option("--lambda-grid", rep.lambda_grid, "comma-separated lambda values")->delimiter(',');
    report->add_option("--l1-grid", rep.l1_grid, "comma-separated l1 strengths")->delimiter(',');
    report->add_option("--repeats", rep.repeats, "random splits per train fraction")->capture_default_str();
    report->add_option("--out", csv_out, "table CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help("", CLI::AppFormatMode::All);
        return kUsage;
    }

    try {
        if (*train)
            return run_train(so, ro, model_out, out);
        if (*evalc)
            return run_eval(so, model_in, all, traces_out, out);
        if (*sweep)
            return run_sweep(so, ro, lambda_grid, csv_out, reports_out, out);
        if (*text_train)
            return run_text_train(so, ro, mode, model_out, out);
        if (*text_eval)
            return run_text_eval(so, model_in, all, traces_out, out);
        if (*baseline)
            return run_baseline(so, l1_grid, max_iters, csv_out, out);
        if (*report)
            return run_report(so, ro, rep, csv_out, out);
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kData;
    }
    return kUsage;
}

int cli_main(int argc, const char* const* argv) { return cli_main(argc, argv, std::cout, std::cerr); }

} // namespace seqclf
