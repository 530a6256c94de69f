#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>

#include <CLI11.hpp>

#include "icbpl/config.hpp"
#include "icbpl/error.hpp"
#include "icbpl/geometry.hpp"
#include "icbpl/io.hpp"
#include "icbpl/losses.hpp"
#include "icbpl/metrics.hpp"
#include "icbpl/neighbors.hpp"
#include "icbpl/trainer.hpp"

namespace icbpl::cli {

namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kSubcommands{"gen", "knn", "train", "assign", "eval", "eval-loss"};

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> row(b.size() + 1);
    std::iota(row.begin(), row.end(), std::size_t{0});
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diagonal = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t above = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diagonal + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diagonal = above;
        }
    }
    return row[b.size()];
}

std::string closest_subcommand(const std::string& name) {
    return *std::min_element(kSubcommands.begin(), kSubcommands.end(), [&](const auto& x, const auto& y) {
        return edit_distance(name, x) < edit_distance(name, y);
    });
}

Metric parse_metric(const std::string& name) { return name == "euclidean" ? Metric::kEuclidean : Metric::kCosine; }

void write_text(const fs::path& path, const std::string& text) {
    write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void write_centers_csv(const PedccSet& pedcc, const fs::path& path) {
    std::string text;
    char buffer[32];
    for (Index i = 0; i < pedcc.num_centers(); ++i) {
        for (Index j = 0; j < pedcc.dim(); ++j) {
            std::snprintf(buffer, sizeof buffer, "%.17g", pedcc.centers()(i, j));
            if (j) text += ',';
            text += buffer;
        }
        text += '\n';
    }
    write_text(path, text);
}

// Loads embeddings plus optional external views and labels.
EmbeddingDataset load_dataset(const std::string& embeddings, const std::string& views, const std::string& labels) {
    EmbeddingDataset dataset = read_embd(embeddings);
    if (!views.empty()) {
        EmbeddingDataset extra = read_embd(views);
        require(extra.size() == dataset.size() && extra.dim() == dataset.dim(), ErrorCode::kInvalidArgument,
                "views file " + views + " does not match the embeddings' N and d");
        dataset.views.push_back(std::move(extra.data));
        for (FloatMatrix& view : extra.views) dataset.views.push_back(std::move(view));
    }
    if (!labels.empty()) dataset.labels = read_labels(labels);
    dataset.validate();
    return dataset;
}

struct GenOptions {
    int clusters = 0;
    int dim = 0;
    std::optional<std::uint64_t> seed;
    std::string out, csv;
};

int run_gen(const GenOptions& o, std::ostream& out) {
    const PedccSet pedcc = generate_pedcc(o.clusters, o.dim, o.seed);
    EmbeddingDataset dataset;
    dataset.data = pedcc.centers().cast<float>();
    write_embd(dataset, o.out);
    if (!o.csv.empty()) write_centers_csv(pedcc, o.csv);
    out << "wrote " << pedcc.num_centers() << " centers of dimension " << pedcc.dim() << " to " << o.out << '\n';
    return kExitOk;
}

struct KnnOptions {
    std::string embeddings, out, metric = "cosine";
    int m = kDefaultNeighborCount;
};

int run_knn(const KnnOptions& o, std::ostream& out) {
    const EmbeddingDataset dataset = read_embd(o.embeddings);
    const Metric metric = parse_metric(o.metric);
    Matrix features = dataset.data_as_double();
    if (metric == Metric::kCosine) features.rowwise().normalize();
    const NeighborTable table = build_neighbors(features, o.m, metric);
    write_neighbor_table(table, o.out);
    out << "wrote " << table.rows() << "x" << table.neighbor_count() << " neighbor table to " << o.out << '\n';
    return kExitOk;
}

struct TrainOptions {
    std::string embeddings, views, labels, config, out_dir;
    bool quiet = false;
};

int run_train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
    const EmbeddingDataset dataset = load_dataset(o.embeddings, o.views, o.labels);
    const TrainConfig config = load_train_config(o.config);
    const fs::path dir(o.out_dir);
    fs::create_directories(dir);

    EpochObserver observer;
    if (!o.quiet) {
        observer = [&out](const EpochRecord& r) {
            char line[160];
            std::snprintf(line, sizeof line, "epoch %4d  total=%.6f  loss1=%.6f  changed=%.4f%s\n", r.epoch,
                          r.loss.total, r.loss.loss1, r.changed_fraction, r.neighbors_refreshed ? "  [knn]" : "");
            out << line;
        };
    }

    try {
        const TrainResult result = train(dataset, config, observer);
        save_checkpoint(result.head, result.pedcc, dir / "checkpoint.bin");
        EmbeddingDataset centers;
        centers.data = result.pedcc.centers().cast<float>();
        write_embd(centers, dir / "pedcc.embd");
        write_text(dir / "report.jsonl", format_report_jsonl(result.report, result.assignment));
        write_text(dir / "timing.jsonl", format_timing_jsonl(result.report));
        write_labels(result.assignment.labels, dir / "assignments.txt");
        write_text(dir / "config.txt", format_train_config(config));

        out << "trained " << result.report.epochs.size() << " epochs"
            << (result.report.early_stopped ? " (early stop)" : "") << "; outputs in " << dir.string() << '\n';
        if (result.report.acc) {
            char line[64];
            std::snprintf(line, sizeof line, "acc=%.6f nmi=%.6f\n", *result.report.acc, *result.report.nmi);
            out << line;
        }
        return kExitOk;
    } catch (const TrainingDiverged& e) {
        save_checkpoint(e.last_good(), e.pedcc(), dir / "checkpoint.last-good.bin");
        write_text(dir / "report.jsonl", format_report_jsonl(e.report(), ClusterAssignment{}));
        err << "error: " << e.what() << "; last good checkpoint written to "
            << (dir / "checkpoint.last-good.bin").string() << '\n';
        return kExitRuntimeError;
    }
}

struct AssignOptions {
    std::string embeddings, checkpoint, out, scores;
};

int run_assign(const AssignOptions& o, std::ostream& out) {
    const EmbeddingDataset dataset = read_embd(o.embeddings);
    const Checkpoint checkpoint = load_checkpoint(o.checkpoint);
    const ClusterAssignment assignment = assign(dataset, checkpoint.head, checkpoint.pedcc);
    if (!o.out.empty()) write_labels(assignment.labels, o.out);
    if (!o.scores.empty()) {
        std::string text;
        char buffer[32];
        for (double s : assignment.scores) {
            std::snprintf(buffer, sizeof buffer, "%.17g\n", s);
            text += buffer;
        }
        write_text(o.scores, text);
    }
    const double mean =
        std::accumulate(assignment.scores.begin(), assignment.scores.end(), 0.0) / assignment.scores.size();
    out << "assigned " << assignment.labels.size() << " samples; counts";
    for (std::size_t c : assignment.counts) out << ' ' << c;
    char line[48];
    std::snprintf(line, sizeof line, "; mean cosine %.6f\n", mean);
    out << line;
    return kExitOk;
}

struct EvalOptions {
    std::string pred, truth;
};

int run_eval(const EvalOptions& o, std::ostream& out) {
    const std::vector<int> predicted = read_labels(o.pred);
    const std::vector<int> truth = read_labels(o.truth);
    const LabelPair pair{predicted, truth};
    pair.validate();
    const int k = 1 + std::max(*std::max_element(predicted.begin(), predicted.end()),
                               *std::max_element(truth.begin(), truth.end()));
    char line[64];
    std::snprintf(line, sizeof line, "acc=%.6f nmi=%.6f\n", cluster_accuracy(pair, k), nmi(pair));
    out << line;
    return kExitOk;
}

struct EvalLossOptions {
    std::string embeddings, views, checkpoint, config;
    int batch_size = 0;
};

// Loss terms per batch in file order, with neighbors from the input
// embeddings and augmentation as configured.
int run_eval_loss(const EvalLossOptions& o, std::ostream& out) {
    const EmbeddingDataset dataset = load_dataset(o.embeddings, o.views, "");
    const TrainConfig config = o.config.empty() ? TrainConfig{} : load_train_config(o.config);
    const Checkpoint checkpoint = load_checkpoint(o.checkpoint);
    require(checkpoint.head.input_dim() == dataset.dim(), ErrorCode::kInvalidArgument,
            "checkpoint expects inputs of dimension " + std::to_string(checkpoint.head.input_dim()));
    const Index batch_size = o.batch_size > 0 ? o.batch_size : config.batch_size;
    const Index m = config.neighbor_count;
    const Index n = dataset.size();
    require(batch_size >= 1, ErrorCode::kInvalidArgument, "batch size must be positive");

    const Matrix inputs = dataset.data_as_double();
    std::optional<NeighborTable> table;
    if (m > 0) {
        Matrix features = inputs;
        if (config.metric == Metric::kCosine) features.rowwise().normalize();
        table = build_neighbors(features, static_cast<int>(m), config.metric);
    }
    std::mt19937_64 rng(config.seed);

    for (Index start = 0, b = 0; start < n; start += batch_size, ++b) {
        const Index size = std::min(batch_size, n - start);
        Matrix x = inputs.middleRows(start, size);
        const Matrix xa = config.augmentation == AugmentationMode::kViews && dataset.num_views() > 0
                              ? Matrix(dataset.views.front().middleRows(start, size).cast<double>())
                              : noise_augment(x, config.noise_std, rng);
        Matrix xn(size * m, dataset.dim());
        for (Index r = 0; r < size && m > 0; ++r)
            for (Index j = 0; j < m; ++j) xn.row(r * m + j) = inputs.row(table->row(start + r)[j]);

        LatentBatch batch{checkpoint.head.infer(x), checkpoint.head.infer(xa),
                          m > 0 ? checkpoint.head.infer(xn) : Matrix(0, checkpoint.head.latent_dim()), m};
        const LossEvaluation eval =
            combined_loss(batch, checkpoint.pedcc, config.weights, config.kernel, config.metric);
        char line[256];
        std::snprintf(line, sizeof line,
                      "batch=%lld size=%lld loss1=%.9g loss2=%.9g loss3=%.9g loss4=%.9g total=%.9g sigma=%.6g\n",
                      static_cast<long long>(b), static_cast<long long>(size), eval.terms.loss1, eval.terms.loss2,
                      eval.terms.loss3, eval.terms.loss4, eval.terms.total, eval.sigma);
        out << line;
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Clustering of precomputed embeddings around evenly distributed class centroids", "pedcc"};
    app.require_subcommand(1);

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate evenly distributed class centroids");
    gen_cmd->add_option("--clusters", gen.clusters, "Number of centers C")->required()->check(CLI::Range(2, 1 << 20));
    gen_cmd->add_option("--dim", gen.dim, "Dimension d (C <= d + 1)")->required()->check(CLI::PositiveNumber);
    gen_cmd->add_option("--seed", gen.seed, "Apply a seeded random rotation");
    gen_cmd->add_option("--out", gen.out, "Output EMBD file")->required();
    gen_cmd->add_option("--emit-csv", gen.csv, "Also write the centers as CSV, 17 significant digits");

    KnnOptions knn;
    auto* knn_cmd = app.add_subcommand("knn", "Exact k-nearest-neighbor table of an embedding file");
    knn_cmd->add_option("--embeddings", knn.embeddings, "Input EMBD file")->required();
    knn_cmd->add_option("--m", knn.m, "Neighbors per sample")->capture_default_str()->check(CLI::PositiveNumber);
    knn_cmd->add_option("--metric", knn.metric, "cosine or euclidean")
        ->capture_default_str()
        ->check(CLI::IsMember({"cosine", "euclidean"}));
    knn_cmd->add_option("--out", knn.out, "Output neighbor table")->required();

    TrainOptions tr;
    auto* train_cmd = app.add_subcommand("train", "Train a projection head and assign clusters");
    train_cmd->add_option("--embeddings", tr.embeddings, "Input EMBD file")->required();
    train_cmd->add_option("--views", tr.views, "EMBD file with augmented views (every block is used as a view)");
    train_cmd->add_option("--labels", tr.labels, "Ground-truth labels, used for reporting only");
    train_cmd->add_option("--config", tr.config, "Key-value training configuration")->required();
    train_cmd->add_option("--out-dir", tr.out_dir, "Directory for checkpoint, report and assignments")->required();
    train_cmd->add_flag("--quiet", tr.quiet, "Do not print per-epoch progress");

    AssignOptions as;
    auto* assign_cmd = app.add_subcommand("assign", "Assign clusters with a trained checkpoint");
    assign_cmd->add_option("--embeddings", as.embeddings, "Input EMBD file")->required();
    assign_cmd->add_option("--checkpoint", as.checkpoint, "Checkpoint written by train")->required();
    assign_cmd->add_option("--out", as.out, "Write labels, one per line");
    assign_cmd->add_option("--scores", as.scores, "Write cosine scores, one per line");

    EvalOptions ev;
    auto* eval_cmd = app.add_subcommand("eval", "Clustering accuracy and NMI of two label files");
    eval_cmd->add_option("--pred", ev.pred, "Predicted labels")->required();
    eval_cmd->add_option("--truth", ev.truth, "True labels")->required();

    EvalLossOptions el;
    auto* loss_cmd = app.add_subcommand("eval-loss", "Print the four loss terms per batch for a checkpoint");
    loss_cmd->add_option("--embeddings", el.embeddings, "Input EMBD file")->required();
    loss_cmd->add_option("--views", el.views, "EMBD file with augmented views");
    loss_cmd->add_option("--checkpoint", el.checkpoint, "Checkpoint written by train")->required();
    loss_cmd->add_option("--config", el.config, "Key-value configuration (weights, kernel, metric, m)");
    loss_cmd->add_option("--batch-size", el.batch_size, "Override the configured batch size");

    if (args.size() >= 2 && !args[1].empty() && args[1][0] != '-' &&
        std::find(kSubcommands.begin(), kSubcommands.end(), args[1]) == kSubcommands.end()) {
        err << "error: unknown subcommand '" << args[1] << "'; did you mean '" << closest_subcommand(args[1])
            << "'?\n"
            << app.help();
        return kExitUsage;
    }

    std::vector<const char*> argv;
    for (const std::string& arg : args) argv.push_back(arg.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        const std::vector<CLI::App*> parsed = app.get_subcommands();
        err << (parsed.empty() ? app.help() : parsed.front()->help());
        return kExitUsage;
    }

    try {
        if (gen_cmd->parsed()) return run_gen(gen, out);
        if (knn_cmd->parsed()) return run_knn(knn, out);
        if (train_cmd->parsed()) return run_train(tr, out, err);
        if (assign_cmd->parsed()) return run_assign(as, out);
        if (eval_cmd->parsed()) return run_eval(ev, out);
        if (loss_cmd->parsed()) return run_eval_loss(el, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntimeError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntimeError;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace icbpl::cli
