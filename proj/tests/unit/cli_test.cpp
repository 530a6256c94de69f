#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "blobs.hpp"
#include "cli.hpp"
#include "icbpl/io.hpp"
#include "temp_dir.hpp"

namespace icbpl {
namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "pedcc");
    std::ostringstream out, err;
    const int code = cli::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_text(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

TEST(Cli, GenWritesCenters) {
    testing::TempDir dir;
    const auto r = run({"gen", "--clusters", "10", "--dim", "64", "--out", (dir / "p.embd").string(), "--emit-csv",
                        (dir / "p.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ds = read_embd(dir / "p.embd");
    EXPECT_EQ(ds.size(), 10);
    EXPECT_EQ(ds.dim(), 64);
    const std::string csv = slurp(dir / "p.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10);
    EXPECT_EQ(std::count(csv.begin(), csv.begin() + csv.find('\n'), ','), 63);
}

TEST(Cli, GenInfeasibleIsRuntimeError) {
    testing::TempDir dir;
    const auto r = run({"gen", "--clusters", "5", "--dim", "2", "--out", (dir / "p.embd").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("infeasible"), std::string::npos) << r.err;
}

TEST(Cli, EvalPrintsAccAndNmi) {
    testing::TempDir dir;
    write_text(dir / "a.txt", "0\n0\n0\n1\n");
    write_text(dir / "b.txt", "0\n0\n1\n1\n");
    const auto r = run({"eval", "--pred", (dir / "a.txt").string(), "--truth", (dir / "b.txt").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("acc=0.750000 nmi=", 0), 0u) << r.out;
}

TEST(Cli, UsageErrors) {
    const auto missing = run({"train", "--config", "c.txt", "--out-dir", "o"});
    EXPECT_EQ(missing.code, 2);
    EXPECT_NE(missing.err.find("--embeddings"), std::string::npos) << missing.err;
    EXPECT_NE(missing.err.find("Usage"), std::string::npos) << missing.err;

    const auto unknown = run({"trian"});
    EXPECT_EQ(unknown.code, 2);
    EXPECT_NE(unknown.err.find("did you mean 'train'"), std::string::npos) << unknown.err;

    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"eval", "--pred"}).code, 2);
}

TEST(Cli, HelpOnEverySubcommand) {
    for (const char* sub : {"gen", "knn", "train", "assign", "eval", "eval-loss"}) {
        const auto r = run({sub, "--help"});
        EXPECT_EQ(r.code, 0) << sub;
        EXPECT_FALSE(r.out.empty()) << sub;
    }
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, MissingFileIsRuntimeError) {
    const auto r = run({"knn", "--embeddings", "/nonexistent/x.embd", "--out", "/tmp/never"});
    EXPECT_EQ(r.code, 1);
}

TEST(Cli, KnnTrainAssignEvalLoss) {
    testing::TempDir dir;
    testing::BlobSpec spec;
    spec.samples = 200;
    spec.dim = 10;
    auto ds = testing::make_blobs(spec);
    const auto labels = *ds.labels;
    ds.labels.reset();
    write_embd(ds, dir / "x.embd");
    write_labels(labels, dir / "y.txt");

    const auto knn = run({"knn", "--embeddings", (dir / "x.embd").string(), "--m", "3", "--out",
                          (dir / "n.bin").string()});
    ASSERT_EQ(knn.code, 0) << knn.err;
    const auto table = read_neighbor_table(dir / "n.bin");
    EXPECT_EQ(table.rows(), 200);
    EXPECT_EQ(table.neighbor_count(), 3);

    write_text(dir / "c.txt",
               "clusters = 4\nlatent_dim = 3\nhidden_dims = 16\nlambda3 = 0.1\nbatch_size = 50\nmax_epochs = 12\n");
    const auto out_dir = dir / "run";
    const auto tr = run({"train", "--embeddings", (dir / "x.embd").string(), "--labels", (dir / "y.txt").string(),
                         "--config", (dir / "c.txt").string(), "--out-dir", out_dir.string(), "--quiet"});
    ASSERT_EQ(tr.code, 0) << tr.err;
    EXPECT_NE(tr.out.find("acc="), std::string::npos);
    for (const char* f : {"checkpoint.bin", "pedcc.embd", "report.jsonl", "timing.jsonl", "assignments.txt", "config.txt"})
        EXPECT_TRUE(std::filesystem::exists(out_dir / f)) << f;
    EXPECT_EQ(read_labels(out_dir / "assignments.txt").size(), 200u);
    EXPECT_EQ(read_embd(out_dir / "pedcc.embd").size(), 4);

    const auto as = run({"assign", "--embeddings", (dir / "x.embd").string(), "--checkpoint",
                         (out_dir / "checkpoint.bin").string(), "--out", (dir / "p.txt").string(), "--scores",
                         (dir / "s.txt").string()});
    ASSERT_EQ(as.code, 0) << as.err;
    EXPECT_EQ(read_labels(dir / "p.txt"), read_labels(out_dir / "assignments.txt"));

    const auto ev = run({"eval", "--pred", (dir / "p.txt").string(), "--truth", (dir / "y.txt").string()});
    ASSERT_EQ(ev.code, 0);

    const auto el = run({"eval-loss", "--embeddings", (dir / "x.embd").string(), "--checkpoint",
                         (out_dir / "checkpoint.bin").string(), "--config", (dir / "c.txt").string(), "--batch-size",
                         "100"});
    ASSERT_EQ(el.code, 0) << el.err;
    EXPECT_EQ(std::count(el.out.begin(), el.out.end(), '\n'), 2);
    EXPECT_NE(el.out.find("loss4="), std::string::npos);
}

TEST(Cli, TrainWithViewsFile) {
    testing::TempDir dir;
    testing::BlobSpec spec;
    spec.samples = 60;
    spec.dim = 6;
    const auto ds = testing::make_blobs(spec);
    EmbeddingDataset x;
    x.data = ds.data;
    write_embd(x, dir / "x.embd");
    EmbeddingDataset v;
    v.data = ds.data;
    v.views = {ds.data};
    write_embd(v, dir / "v.embd");
    write_text(dir / "c.txt", "clusters = 4\nlatent_dim = 3\nhidden_dims = 8\naugmentation = views\nmax_epochs = 2\n");
    const auto r = run({"train", "--embeddings", (dir / "x.embd").string(), "--views", (dir / "v.embd").string(),
                        "--config", (dir / "c.txt").string(), "--out-dir", (dir / "out").string(), "--quiet"});
    EXPECT_EQ(r.code, 0) << r.err;
}

TEST(Cli, DivergenceWritesLastGoodCheckpoint) {
    testing::TempDir dir;
    testing::BlobSpec spec;
    spec.samples = 40;
    spec.dim = 6;
    write_embd(testing::make_blobs(spec), dir / "x.embd");
    write_text(dir / "c.txt", "clusters = 4\nlatent_dim = 3\nhidden_dims = 8\nlr = 1e300\nmax_epochs = 3\n");
    const auto r = run({"train", "--embeddings", (dir / "x.embd").string(), "--config", (dir / "c.txt").string(),
                        "--out-dir", (dir / "out").string(), "--quiet"});
    EXPECT_EQ(r.code, 1);
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / "checkpoint.last-good.bin"));
    EXPECT_NO_THROW(load_checkpoint(dir / "out" / "checkpoint.last-good.bin"));
}

}  // namespace
}  // namespace icbpl
