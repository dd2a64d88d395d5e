#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "coreset/cli.hpp"
#include "coreset/io.hpp"
#include "coreset/synthetic.hpp"

using namespace coreset;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("coreset-test-" + std::to_string(::getpid()) + "-" +
                                            std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

class CountingSource : public RowSource {
public:
    explicit CountingSource(const Matrix& m) : inner_(m) {}
    std::optional<Vector> next() override {
        auto row = inner_.next();
        if (row) ++pulls_;
        return row;
    }
    Index dim() const override { return inner_.dim(); }
    std::size_t size_hint() const override { return inner_.size_hint(); }
    std::size_t pulls() const { return pulls_; }

private:
    MatrixRowSource inner_;
    std::size_t pulls_ = 0;
};

int run_cli(const std::string& args) {
    std::string cmd = std::string(CORESET_CLI_PATH) + " " + args + " 2>/dev/null";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("csv round trip") {
    TempDir dir;
    Matrix m = gaussian_stream(12, 4, 5);
    write_rows_csv(dir.file("rows.csv"), m);
    RowFile rf = read_rows_auto(dir.file("rows.csv"));
    REQUIRE(rf.rows.rows() == 12);
    REQUIRE(rf.rows.cols() == 4);
    REQUIRE((rf.rows - m).norm() == 0.0);  // %.17g round-trips doubles exactly
    REQUIRE(rf.digest.rfind("fnv1a64:", 0) == 0);
}

TEST_CASE("csv header skipping and errors") {
    TempDir dir;
    {
        std::ofstream out(dir.file("rows.csv"));
        out << "a,b\n1.5,2.5\n3.5,4.5\n";
    }
    REQUIRE_THROWS_AS(read_rows_auto(dir.file("rows.csv"), false), invalid_input_error);
    RowFile rf = read_rows_auto(dir.file("rows.csv"), true);
    REQUIRE(rf.rows.rows() == 2);
    {
        std::ofstream out(dir.file("ragged.csv"));
        out << "1,2\n1,2,3\n";
    }
    REQUIRE_THROWS_AS(read_rows_auto(dir.file("ragged.csv")), invalid_input_error);
    REQUIRE_THROWS_AS(read_rows_auto(dir.file("missing.csv")), invalid_input_error);
}

TEST_CASE("binary round trip and corruption checks") {
    TempDir dir;
    Matrix m = gaussian_stream(7, 3, 8);
    write_rows_binary(dir.file("rows.bin"), m);
    RowFile rf = read_rows_auto(dir.file("rows.bin"));
    REQUIRE((rf.rows - m).norm() == 0.0);

    std::string bytes = read_file_bytes(dir.file("rows.bin"));
    bytes.pop_back();
    {
        std::ofstream out(dir.file("short.bin"), std::ios::binary);
        out << bytes;
    }
    REQUIRE_THROWS_AS(read_rows_auto(dir.file("short.bin")), invalid_input_error);
}

TEST_CASE("coreset file round trip") {
    TempDir dir;
    Rng rng(5);
    std::vector<CoresetEntry> entries;
    for (int i = 0; i < 6; ++i)
        entries.push_back(make_entry(static_cast<std::size_t>(i * 3 + 1), rng.gaussian_vector(4), 3,
                                     rng.uniform(0.05, 1.0)));
    write_coreset_csv(dir.file("coreset.csv"), entries, 4);
    auto back = read_coreset_csv(dir.file("coreset.csv"), 3);
    REQUIRE(back.size() == entries.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        REQUIRE(back[i].index == entries[i].index);
        REQUIRE(back[i].probability == entries[i].probability);
        REQUIRE(back[i].weight == entries[i].weight);
        REQUIRE((back[i].row - entries[i].row).norm() == 0.0);
        REQUIRE((back[i].scaled_row - entries[i].scaled_row).norm() < 1e-12);
    }
}

TEST_CASE("sampler path pulls each row exactly once") {
    Matrix m = gaussian_stream(40, 3, 11);
    for (auto mode : {SamplerMode::online, SamplerMode::kernel, SamplerMode::online_then_kernel,
                      SamplerMode::uniform, SamplerMode::matrix_p2}) {
        CountingSource source(m);
        SamplerConfig cfg;
        cfg.p = mode == SamplerMode::matrix_p2 ? 2 : 3;
        cfg.r = 2.0;
        cfg.seed = 3;
        cfg.mode = mode;
        cfg.n_hint = 40;
        sample_stream(source, cfg);
        REQUIRE(source.pulls() == 40);
    }
}

TEST_CASE("run_sample writes coreset and manifest deterministically") {
    TempDir dir;
    Matrix m = gaussian_stream(80, 5, 21);
    write_rows_csv(dir.file("rows.csv"), m);

    SampleOptions opt;
    opt.input = dir.file("rows.csv");
    opt.mode = "online";
    opt.p = 3;
    opt.r = 4.0;
    opt.seed = 99;
    opt.out = dir.file("a.coreset.csv");
    run_sample(opt);
    opt.out = dir.file("b.coreset.csv");
    run_sample(opt);

    REQUIRE(read_file_bytes(dir.file("a.coreset.csv")) == read_file_bytes(dir.file("b.coreset.csv")));
    Json ma = read_json(dir.file("a.coreset.csv") + ".manifest.json");
    Json mb = read_json(dir.file("b.coreset.csv") + ".manifest.json");
    REQUIRE(ma["config"] == mb["config"]);
    REQUIRE(ma["input"] == mb["input"]);
    REQUIRE(ma["retained"] == mb["retained"]);
    REQUIRE(ma["input"]["rows"] == 80);
    REQUIRE(ma["config"]["mode"] == "online");

    // different seed changes the sampled set
    opt.seed = 100;
    opt.out = dir.file("c.coreset.csv");
    run_sample(opt);
    REQUIRE(read_file_bytes(dir.file("a.coreset.csv")) != read_file_bytes(dir.file("c.coreset.csv")));
}

TEST_CASE("run_eval reports zero error for the full coreset and flags digests") {
    TempDir dir;
    Matrix m = gaussian_stream(50, 4, 33);
    write_rows_csv(dir.file("rows.csv"), m);

    SampleOptions sopt;
    sopt.input = dir.file("rows.csv");
    sopt.mode = "uniform";
    sopt.p = 3;
    sopt.r = 1e9;  // keep everything at weight 1
    sopt.seed = 5;
    sopt.out = dir.file("full.coreset.csv");
    run_sample(sopt);

    EvalOptions eopt;
    eopt.input = dir.file("rows.csv");
    eopt.coreset = dir.file("full.coreset.csv");
    eopt.p = 3;
    eopt.queries = "bottom:3";
    eopt.out = dir.file("report");
    EvalResult res = run_eval(eopt);
    REQUIRE_FALSE(res.digest_mismatch);
    REQUIRE(res.report["aggregate"]["sum_relative_error"].get<double>() ==
            Catch::Approx(0.0).margin(1e-12));
    REQUIRE(res.report["aggregate"]["max_query_relative_error"].get<double>() ==
            Catch::Approx(0.0).margin(1e-12));

    // determinism of the report bytes
    eopt.out = dir.file("report2");
    run_eval(eopt);
    REQUIRE(read_file_bytes(dir.file("report.json")) != "");
    std::string a = read_file_bytes(dir.file("report.csv"));
    std::string b = read_file_bytes(dir.file("report2.csv"));
    REQUIRE(a == b);

    // digest mismatch warning
    Matrix other = gaussian_stream(50, 4, 34);
    write_rows_csv(dir.file("other.csv"), other);
    eopt.input = dir.file("other.csv");
    eopt.out = dir.file("report3");
    EvalResult mism = run_eval(eopt);
    REQUIRE(mism.digest_mismatch);
}

TEST_CASE("query spec parsing") {
    Matrix m = gaussian_stream(30, 4, 44);
    REQUIRE(build_queries("bottom5", m, 2, 1).vectors.size() == 4);  // rank-capped
    REQUIRE(build_queries("bottom:2", m, 2, 1).vectors.size() == 2);
    REQUIRE(build_queries("smallest", m, 2, 1).vectors.size() == 1);
    QuerySet rnd = build_queries("random:17:9", m, 2, 1);
    REQUIRE(rnd.vectors.size() == 17);
    QuerySet rnd2 = build_queries("random:17:9", m, 2, 2);  // seed inside the spec wins
    REQUIRE((rnd.vectors[0] - rnd2.vectors[0]).norm() == 0.0);
    REQUIRE_THROWS_AS(build_queries("nonsense", m, 2, 1), invalid_input_error);
}

TEST_CASE("cli end to end: sample, eval, exit codes") {
    TempDir dir;
    Matrix m = gaussian_stream(60, 4, 55);
    write_rows_csv(dir.file("rows.csv"), m);

    REQUIRE(run_cli("sample --input " + dir.file("rows.csv") + " --mode online --p 3 --r 5" +
                    " --seed 7 --out " + dir.file("c.csv")) == 0);
    REQUIRE(fs::exists(dir.file("c.csv")));
    REQUIRE(fs::exists(dir.file("c.csv") + ".manifest.json"));

    REQUIRE(run_cli("eval --input " + dir.file("rows.csv") + " --coreset " + dir.file("c.csv") +
                    " --p 3 --queries bottom:2 --out " + dir.file("rep")) == 0);
    REQUIRE(fs::exists(dir.file("rep.csv")));
    REQUIRE(fs::exists(dir.file("rep.json")));

    // byte-identical replays
    REQUIRE(run_cli("sample --input " + dir.file("rows.csv") + " --mode online_then_kernel --p 4 --r 3" +
                    " --seed 11 --out " + dir.file("k1.csv")) == 0);
    REQUIRE(run_cli("sample --input " + dir.file("rows.csv") + " --mode online_then_kernel --p 4 --r 3" +
                    " --seed 11 --out " + dir.file("k2.csv")) == 0);
    REQUIRE(read_file_bytes(dir.file("k1.csv")) == read_file_bytes(dir.file("k2.csv")));

    // invalid input -> 2
    REQUIRE(run_cli("sample --input " + dir.file("nope.csv") + " --out " + dir.file("x.csv")) == 2);
    REQUIRE(run_cli("sample --input " + dir.file("rows.csv") + " --mode bogus --out " + dir.file("x.csv")) == 2);

    // capacity error -> 3 (lift dimension blows the kron budget)
    Matrix wide = gaussian_stream(5, 50, 56);
    write_rows_csv(dir.file("wide.csv"), wide);
    REQUIRE(run_cli("sample --input " + dir.file("wide.csv") + " --mode kernel --p 8 --r 2 --out " +
                    dir.file("w.csv")) == 3);

    // empty input stays valid
    {
        std::ofstream out(dir.file("empty.csv"));
    }
    REQUIRE(run_cli("sample --input " + dir.file("empty.csv") + " --mode online --p 2 --r 2 --out " +
                    dir.file("e.csv")) == 0);
    auto entries = read_coreset_csv(dir.file("e.csv"), 2);
    REQUIRE(entries.empty());
}

TEST_CASE("cli bench determinism on a small spectral scenario") {
    TempDir dir;
    std::string args = "bench --scenario spectral_p2 --seed 3 --sizes 60 --reps 2 --out ";
    REQUIRE(run_cli(args + dir.file("b1")) == 0);
    REQUIRE(run_cli(args + dir.file("b2")) == 0);
    REQUIRE(read_file_bytes(dir.file("b1.csv")) == read_file_bytes(dir.file("b2.csv")));
    REQUIRE(read_file_bytes(dir.file("b1.json")) == read_file_bytes(dir.file("b2.json")));
    Json rep = read_json(dir.file("b1.json"));
    REQUIRE(rep["scenario"] == "spectral_p2");
    REQUIRE(rep["cells"].size() >= 2);  // control row + one size
    REQUIRE(rep["cells"][0]["sampler"] == "full");
    REQUIRE(rep["cells"][0]["median"].get<double>() == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("expected size heuristic is sane") {
    REQUIRE(r_from_expected_size_heuristic(1000.0, 1000) == Catch::Approx(1000.0));
    double r = r_from_expected_size_heuristic(100.0, 10000);
    REQUIRE(r * (1.0 + std::log(10000.0 / r)) == Catch::Approx(100.0).margin(1.0));
}
