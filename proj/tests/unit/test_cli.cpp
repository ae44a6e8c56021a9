// End-to-end checks of the command-line binary.  Each test invokes the real
// executable (path injected by the build as CODA_CLI_PATH) in a scratch
// directory and inspects exit codes, streams, and output files.

#include <coda/csv.hpp>
#include <coda/imputers.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace coda;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        path = fs::temp_directory_path() /
               ("coda_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string str() const { return path.string(); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CliRun {
    int exit_code = -1;
    std::string out, err;
};

CliRun run_cli(const TempDir& tmp, const std::string& args) {
    const std::string out_path = tmp.file("cli_stdout.txt");
    const std::string err_path = tmp.file("cli_stderr.txt");
    const std::string cmd =
        std::string(CODA_CLI_PATH) + " " + args + " >" + out_path + " 2>" + err_path;
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return {WEXITSTATUS(status), slurp(out_path), slurp(err_path)};
}

std::string tiny_counts(const TempDir& tmp) {
    const std::string path = tmp.file("tiny.csv");
    write_text_file(path, "id,c1,c2,c3\nr1,0,2,8\nr2,5,5,10\nr3,3,0,7\n");
    return path;
}

// Same shape as the sweep fixtures in the library tests: distinct column
// values so zero insertion always bites, shallow row gradient so the
// multiplicative adjustment stays positive.
std::string sweep_counts(const TempDir& tmp) {
    Matrix x(10, 8);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 8; ++j) x(i, j) = 400.0 + 20.0 * i + ((i * 7 + j * 13) % 7);
    const std::string path = tmp.file("sweep_input.csv");
    write_matrix_csv(path, x, default_labels("r", 10), default_labels("g", 8));
    return path;
}

// Imputed matrices are real-valued, outside the integer ingest contract.
Matrix read_real_matrix(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::string line;
    REQUIRE(std::getline(in, line));
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        REQUIRE(std::getline(ss, field, ','));  // row label
        while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
        rows.push_back(row);
    }
    REQUIRE(!rows.empty());
    Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        REQUIRE(rows[i].size() == rows[0].size());
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return x;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace

TEST_CASE("help prints the subcommand roster and exits cleanly", "[cli]") {
    TempDir tmp;
    const CliRun r = run_cli(tmp, "--help");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("impute") != std::string::npos);
    CHECK(r.out.find("bench-sparsity") != std::string::npos);
    CHECK(r.out.find("gen-nozero") != std::string::npos);
}

TEST_CASE("impute add1 turns zeros into ones and keeps observed cells", "[cli]") {
    TempDir tmp;
    const std::string in = tiny_counts(tmp);
    const std::string out = tmp.file("imputed.csv");
    const CliRun r = run_cli(tmp, "impute --input " + in + " --method add1 --out " + out);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("add1: ok") != std::string::npos);

    const LabeledCounts got = ingest_csv(out);
    Matrix expect(3, 3);
    expect << 1, 2, 8, 5, 5, 10, 3, 1, 7;
    REQUIRE(got.counts.rows() == 3);
    CHECK((got.counts - expect).cwiseAbs().maxCoeff() == 0.0);
    CHECK(got.row_labels == std::vector<std::string>{"r1", "r2", "r3"});
}

TEST_CASE("impute under multiplicative replacement preserves observed ratios", "[cli]") {
    TempDir tmp;
    const std::string in = tiny_counts(tmp);
    const std::string out = tmp.file("imputed.csv");
    const CliRun r = run_cli(tmp, "impute --input " + in + " --method mult_repl --out " + out);
    REQUIRE(r.exit_code == 0);

    // Detection limits default to each column's smallest positive value
    // (3, 2, 7), so row one (0, 2, 8) imputes to 0.65 * 3 = 1.95 on the zero
    // and scales the observed cells by 1 - 1.95 / 10.
    const Matrix got = read_real_matrix(out);
    REQUIRE(got.rows() == 3);
    CHECK(got(0, 0) == Catch::Approx(1.95).epsilon(1e-12));
    CHECK(got(0, 1) == Catch::Approx(2.0 * 0.805).epsilon(1e-12));
    CHECK(got(0, 2) == Catch::Approx(8.0 * 0.805).epsilon(1e-12));
    CHECK(got(1, 0) == 5.0);
}

TEST_CASE("unknown method is a usage error naming the valid identifiers", "[cli]") {
    TempDir tmp;
    const std::string in = tiny_counts(tmp);
    const CliRun r =
        run_cli(tmp, "impute --input " + in + " --method bogus --out " + tmp.file("x.csv"));
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("unknown method 'bogus'") != std::string::npos);
    for (const std::string& name : method_names())
        CHECK(r.err.find(name) != std::string::npos);
}

TEST_CASE("missing input file is an i/o error", "[cli]") {
    TempDir tmp;
    const CliRun r = run_cli(tmp, "impute --input " + tmp.file("absent.csv") +
                                      " --method add1 --out " + tmp.file("x.csv"));
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("cannot open") != std::string::npos);
}

TEST_CASE("malformed cell is an i/o error locating the cell", "[cli]") {
    TempDir tmp;
    const std::string in = tmp.file("bad.csv");
    write_text_file(in, "id,c1,c2\nr1,4,x\nr2,1,2\n");
    const CliRun r = run_cli(tmp, "impute --input " + in + " --method add1 --out " +
                                      tmp.file("x.csv"));
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("label 'r1'") != std::string::npos);
    CHECK(r.err.find("label 'c2'") != std::string::npos);
    CHECK(r.err.find("unparseable") != std::string::npos);
}

TEST_CASE("bench-sparsity writes paired records and aggregate tables", "[cli]") {
    TempDir tmp;
    const std::string in = sweep_counts(tmp);
    const std::string out_dir = tmp.file("sweep");
    const CliRun r = run_cli(tmp, "bench-sparsity --input " + in +
                                      " --m 4 --p 0.3 --reps 2 --methods mult_repl,add1"
                                      " --seed 5 --out " + out_dir);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("records: 8 (ok 8") != std::string::npos);

    const std::vector<std::string> lines = lines_of(slurp(out_dir + "/results.csv"));
    REQUIRE(lines.size() == 9);
    CHECK(lines[0] == metric_csv_header());
    CHECK(lines[1].rfind("mult_repl,raw,4,0.3,0,ok,", 0) == 0);
    CHECK(lines[2].rfind("mult_repl,ceil,4,0.3,0,ok,", 0) == 0);
    // add1 on integer counts is already on the count lattice, so the ceil
    // variant repeats the raw metrics.
    const auto tail = [](const std::string& line) { return line.substr(line.find(",ok,")); };
    CHECK(tail(lines[3]) == tail(lines[4]));

    for (const std::string& name :
         {"metrics_summary.csv", "metrics_by_m.csv", "runtime_summary.csv", "failure_rates.csv"})
        CHECK(fs::exists(fs::path(out_dir) / "aggregates" / name));
    CHECK(fs::exists(fs::path(out_dir) / "manifest.json"));
}

TEST_CASE("bench-dimension accepts a matching design flag", "[cli]") {
    TempDir tmp;
    const std::string in = sweep_counts(tmp);
    const std::string out_dir = tmp.file("dim");
    const CliRun r = run_cli(tmp, "bench-dimension --input " + in +
                                      " --design dimension --m 3,5 --p 0.3 --reps 1"
                                      " --methods add1 --out " + out_dir);
    REQUIRE(r.exit_code == 0);
    const std::vector<std::string> lines = lines_of(slurp(out_dir + "/results.csv"));
    REQUIRE(lines.size() == 5);
    CHECK(lines[1].rfind("add1,raw,3,0.3,0,", 0) == 0);
    CHECK(lines[3].rfind("add1,raw,5,0.3,0,", 0) == 0);
}

TEST_CASE("design flag contradicting the subcommand is a usage error", "[cli]") {
    TempDir tmp;
    const std::string in = sweep_counts(tmp);
    const CliRun r = run_cli(tmp, "bench-sparsity --input " + in +
                                      " --design dimension --m 4 --p 0.3 --reps 1 --out " +
                                      tmp.file("x"));
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("contradicts") != std::string::npos);
}

TEST_CASE("sweep whose records all fail exits with the failure status", "[cli]") {
    TempDir tmp;
    const std::string in = sweep_counts(tmp);
    const std::string out_dir = tmp.file("allfail");
    const CliRun r = run_cli(tmp, "bench-sparsity --input " + in +
                                      " --m 4 --p 0.3 --reps 1 --methods lr_em"
                                      " --timeout-s 1e-9 --out " + out_dir);
    CHECK(r.exit_code == 3);
    CHECK(r.err.find("every record failed") != std::string::npos);
    // The records are still persisted for inspection.
    const std::vector<std::string> lines = lines_of(slurp(out_dir + "/results.csv"));
    REQUIRE(lines.size() == 3);
    CHECK(lines[1].find(",failed,") != std::string::npos);
}

TEST_CASE("zero-bearing sweep input is rejected up front", "[cli]") {
    TempDir tmp;
    const std::string in = tiny_counts(tmp);
    const CliRun r = run_cli(tmp, "bench-sparsity --input " + in +
                                      " --m 2 --p 0.3 --reps 1 --out " + tmp.file("x"));
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("zero") != std::string::npos);
}

TEST_CASE("simulate-dm rows sum to the requested depth", "[cli]") {
    TempDir tmp;
    const std::string out = tmp.file("dm.csv");
    const CliRun r =
        run_cli(tmp, "simulate-dm --alpha 6,3,1 --depth 500 --n 4 --seed 3 --out " + out);
    REQUIRE(r.exit_code == 0);
    const LabeledCounts got = ingest_csv(out);
    REQUIRE(got.counts.rows() == 4);
    REQUIRE(got.counts.cols() == 3);
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(got.counts.row(i).sum() == 500.0);

    // Same seed, same draw.
    const std::string out2 = tmp.file("dm2.csv");
    run_cli(tmp, "simulate-dm --alpha 6,3,1 --depth 500 --n 4 --seed 3 --out " + out2);
    CHECK(slurp(out) == slurp(out2));
}

TEST_CASE("quantize-demo reports no drift at scale one", "[cli]") {
    TempDir tmp;
    const std::string out_dir = tmp.file("qd");
    const CliRun r = run_cli(tmp, "quantize-demo --alpha 6,3,1 --depth 1000 --n 100"
                                  " --scales 1,0.1 --seed 7 --out " + out_dir);
    REQUIRE(r.exit_code == 0);

    const std::vector<std::string> summary = lines_of(slurp(out_dir + "/summary.csv"));
    REQUIRE(summary.size() == 3);
    CHECK(summary[0] == "scale,mean_lr10,n_kept,n_dropped");
    CHECK(summary[1].rfind("1,", 0) == 0);

    int scale_one_rows = 0;
    for (const std::string& line : lines_of(slurp(out_dir + "/shifts.csv"))) {
        if (line.rfind("1,", 0) != 0) continue;
        ++scale_one_rows;
        CHECK(line.substr(line.rfind(',') + 1) == "0");
    }
    CHECK(scale_one_rows == 100);
}

TEST_CASE("gen-nozero emits strictly positive counts near the target depth", "[cli]") {
    TempDir tmp;
    const std::string in = tiny_counts(tmp);
    const std::string out = tmp.file("nozero.csv");
    const CliRun r =
        run_cli(tmp, "gen-nozero --input " + in + " --depth 2000 --seed 1 --out " + out);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("depth_used") != std::string::npos);

    const LabeledCounts got = ingest_csv(out);
    REQUIRE(got.counts.rows() == 3);
    CHECK((got.counts.array() > 0.0).all());
    for (Eigen::Index i = 0; i < got.counts.rows(); ++i)
        CHECK(std::abs(got.counts.row(i).sum() - 2000.0) <= 1.5);
    CHECK(got.col_labels == std::vector<std::string>{"c1", "c2", "c3"});
}

TEST_CASE("missing required flags are usage errors", "[cli]") {
    TempDir tmp;
    CHECK(run_cli(tmp, "bench-sparsity").exit_code == 1);
    CHECK(run_cli(tmp, "impute --method add1").exit_code == 1);
    CHECK(run_cli(tmp, "").exit_code == 1);
}
