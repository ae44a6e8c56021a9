// Command-line front end: single-file imputation, the two benchmark sweep
// designs, Dirichlet-multinomial simulation, the ceiling-quantization demo,
// and the zero-free dataset generator.
//
// Exit codes: 0 success, 1 usage error, 2 I/O or parse error, 3 operation
// failed (every benchmark record failed, the requested imputation failed,
// or the generator exhausted its depth doublings).

#include <coda/bench.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace coda;

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitFailed = 3;

std::string known_methods() {
    std::string out;
    for (const std::string& m : method_names()) {
        if (!out.empty()) out += ", ";
        out += m;
    }
    return out;
}

void require_known_methods(const std::vector<std::string>& methods) {
    const std::vector<std::string>& known = method_names();
    for (const std::string& m : methods)
        if (std::find(known.begin(), known.end(), m) == known.end())
            throw std::invalid_argument("unknown method '" + m +
                                        "'; valid methods: " + known_methods());
}

// Default detection limits for observed files: the smallest positive value
// seen in each column.
DetectionLimits column_min_positive(const Matrix& x) {
    Eigen::RowVectorXd dl = Eigen::RowVectorXd::Zero(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        double best = 0.0;
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            if (x(i, j) > 0.0 && (best == 0.0 || x(i, j) < best)) best = x(i, j);
        dl[j] = best;
    }
    return DetectionLimits::per_column(dl);
}

struct ImputeArgs {
    std::string input, method, out;
    std::uint64_t seed = 0;
    double timeout_s = 600.0;
};

int run_impute(const ImputeArgs& a) {
    require_known_methods({a.method});
    const LabeledCounts data = ingest_csv(a.input);

    MethodParams params;
    params.time_limit_s = a.timeout_s;
    const ImputationResult res =
        run_method(a.method, data.counts, column_min_positive(data.counts), a.seed, params);

    for (const std::string& note : res.diag.notes) std::cerr << "note: " << note << '\n';
    if (res.status == ImputeStatus::failed) {
        std::cerr << "imputation failed: " << res.reason << '\n';
        return kExitFailed;
    }
    if (res.status == ImputeStatus::degenerate)
        std::cerr << "warning: degenerate result (" << res.reason << "; "
                  << res.diag.negative_rows.size() << " flagged rows); output kept as computed\n";
    write_matrix_csv(a.out, res.values, data.row_labels, data.col_labels);
    std::cout << a.method << ": " << to_string(res.status) << ", wrote " << data.counts.rows()
              << "x" << data.counts.cols() << " matrix to " << a.out << '\n';
    return 0;
}

struct BenchArgs {
    std::string input, out;
    std::vector<std::string> methods = method_names();
    std::vector<int> m_list = {50, 200, 500};
    std::vector<double> p_list;
    std::vector<std::string> variants = {"raw", "ceil"};
    int reps = 50;
    std::uint64_t seed = 0;
    int jobs = 1;
    double timeout_s = 600.0;
    std::string design_flag;
};

int run_bench(const BenchArgs& a, SweepDesign design) {
    if (!a.design_flag.empty() && a.design_flag != to_string(design))
        throw std::invalid_argument("--design '" + a.design_flag +
                                    "' contradicts the chosen subcommand (bench-" +
                                    std::string(to_string(design)) + ")");
    require_known_methods(a.methods);

    ExperimentConfig cfg;
    cfg.input_path = a.input;
    cfg.methods = a.methods;
    cfg.m_list = a.m_list;
    cfg.p_list = a.p_list;
    cfg.reps = a.reps;
    cfg.base_seed = a.seed;
    cfg.out_dir = a.out;
    cfg.jobs = a.jobs;
    cfg.timeout_s = a.timeout_s;
    cfg.variant_raw = cfg.variant_ceil = false;
    for (const std::string& v : a.variants) {
        if (v == "raw")
            cfg.variant_raw = true;
        else if (v == "ceil")
            cfg.variant_ceil = true;
        else
            throw std::invalid_argument("unknown variant '" + v + "'; valid variants: raw, ceil");
    }

    const std::vector<MetricRecord> records = design == SweepDesign::sparsity
                                                  ? run_sparsity_sweep(cfg)
                                                  : run_dimension_sweep(cfg);
    emit_plot_data(records, a.out);

    std::size_t ok = 0, failed = 0, degenerate = 0;
    for (const MetricRecord& r : records) {
        ok += r.status == ImputeStatus::ok;
        failed += r.status == ImputeStatus::failed;
        degenerate += r.status == ImputeStatus::degenerate;
    }
    std::cout << "records: " << records.size() << " (ok " << ok << ", degenerate " << degenerate
              << ", failed " << failed << ")\n"
              << "results: " << a.out << "/results.csv\n"
              << "aggregates: " << a.out << "/aggregates\n";
    if (failed == records.size()) {
        std::cerr << "every record failed\n";
        return kExitFailed;
    }
    return 0;
}

struct SimArgs {
    std::vector<double> alpha;
    long depth = 0;
    int n = 0;
    std::uint64_t seed = 0;
    std::string out;
};

int run_simulate(const SimArgs& a) {
    DMSpec spec{a.alpha, a.depth, a.n};
    Rng rng(a.seed);
    const Matrix counts = simulate_dm(spec, rng);
    write_matrix_csv(a.out, counts, default_labels("s", counts.rows()),
                     default_labels("v", counts.cols()));
    std::cout << "wrote " << counts.rows() << "x" << counts.cols() << " counts (depth " << a.depth
              << ") to " << a.out << '\n';
    return 0;
}

struct QuantArgs {
    std::vector<double> alpha = {6.0, 3.0, 1.0};
    long depth = 1000;
    int n = 100;
    std::vector<double> scales = {1.0, 0.1, 0.01, 0.001};
    std::uint64_t seed = 7;
    std::string out;
};

int run_quantize_demo(const QuantArgs& a) {
    DMSpec spec{a.alpha, a.depth, a.n};
    Rng rng(a.seed);
    const ShiftExperiment exp = logratio_shift_experiment(spec, a.scales, rng);

    std::printf("%10s %12s %8s %10s\n", "scale", "mean_lr10", "n_kept", "n_dropped");
    for (const ScaleSummary& s : exp.per_scale)
        std::printf("%10s %12.4f %8d %10d\n", format_double(s.scale).c_str(), s.mean_lr, s.n_kept,
                    s.n_dropped);

    if (!a.out.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(a.out, ec);
        if (ec) throw IoError("cannot create output directory '" + a.out + "'");
        std::string summary = "scale,mean_lr10,n_kept,n_dropped\n";
        for (const ScaleSummary& s : exp.per_scale)
            summary += format_double(s.scale) + ',' + format_double(s.mean_lr) + ',' +
                       std::to_string(s.n_kept) + ',' + std::to_string(s.n_dropped) + '\n';
        write_text_file(a.out + "/summary.csv", summary);
        std::string shifts = "scale,sample,lr_shift\n";
        for (const ShiftRow& r : exp.shifts)
            shifts += format_double(r.scale) + ',' + std::to_string(r.sample) + ',' +
                      format_double(r.lr_shift) + '\n';
        write_text_file(a.out + "/shifts.csv", shifts);
        std::cout << "wrote " << a.out << "/summary.csv and " << a.out << "/shifts.csv\n";
    }
    return 0;
}

struct GenArgs {
    std::string input, out;
    long long depth = 0;
    std::uint64_t seed = 0;
};

int run_gen_nozero(const GenArgs& a) {
    const LabeledCounts data = ingest_csv(a.input);
    Rng rng(a.seed);
    const ZeroFreeResult res = make_zero_free(data.counts, a.depth, rng);
    write_matrix_csv(a.out, res.counts, data.row_labels, data.col_labels);
    std::cout << "zero-free matrix written to " << a.out << " (depth_used " << res.depth_used
              << ", retries " << res.retries << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"zero-imputation toolbox for compositional count data"};
    app.require_subcommand(1);

    ImputeArgs imp;
    CLI::App* impute = app.add_subcommand("impute", "run one method on a count CSV");
    impute->add_option("--input", imp.input, "count matrix CSV (labels + integer cells)")
        ->required();
    impute->add_option("--method", imp.method, "method identifier (" + known_methods() + ")")
        ->required();
    impute->add_option("--out", imp.out, "output CSV path")->required();
    impute->add_option("--seed", imp.seed, "RNG seed for stochastic methods");
    impute->add_option("--timeout-s", imp.timeout_s, "cooperative time limit per method call");

    BenchArgs bs, bd;
    bs.p_list = {0.05, 0.2, 0.4, 0.6, 0.8};
    bd.p_list = {0.2, 0.5};
    auto add_bench_flags = [](CLI::App* cmd, BenchArgs& a) {
        cmd->add_option("--input", a.input, "zero-free count matrix CSV")->required();
        cmd->add_option("--out", a.out, "output directory")->required();
        cmd->add_option("--methods", a.methods, "comma-separated method identifiers")
            ->delimiter(',');
        cmd->add_option("--m", a.m_list, "column counts to sample")->delimiter(',');
        cmd->add_option("--p", a.p_list, "zero-insertion quantile levels in (0,1)")
            ->delimiter(',');
        cmd->add_option("--variants", a.variants, "subset of raw,ceil")->delimiter(',');
        cmd->add_option("--reps", a.reps, "replicates per (m,p) cell");
        cmd->add_option("--seed", a.seed, "base seed");
        cmd->add_option("--jobs", a.jobs, "worker threads");
        cmd->add_option("--timeout-s", a.timeout_s, "per-method time limit in seconds");
        cmd->add_option("--design", a.design_flag,
                        "redundant design confirmation (must match the subcommand)");
    };
    CLI::App* bench_s = app.add_subcommand("bench-sparsity", "sweep zero proportion p at each m");
    add_bench_flags(bench_s, bs);
    CLI::App* bench_d = app.add_subcommand("bench-dimension", "sweep column count m at fixed p");
    add_bench_flags(bench_d, bd);

    SimArgs sim;
    CLI::App* simulate = app.add_subcommand("simulate-dm", "Dirichlet-multinomial count matrix");
    simulate->add_option("--alpha", sim.alpha, "Dirichlet parameters, comma-separated")
        ->delimiter(',')
        ->required();
    simulate->add_option("--depth", sim.depth, "row total")->required();
    simulate->add_option("--n", sim.n, "number of rows")->required();
    simulate->add_option("--seed", sim.seed, "RNG seed");
    simulate->add_option("--out", sim.out, "output CSV path")->required();

    QuantArgs qd;
    CLI::App* quant = app.add_subcommand("quantize-demo",
                                         "log-ratio drift under ceiling quantization");
    quant->add_option("--alpha", qd.alpha, "Dirichlet parameters")->delimiter(',');
    quant->add_option("--depth", qd.depth, "row total");
    quant->add_option("--n", qd.n, "number of rows");
    quant->add_option("--scales", qd.scales, "rescale factors in (0,1]")->delimiter(',');
    quant->add_option("--seed", qd.seed, "RNG seed");
    quant->add_option("--out", qd.out, "optional directory for summary.csv and shifts.csv");

    GenArgs gen;
    CLI::App* nozero = app.add_subcommand("gen-nozero", "replace a zero-bearing count matrix "
                                                        "with a zero-free draw at a target depth");
    nozero->add_option("--input", gen.input, "count matrix CSV, zeros allowed")->required();
    nozero->add_option("--depth", gen.depth, "target row total")->required();
    nozero->add_option("--seed", gen.seed, "RNG seed");
    nozero->add_option("--out", gen.out, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (impute->parsed()) return run_impute(imp);
        if (bench_s->parsed()) return run_bench(bs, SweepDesign::sparsity);
        if (bench_d->parsed()) return run_bench(bd, SweepDesign::dimension);
        if (simulate->parsed()) return run_simulate(sim);
        if (quant->parsed()) return run_quantize_demo(qd);
        if (nozero->parsed()) return run_gen_nozero(gen);
    } catch (const CsvError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
