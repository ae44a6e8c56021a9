#pragma once

// Benchmark runner for the zero-imputation methods.
//
// A sweep iterates cells (m, p, rep).  Each cell samples m columns from the
// zero-free input (seeded, shared by every method so comparisons are
// paired), zeroes the cells below the per-column p-quantile in every second
// sampled column, runs each configured method under a cooperative time
// limit, and scores the outcome against the sampled truth.  A failing
// method yields a failed record; it never aborts the sweep.
//
// Determinism contract: (config, base_seed) fixes results.csv down to the
// byte, independent of worker count.  All RNG streams are derived from
// base_seed ^ rep plus role/method tags, cells are written in one canonical
// order regardless of completion order, and the persisted runtime_s column
// is "nan": wall time is telemetry, not payload, so it lives only in the
// in-memory records and in aggregates/runtime_summary.csv.

#include <coda/countlab.hpp>
#include <coda/csv.hpp>
#include <coda/imputers.hpp>
#include <coda/metrics.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace coda {

enum class SweepDesign { sparsity, dimension };

inline const char* to_string(SweepDesign d) {
    return d == SweepDesign::sparsity ? "sparsity" : "dimension";
}

struct ExperimentConfig {
    // Input resolution order: a preloaded matrix wins, then a CSV path, then
    // a Dirichlet-multinomial spec (which must happen to be zero-free).
    Matrix input;
    std::string input_path;
    std::optional<DMSpec> input_dm;

    SweepDesign design = SweepDesign::sparsity;
    std::vector<int> m_list = {50, 200, 500};
    std::vector<double> p_list = {0.05, 0.2, 0.4, 0.6, 0.8};
    std::vector<std::string> methods = method_names();
    int reps = 50;
    std::uint64_t base_seed = 0;
    bool variant_raw = true;
    bool variant_ceil = true;
    std::string out_dir;  // empty: in-memory run, nothing persisted
    int jobs = 1;
    double timeout_s = 600.0;  // per method call, cooperative
    MethodParams params;
};

namespace detail {

inline Matrix resolve_input(const ExperimentConfig& cfg) {
    if (cfg.input.size() > 0) return cfg.input;
    if (!cfg.input_path.empty()) return ingest_csv(cfg.input_path).counts;
    if (cfg.input_dm) {
        Rng rng(child_seed(cfg.base_seed, "dm-input"));
        Matrix x = simulate_dm(*cfg.input_dm, rng);
        if ((x.array() <= 0.0).any())
            throw std::invalid_argument(
                "sweep input: simulated counts contain zeros; increase depth or run gen-nozero");
        return x;
    }
    throw std::invalid_argument("sweep input: no input matrix, path, or simulation spec given");
}

inline void validate_experiment(const ExperimentConfig& cfg, const Matrix& input) {
    if (input.rows() < 2 || input.cols() < 2)
        throw std::invalid_argument("sweep input: need at least a 2x2 count matrix");
    for (Eigen::Index i = 0; i < input.rows(); ++i)
        for (Eigen::Index j = 0; j < input.cols(); ++j) {
            const double v = input(i, j);
            if (!(v > 0.0) || !std::isfinite(v) || v != std::floor(v))
                throw std::invalid_argument(
                    "sweep input: cell (" + std::to_string(i) + "," + std::to_string(j) +
                    ") is not a strictly positive integer; run gen-nozero on zero-bearing data");
        }
    if (cfg.m_list.empty()) throw std::invalid_argument("sweep: empty m list");
    for (int m : cfg.m_list)
        if (m < 2 || m > input.cols())
            throw std::invalid_argument("sweep: m must lie in [2, input columns], got " +
                                        std::to_string(m));
    if (cfg.p_list.empty()) throw std::invalid_argument("sweep: empty p list");
    for (double p : cfg.p_list)
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("sweep: p must lie in (0,1), got " + format_double(p));
    if (cfg.reps < 1) throw std::invalid_argument("sweep: reps must be >= 1");
    if (cfg.jobs < 1) throw std::invalid_argument("sweep: jobs must be >= 1");
    if (cfg.timeout_s < 0.0) throw std::invalid_argument("sweep: timeout must be >= 0");
    if (cfg.methods.empty()) throw std::invalid_argument("sweep: no methods selected");
    const std::vector<std::string>& known = method_names();
    for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
        if (std::find(known.begin(), known.end(), cfg.methods[i]) == known.end())
            throw std::invalid_argument("sweep: unknown method '" + cfg.methods[i] + "'");
        for (std::size_t j = 0; j < i; ++j)
            if (cfg.methods[j] == cfg.methods[i])
                throw std::invalid_argument("sweep: duplicate method '" + cfg.methods[i] + "'");
    }
    if (!cfg.variant_raw && !cfg.variant_ceil)
        throw std::invalid_argument("sweep: select at least one of the raw/ceil variants");
}

// Unbiased integer draw in [0, k) by rejection on the top of the range.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t k) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % k;
    std::uint64_t r = rng.raw();
    while (r >= limit) r = rng.raw();
    return r % k;
}

// m distinct column indices, ascending, via a partial Fisher-Yates shuffle.
inline std::vector<int> sample_columns(Eigen::Index total, int m, Rng& rng) {
    std::vector<int> idx(static_cast<std::size_t>(total));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < m; ++i) {
        const std::uint64_t j =
            static_cast<std::uint64_t>(i) +
            uniform_index(rng, static_cast<std::uint64_t>(total) - static_cast<std::uint64_t>(i));
        std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    }
    idx.resize(static_cast<std::size_t>(m));
    std::sort(idx.begin(), idx.end());
    return idx;
}

inline void score_record(MetricRecord& rec, const Matrix& truth, const ImputationResult& res,
                         const Mask& mask) {
    rec.status = res.status;
    rec.neg_rows = static_cast<int>(res.diag.negative_rows.size());
    if (res.status != ImputeStatus::ok) return;
    // Metric preconditions (masked rows present, two fully observed rows,
    // non-proportional spread) are properties of the cell, not of the
    // method; an ok run without a defined score keeps that metric NaN.
    try {
        rec.ced = ced(truth, res.values, mask);
    } catch (const std::exception&) {
    }
    try {
        rec.adcs = adcs(truth, res.values);
    } catch (const std::exception&) {
    }
}

struct Cell {
    int m = 0;
    double p = 0.0;
    int rep = 0;
};

inline std::vector<MetricRecord> run_cell(const ExperimentConfig& cfg, const Matrix& input,
                                          const Cell& cell) {
    const std::uint64_t rep_seed =
        replicate_seed(cfg.base_seed, static_cast<std::uint64_t>(cell.rep));
    const std::uint64_t p_bits = std::bit_cast<std::uint64_t>(cell.p);

    Rng col_rng(child_seed(rep_seed, "columns", static_cast<std::uint64_t>(cell.m), p_bits));
    const std::vector<int> cols = sample_columns(input.cols(), cell.m, col_rng);
    Matrix truth(input.rows(), cell.m);
    for (int k = 0; k < cell.m; ++k) truth.col(k) = input.col(cols[static_cast<std::size_t>(k)]);

    const ZeroInsertion zi = insert_zeros_every_second(truth, cell.p);

    std::vector<MetricRecord> out;
    for (const std::string& method : cfg.methods) {
        MethodParams params = cfg.params;
        if (params.time_limit_s <= 0.0) params.time_limit_s = cfg.timeout_s;
        const std::uint64_t seed =
            child_seed(rep_seed, method, static_cast<std::uint64_t>(cell.m), p_bits);

        MetricRecord base;
        base.method = method;
        base.m = cell.m;
        base.p = cell.p;
        base.rep = cell.rep;

        ImputationResult res;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            res = run_method(method, zi.counts, zi.plan.realized_dl, seed, params);
        } catch (const std::exception& e) {
            res = ImputationResult{};
            res.status = ImputeStatus::failed;
            res.reason = e.what();
        }
        const double raw_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        // GBM reports closed proportions; pull them back onto the observed
        // count scale so the ceiling variant lands on the count lattice like
        // every other method.  Metrics are row-scale invariant either way.
        if (method == "GBM" && res.status != ImputeStatus::failed)
            for (Eigen::Index i = 0; i < res.values.rows(); ++i)
                res.values.row(i) *= zi.counts.row(i).sum();

        MetricRecord raw = base;
        raw.runtime_s = raw_secs;
        score_record(raw, truth, res, zi.plan.realized_mask);
        if (cfg.variant_raw) out.push_back(raw);

        if (cfg.variant_ceil) {
            MetricRecord crec = base;
            crec.variant = "ceil";
            if (res.status == ImputeStatus::failed) {
                crec.status = res.status;
                crec.neg_rows = raw.neg_rows;
                crec.runtime_s = raw_secs;
            } else {
                const auto t1 = std::chrono::steady_clock::now();
                const ImputationResult ceiled = apply_ceiling(res);
                score_record(crec, truth, ceiled, zi.plan.realized_mask);
                crec.runtime_s =
                    raw_secs +
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
            }
            out.push_back(crec);
        }
    }
    return out;
}

// Record keys in the canonical persisted order for one cell.
inline std::vector<std::pair<std::string, std::string>> cell_record_keys(
    const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> keys;
    for (const std::string& method : cfg.methods) {
        if (cfg.variant_raw) keys.emplace_back(method, "raw");
        if (cfg.variant_ceil) keys.emplace_back(method, "ceil");
    }
    return keys;
}

// The persisted line: canonical payload only, wall time stays in memory.
inline std::string persist_line(MetricRecord r) {
    r.runtime_s = std::numeric_limits<double>::quiet_NaN();
    return to_csv_line(r);
}

inline std::uint64_t matrix_fingerprint(const Matrix& x) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const std::string& s) {
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        h ^= static_cast<unsigned char>(';');
        h *= 1099511628211ull;
    };
    mix(std::to_string(x.rows()));
    mix(std::to_string(x.cols()));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) mix(format_double(x(i, j)));
    return h;
}

inline nlohmann::json build_manifest(const ExperimentConfig& cfg, const Matrix& input) {
    nlohmann::json j;
    j["schema"] = 1;
    j["package"] = "coda 0.1.0";
    j["design"] = to_string(cfg.design);
    j["m_list"] = cfg.m_list;
    j["p_list"] = cfg.p_list;
    j["methods"] = cfg.methods;
    j["reps"] = cfg.reps;
    j["base_seed"] = cfg.base_seed;
    j["variants"] = [&] {
        std::vector<std::string> v;
        if (cfg.variant_raw) v.push_back("raw");
        if (cfg.variant_ceil) v.push_back("ceil");
        return v;
    }();
    j["timeout_s"] = cfg.timeout_s;
    j["input"] = {{"rows", input.rows()},
                  {"cols", input.cols()},
                  {"fingerprint", matrix_fingerprint(input)}};
    const MethodParams& mp = cfg.params;
    j["params"] = {
        {"fraction", mp.fraction},
        {"lognorm_random", mp.lognorm_random},
        {"km_draws", mp.km_draws},
        {"prior_kind", static_cast<int>(mp.prior.kind)},
        {"prior_strength", mp.prior.strength},
        {"em", {{"max_iter", mp.em.max_iter}, {"tol", mp.em.tol}, {"reference", mp.em.reference}, {"screen_top_k", mp.em.screen_top_k}}},
        {"da", {{"n_iter", mp.da.n_iter}, {"burn_in", mp.da.burn_in}, {"reference", mp.da.reference}}},
        {"svd", {{"rank", mp.svd.rank}, {"beta", mp.svd.beta}, {"tol", mp.svd.tol}, {"max_iter", mp.svd.max_iter}}},
        {"pls", {{"n_components", mp.pls.n_components}, {"max_iter", mp.pls.max_iter}, {"tol", mp.pls.tol}}},
    };
    return j;
}

inline bool parse_persisted_record(const std::string& line, MetricRecord& rec) {
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 10) return false;
    try {
        rec.method = f[0];
        rec.variant = f[1];
        rec.m = std::stoi(f[2]);
        rec.p = std::stod(f[3]);
        rec.rep = std::stoi(f[4]);
        if (f[5] == "ok")
            rec.status = ImputeStatus::ok;
        else if (f[5] == "degenerate")
            rec.status = ImputeStatus::degenerate;
        else if (f[5] == "failed")
            rec.status = ImputeStatus::failed;
        else
            return false;
        rec.ced = f[6].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[6]);
        rec.adcs = f[7].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[7]);
        rec.runtime_s = std::stod(f[8]);
        rec.neg_rows = std::stoi(f[9]);
    } catch (const std::exception&) {
        return false;
    }
    return true;
}

struct ResumeScan {
    std::size_t cells_done = 0;
    std::uintmax_t keep_bytes = 0;
    std::vector<MetricRecord> records;
};

// Walk an existing results file against the canonical record sequence and
// keep the longest prefix of complete, matching cells.  Anything after it
// (a torn line, a half-written cell) is discarded by truncation.
inline ResumeScan scan_results(const std::string& path, const ExperimentConfig& cfg,
                               const std::vector<Cell>& cells) {
    ResumeScan scan;
    std::ifstream in(path, std::ios::binary);
    if (!in) return scan;
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    const std::string header = std::string(metric_csv_header()) + "\n";
    if (content.compare(0, header.size(), header) != 0) return scan;
    std::size_t pos = header.size();
    scan.keep_bytes = pos;

    const auto keys = cell_record_keys(cfg);
    for (const Cell& cell : cells) {
        std::vector<MetricRecord> cell_records;
        std::size_t cell_end = pos;
        bool complete = true;
        for (const auto& key : keys) {
            const std::size_t eol = content.find('\n', cell_end);
            if (eol == std::string::npos) {
                complete = false;
                break;
            }
            MetricRecord rec;
            if (!parse_persisted_record(content.substr(cell_end, eol - cell_end), rec) ||
                rec.method != key.first || rec.variant != key.second || rec.m != cell.m ||
                rec.p != cell.p || rec.rep != cell.rep) {
                complete = false;
                break;
            }
            cell_records.push_back(std::move(rec));
            cell_end = eol + 1;
        }
        if (!complete) break;
        pos = cell_end;
        scan.keep_bytes = pos;
        ++scan.cells_done;
        for (auto& r : cell_records) scan.records.push_back(std::move(r));
    }
    return scan;
}

inline std::vector<MetricRecord> run_sweep(const ExperimentConfig& cfg) {
    const Matrix input = resolve_input(cfg);
    validate_experiment(cfg, input);

    std::vector<Cell> cells;
    for (int m : cfg.m_list)
        for (double p : cfg.p_list)
            for (int rep = 0; rep < cfg.reps; ++rep) cells.push_back(Cell{m, p, rep});

    namespace fs = std::filesystem;
    const bool persist = !cfg.out_dir.empty();
    std::vector<MetricRecord> records;
    std::size_t first_cell = 0;
    std::ofstream out;

    if (persist) {
        std::error_code ec;
        fs::create_directories(cfg.out_dir, ec);
        if (ec) throw IoError("cannot create output directory '" + cfg.out_dir + "'");
        const std::string results_path = cfg.out_dir + "/results.csv";
        const std::string manifest_path = cfg.out_dir + "/manifest.json";
        const nlohmann::json manifest = build_manifest(cfg, input);

        bool resumable = false;
        if (fs::exists(results_path) && fs::exists(manifest_path)) {
            try {
                std::ifstream mf(manifest_path);
                resumable = mf && nlohmann::json::parse(mf) == manifest;
            } catch (const std::exception&) {
                resumable = false;
            }
        }
        if (resumable) {
            ResumeScan scan = scan_results(results_path, cfg, cells);
            std::error_code trunc_ec;
            fs::resize_file(results_path, scan.keep_bytes, trunc_ec);
            if (trunc_ec) throw IoError("cannot truncate '" + results_path + "' for resume");
            first_cell = scan.cells_done;
            records = std::move(scan.records);
        } else {
            write_text_file(manifest_path, manifest.dump(2) + "\n");
            write_text_file(results_path, std::string(metric_csv_header()) + "\n");
        }
        out.open(results_path, std::ios::app);
        if (!out) throw IoError("cannot open '" + results_path + "' for appending");
    }

    auto write_cell_records = [&](const std::vector<MetricRecord>& recs) {
        if (!persist) return;
        for (const MetricRecord& r : recs) out << persist_line(r) << '\n';
        out.flush();
        if (!out) throw IoError("write to results.csv failed");
    };

    if (cfg.jobs == 1) {
        for (std::size_t i = first_cell; i < cells.size(); ++i) {
            std::vector<MetricRecord> recs = run_cell(cfg, input, cells[i]);
            write_cell_records(recs);
            for (auto& r : recs) records.push_back(std::move(r));
        }
        return records;
    }

    // Workers pull cells from a shared counter; the writer drains them in
    // canonical order so the persisted bytes never depend on scheduling.
    std::atomic<std::size_t> next{first_cell};
    std::atomic<bool> bail{false};
    std::mutex mu;
    std::condition_variable cv;
    std::map<std::size_t, std::vector<MetricRecord>> ready;
    std::exception_ptr worker_error;

    auto worker = [&] {
        while (!bail.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) break;
            try {
                std::vector<MetricRecord> recs = run_cell(cfg, input, cells[i]);
                std::lock_guard<std::mutex> lock(mu);
                ready.emplace(i, std::move(recs));
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!worker_error) worker_error = std::current_exception();
                bail.store(true);
            }
            cv.notify_all();
        }
        cv.notify_all();
    };

    std::vector<std::thread> pool;
    for (int t = 0; t < cfg.jobs; ++t) pool.emplace_back(worker);

    std::exception_ptr writer_error;
    for (std::size_t want = first_cell; want < cells.size(); ++want) {
        std::vector<MetricRecord> recs;
        {
            std::unique_lock<std::mutex> lock(mu);
            cv.wait(lock, [&] { return ready.count(want) > 0 || bail.load(); });
            if (ready.count(want) == 0) break;
            recs = std::move(ready[want]);
            ready.erase(want);
        }
        try {
            write_cell_records(recs);
        } catch (...) {
            writer_error = std::current_exception();
            bail.store(true);
            break;
        }
        for (auto& r : recs) records.push_back(std::move(r));
    }
    for (auto& t : pool) t.join();
    if (writer_error) std::rethrow_exception(writer_error);
    {
        std::lock_guard<std::mutex> lock(mu);
        if (worker_error) std::rethrow_exception(worker_error);
    }
    return records;
}

}  // namespace detail

/** Sparsity design: iterate the p grid at each m. */
inline std::vector<MetricRecord> run_sparsity_sweep(ExperimentConfig cfg) {
    cfg.design = SweepDesign::sparsity;
    return detail::run_sweep(cfg);
}

/** Dimension design: the same cell protocol, iterating m at fixed p levels. */
inline std::vector<MetricRecord> run_dimension_sweep(ExperimentConfig cfg) {
    cfg.design = SweepDesign::dimension;
    return detail::run_sweep(cfg);
}

/**
 * Aggregate records into plot-ready CSVs under <out_dir>/aggregates:
 * metric summaries per (method, variant, m, p), the same averaged across p,
 * runtime telemetry, and failure rates.  Returns the written paths.
 */
inline std::vector<std::string> emit_plot_data(const std::vector<MetricRecord>& records,
                                               const std::string& out_dir) {
    if (records.empty()) throw std::invalid_argument("emit_plot_data: no records");
    namespace fs = std::filesystem;
    const std::string dir = out_dir + "/aggregates";
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir + "'");

    using Key = std::tuple<std::string, std::string, int, double>;
    std::map<Key, std::vector<const MetricRecord*>> groups;
    for (const MetricRecord& r : records)
        groups[Key{r.method, r.variant, r.m, r.p}].push_back(&r);

    auto finite = [](const std::vector<double>& v) {
        std::vector<double> out;
        for (double x : v)
            if (std::isfinite(x)) out.push_back(x);
        return out;
    };
    auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    // mean, q1, median, q3 or empty fields when no finite samples exist
    auto stats4 = [&](const std::vector<double>& raw) {
        const std::vector<double> v = finite(raw);
        if (v.empty()) return std::string(",,,");
        return format_double(mean(v)) + ',' + format_double(quantile_linear(v, 0.25)) + ',' +
               format_double(quantile_linear(v, 0.5)) + ',' +
               format_double(quantile_linear(v, 0.75));
    };

    std::string metrics_csv =
        "method,variant,m,p,n,n_ok,ced_mean,ced_q1,ced_median,ced_q3,"
        "adcs_mean,adcs_q1,adcs_median,adcs_q3\n";
    std::string runtime_csv = "method,variant,m,p,n,n_timed,runtime_mean_s,runtime_median_s\n";
    // Per-(method,variant,m) means of the per-p mean metrics, for trend
    // plots that average across zero proportions.
    std::map<std::tuple<std::string, std::string, int>, std::pair<std::vector<double>, std::vector<double>>>
        across_p;

    for (const auto& [key, recs] : groups) {
        const auto& [method, variant, m, p] = key;
        std::vector<double> ceds, adcss, times;
        int n_ok = 0;
        for (const MetricRecord* r : recs) {
            if (r->status == ImputeStatus::ok) {
                ++n_ok;
                ceds.push_back(r->ced);
                adcss.push_back(r->adcs);
            }
            times.push_back(r->runtime_s);
        }
        const std::string prefix = method + ',' + variant + ',' + std::to_string(m) + ',' +
                                   format_double(p) + ',' + std::to_string(recs.size());
        metrics_csv += prefix + ',' + std::to_string(n_ok) + ',' + stats4(ceds) + ',' +
                       stats4(adcss) + '\n';

        const std::vector<double> timed = finite(times);
        runtime_csv += prefix + ',' + std::to_string(timed.size()) + ',';
        if (!timed.empty())
            runtime_csv += format_double(mean(timed)) + ',' +
                           format_double(quantile_linear(timed, 0.5));
        else
            runtime_csv += ",";
        runtime_csv += '\n';

        const std::vector<double> fc = finite(ceds), fa = finite(adcss);
        if (!fc.empty())
            across_p[{method, variant, m}].first.push_back(mean(fc));
        if (!fa.empty())
            across_p[{method, variant, m}].second.push_back(mean(fa));
    }

    std::string by_m_csv = "method,variant,m,n_p_levels,ced_mean,adcs_mean\n";
    for (const auto& [key, pair] : across_p) {
        const auto& [method, variant, m] = key;
        by_m_csv += method + ',' + variant + ',' + std::to_string(m) + ',' +
                    std::to_string(pair.first.size()) + ',';
        by_m_csv += pair.first.empty() ? "" : format_double(mean(pair.first));
        by_m_csv += ',';
        by_m_csv += pair.second.empty() ? "" : format_double(mean(pair.second));
        by_m_csv += '\n';
    }

    std::string failures_csv =
        "method,variant,m,p,n,n_ok,n_failed,n_degenerate,n_negative_rows,"
        "failure_rate,degenerate_rate,mean_runtime_ok_s\n";
    for (const FailureSummary& f : failure_accounting(records)) {
        failures_csv += f.method + ',' + f.variant + ',' + std::to_string(f.m) + ',' +
                        format_double(f.p) + ',' + std::to_string(f.n_records) + ',' +
                        std::to_string(f.n_ok) + ',' + std::to_string(f.n_failed) + ',' +
                        std::to_string(f.n_degenerate) + ',' + std::to_string(f.n_negative_rows) +
                        ',' + format_double(f.failure_rate) + ',' +
                        format_double(f.degenerate_rate) + ',' +
                        format_double(f.mean_runtime_ok) + '\n';
    }

    const std::vector<std::string> paths = {
        dir + "/metrics_summary.csv",
        dir + "/metrics_by_m.csv",
        dir + "/runtime_summary.csv",
        dir + "/failure_rates.csv",
    };
    write_text_file(paths[0], metrics_csv);
    write_text_file(paths[1], by_m_csv);
    write_text_file(paths[2], runtime_csv);
    write_text_file(paths[3], failures_csv);
    return paths;
}

}  // namespace coda
