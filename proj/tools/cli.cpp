#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "mrtensor/decompose.hpp"
#include "mrtensor/experiments.hpp"
#include "mrtensor/io.hpp"
#include "mrtensor/theory.hpp"

namespace mrt::cli {

namespace {

std::string num(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::string shape_string(const Shape& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
    return out + ")";
}

Index parse_index(const std::string& tok, const std::string& what) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(tok, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != tok.size() || tok.empty() || v < 0) {
        throw std::invalid_argument(what + ": '" + tok + "' is not a non-negative integer");
    }
    return static_cast<Index>(v);
}

std::vector<Index> parse_rank_list(const std::string& s) {
    std::vector<Index> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(parse_index(tok, "--ranks"));
    if (out.empty()) throw std::invalid_argument("--ranks is empty");
    return out;
}

std::pair<Index, Index> parse_sweep(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("--rank-sweep '" + s + "' must look like a:b");
    return {parse_index(s.substr(0, colon), "--rank-sweep"), parse_index(s.substr(colon + 1), "--rank-sweep")};
}

BaseFormat parse_format(const std::string& s) {
    if (s == "tt") return BaseFormat::TT;
    if (s == "cp") return BaseFormat::CP;
    throw std::invalid_argument("--base-format '" + s + "' must be tt or cp");
}

Index chain_length(Index order, BaseFormat format) {
    return format == BaseFormat::CP ? 1 : std::max<Index>(order - 1, 1);
}

/// Reads an MRT0 tensor or a P5 image, fitting images to the grid block if asked.
DenseTensor load_input(const std::string& path, Index block, FitPolicy policy, std::ostream& out) {
    const std::string bytes = read_file(path);
    if (bytes.compare(0, 2, "P5") == 0) {
        PgmImage img = parse_pgm(bytes, block, policy);
        if (img.policy != "none") out << "input fit: " << img.policy << '\n';
        return std::move(img.pixels);
    }
    return parse_tensor(bytes);
}

Index resolve_levels(Index requested, const Shape& shape, Index batch) {
    if (batch < 2) throw std::invalid_argument("--bs " + std::to_string(batch) + " must be at least 2");
    return requested >= 0 ? requested : GridSpec::max_levels(shape, batch);
}

FitPolicy fit_policy(bool crop, bool pad) {
    if (crop && pad) throw std::invalid_argument("--crop and --pad are mutually exclusive");
    return crop ? FitPolicy::Crop : pad ? FitPolicy::Pad : FitPolicy::None;
}

struct CompressArgs {
    std::string input, output, format = "tt", ranks;
    Index bs = 2;
    Index levels = -1;
    Index rank = -1;
    int max_iter = 10;
    bool restructured = false;
    std::uint64_t seed = 0;
    bool crop = false, pad = false;
};

void compress(const CompressArgs& a, std::ostream& out) {
    const BaseFormat format = parse_format(a.format);
    const Index block_levels = a.levels >= 0 ? a.levels : 0;
    const Index block = a.crop || a.pad ? ipow(a.bs, block_levels) : 1;
    const DenseTensor t = load_input(a.input, block, fit_policy(a.crop, a.pad), out);
    const Index levels = resolve_levels(a.levels, t.shape(), a.bs);

    std::vector<Index> scalars;
    if (a.rank >= 0) {
        scalars.assign(static_cast<std::size_t>(levels + 1), a.rank);
    } else if (!a.ranks.empty()) {
        scalars = parse_rank_list(a.ranks);
    } else {
        throw std::invalid_argument("one of --ranks or --rank is required");
    }
    if (static_cast<Index>(scalars.size()) != levels + 1) {
        throw std::invalid_argument("--ranks has " + std::to_string(scalars.size()) + " entries, expected L+1 = " +
                                    std::to_string(levels + 1));
    }
    DecomposeConfig cfg;
    cfg.ranks = make_rank_vector(scalars, chain_length(t.order(), format));
    cfg.batch = a.bs;
    cfg.levels = levels;
    cfg.max_iter = a.max_iter;
    cfg.format = format;
    cfg.cp.seed = a.seed;
    const DecomposeResult r = a.restructured ? restructured_decompose(t, cfg) : alternating_decompose(t, cfg);
    write_archive(a.output, r.approximation);
    for (const auto& note : r.trace.notes) out << "note: " << note << '\n';
    const StorageReport s = ms_storage(r.approximation);
    out << "levels: " << levels << '\n';
    out << "iterations: " << r.trace.residuals.size() << '\n';
    out << "relative_error: " << num(relative_error(t, r.approximation), 10) << '\n';
    out << "compression_ratio: " << num(s.compression_ratio) << '\n';
}

void decompress(const std::string& input, const std::string& output, std::ostream& out) {
    const MSTensor x = read_archive(input);
    const DenseTensor t = ms_reconstruct(x);
    write_tensor(output, t);
    out << "wrote " << shape_string(t.shape()) << " tensor to " << output << '\n';
}

void info(const std::string& input, std::ostream& out) {
    const MSTensor x = read_archive(input);
    const GridSpec& g = x.grid();
    const StorageReport s = ms_storage(x);
    const std::vector<double> norms = level_norms(x);
    const RankVector ranks = x.ranks();
    out << "format: " << to_string(x.format()) << '\n';
    out << "grid: batch " << g.batch << ", levels " << g.levels << ", base shape " << shape_string(g.base_shape) << '\n';
    for (Index k = 0; k <= g.levels; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        out << "level " << k << ": shape " << shape_string(g.level_shape(k)) << ", ranks "
            << shape_string(ranks[ku]) << ", parameters " << s.level_parameters[ku] << ", norm " << num(norms[ku])
            << '\n';
    }
    out << "total parameters: " << s.total_parameters << '\n';
    out << "dense elements: " << s.dense_elements << '\n';
    out << "compression ratio: " << num(s.compression_ratio) << '\n';
    out << "stability margin: " << num(stability_margin(x)) << '\n';
}

void error_cmd(const std::string& original, const std::string& compressed, std::ostream& out) {
    const DenseTensor t = read_tensor(original);
    const MSTensor x = read_archive(compressed);
    if (t.shape() != x.grid().base_shape) {
        throw std::invalid_argument("original shape " + shape_string(t.shape()) + " does not match archive shape " +
                                    shape_string(x.grid().base_shape));
    }
    out << "relative_error: " << num(relative_error(t, x), 17) << '\n';
}

struct BenchArgs {
    std::string input, format = "tt", sweep, csv;
    Index bs = 2;
    Index levels = -1;
    int max_iter = 10;
    bool restructured = false;
    bool no_timings = false;
    std::uint64_t seed = 0;
    bool crop = false, pad = false;
};

void bench(const BenchArgs& a, std::ostream& out) {
    const Index block = a.crop || a.pad ? ipow(a.bs, std::max<Index>(a.levels, 0)) : 1;
    const DenseTensor t = load_input(a.input, block, fit_policy(a.crop, a.pad), out);
    SweepOptions o;
    o.batch = a.bs;
    o.levels = resolve_levels(a.levels, t.shape(), a.bs);
    std::tie(o.rank_from, o.rank_to) = parse_sweep(a.sweep);
    o.max_iter = a.max_iter;
    o.format = parse_format(a.format);
    o.restructured = a.restructured;
    o.cp.seed = a.seed;
    o.timings = !a.no_timings;
    const std::vector<BenchRow> rows = compression_sweep(t, o);
    write_file_atomic(a.csv, format_csv(rows));
    for (const auto& r : rows) {
        out << r.method << " rank " << r.rank << ": error " << num(r.relative_error) << ", ratio "
            << num(r.compression_ratio) << '\n';
    }
}

Index log_batch(Index n, Index batch) {
    Index levels = 0;
    Index m = n;
    while (m > 1 && m % batch == 0) {
        m /= batch;
        ++levels;
    }
    if (m != 1 || n < 1) throw std::invalid_argument("--n " + std::to_string(n) + " must be a power of " + std::to_string(batch));
    return levels;
}

void demo_multiscale(Index d, Index n_max, bool csv, std::ostream& out) {
    if (log_batch(n_max, 2) < 3) throw std::invalid_argument("--n must be at least 8");
    if (csv) {
        out << "n,ms_cp_error,rank2_cp_error,prescribed_error,bound\n";
    } else {
        out << "n  ms-cp(0..0,1,1,1)  rank-2 CP  prescribed  bound\n";
    }
    for (Index n = 8; n <= n_max; n *= 2) {
        const MultiscaleSample s = multiscale_test_tensor(n, d, 2);
        const Index levels = log_batch(n, 2);
        DecomposeConfig cfg;
        std::vector<Index> scalars(static_cast<std::size_t>(levels + 1), 0);
        for (Index k = levels - 2; k <= levels; ++k) scalars[static_cast<std::size_t>(k)] = 1;
        cfg.ranks = make_rank_vector(scalars, 1);
        cfg.levels = levels;
        cfg.max_iter = 1;
        cfg.format = BaseFormat::CP;
        const double ms = relative_error(s.tensor, alternating_decompose(s.tensor, cfg).approximation);
        const double t_norm = frobenius_norm(s.tensor);
        double smallest_term = std::numeric_limits<double>::infinity();
        for (const auto& term : s.terms) smallest_term = std::min(smallest_term, frobenius_norm(outer(term)));
        const double rank2 = smallest_term / t_norm;
        const double prescribed = relative_error(s.tensor, prescribed_ms_approximation(s.terms, 2));
        BoundInput in{s.terms, {0.25, 0.5, 1.0}, std::vector<std::vector<double>>(3, std::vector<double>(d, 1.0)), 2, 0.0,
                      std::numbers::pi};
        const double bound = scale_separation_bound(in).total / t_norm;
        const char sep = csv ? ',' : ' ';
        const int digits = csv ? 17 : 6;
        out << n << sep << num(ms, digits) << sep << num(rank2, digits) << sep << num(prescribed, digits) << sep
            << num(bound, digits) << '\n';
    }
}

void demo_closedness(double n_max, std::ostream& out) {
    if (!(n_max >= 10.0)) throw std::invalid_argument("--n-max must be at least 10");
    out << "n  error(closed form)  error(numeric)  coarse norm  fine norm\n";
    std::vector<double> ns;
    for (double n = 10.0; n < n_max; n *= 10.0) ns.push_back(n);
    ns.push_back(n_max);
    double err = 0.0;
    double coarse = 0.0;
    for (double n : ns) {
        const ClosednessSample s = closedness_sequence(n);
        const double numeric = frobenius_norm(subtract(ms_reconstruct(s.witness), closedness_limit()));
        err = closedness_error(n);
        const std::vector<double> norms = level_norms(s.witness);
        coarse = frobenius_norm(ext(payload_to_dense(s.witness.payload(0)), 1, 2));
        out << num(n) << "  " << num(err, 10) << "  " << num(numeric, 10) << "  " << num(coarse) << "  "
            << num(norms[1]) << '\n';
    }
    out << "final: error " << num(err) << " while the coarse component norm is " << num(coarse) << '\n';
}

void demo_convergence(Index n, std::uint64_t seed, int max_iter, bool csv, std::ostream& out) {
    const Index levels = log_batch(n, 2);
    if (levels < 5) throw std::invalid_argument("--n must be at least 32");
    std::vector<Index> scalars(static_cast<std::size_t>(levels + 1), 0);
    scalars[3] = std::max<Index>(n / 16, 1);
    for (Index k = 5; k <= levels; ++k) scalars[static_cast<std::size_t>(k)] = std::max<Index>(5 * n / 64, 1);
    const GridSpec grid(2, levels, {n, n});
    std::mt19937_64 rng(seed);
    DecomposeConfig cfg;
    cfg.ranks = make_rank_vector(scalars, 1);
    cfg.levels = levels;
    cfg.max_iter = max_iter;
    cfg.early_stop = 0.0;
    cfg.reference = random_ms_tensor(grid, BaseFormat::TT, cfg.ranks, rng);
    cfg.warm_start = perturb_levels(*cfg.reference, 0.1, rng);
    const DecomposeResult r = restructured_decompose(ms_reconstruct(*cfg.reference), cfg);
    if (csv) out << "level,iteration,error,e_norm,d_norm\n";
    for (const auto& h : r.trace.levels) {
        for (std::size_t i = 0; i < h.errors.size(); ++i) {
            if (csv) {
                out << h.level << ',' << i + 1 << ',' << num(h.errors[i], 17) << ',' << num(h.e_norms[i], 17) << ','
                    << num(h.d_norms[i], 17) << '\n';
            }
        }
        if (!csv) {
            out << "level " << h.level << ": error " << num(h.errors.front()) << " -> " << num(h.errors.back())
                << " after " << h.errors.size() << " iterations\n";
        }
    }
}

void demo_bound(Index d, Index n, std::ostream& out) {
    log_batch(n, 2);
    const MultiscaleSample s = multiscale_test_tensor(n, d, 2);
    BoundInput in{s.terms, {0.25, 0.5, 1.0}, std::vector<std::vector<double>>(3, std::vector<double>(d, 1.0)), 2, 0.0,
                  std::numbers::pi};
    const ScaleBound b = scale_separation_bound(in);
    const double err = frobenius_norm(subtract(s.tensor, ms_reconstruct(prescribed_ms_approximation(s.terms, 2))));
    for (std::size_t t = 0; t < b.delta.size(); ++t) {
        out << "term " << t + 1 << ": radical " << num(block_radical(2, static_cast<Index>(t))) << ", delta "
            << num(b.delta[t]) << ", norm " << num(b.term_norms[t]) << '\n';
    }
    out << "actual error: " << num(err) << '\n';
    out << "bound: " << num(b.total) << '\n';
    out << "large-n bound: " << num(b.large_n) << '\n';
    out << "large-n constant (bound * n / (pi ||u||)): "
        << num(b.large_n * static_cast<double>(n) / (std::numbers::pi * b.term_norms.back())) << '\n';
}

int run_app(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multiresolution tensor compression", "mrtc"};
    app.require_subcommand(1);

    CompressArgs ca;
    auto* c = app.add_subcommand("compress", "Decompose a tensor or PGM image into a multiresolution archive");
    c->add_option("--input", ca.input, "MRT0 tensor or P5 PGM image")->required();
    c->add_option("--base-format", ca.format, "tt or cp")->capture_default_str();
    c->add_option("--bs", ca.bs, "Batch size")->capture_default_str();
    c->add_option("--levels", ca.levels, "Number of levels L (default: largest possible)");
    c->add_option("--ranks", ca.ranks, "Comma-separated per-level ranks r0,...,rL");
    c->add_option("--rank", ca.rank, "Uniform rank for every level");
    c->add_option("--max-iter", ca.max_iter, "Maximum sweeps")->capture_default_str();
    c->add_flag("--restructured", ca.restructured, "Level-by-level sweep");
    c->add_option("--seed", ca.seed, "Seed for CP initialization")->capture_default_str();
    c->add_flag("--crop", ca.crop, "Center-crop images to the grid");
    c->add_flag("--pad", ca.pad, "Edge-pad images to the grid");
    c->add_option("--output", ca.output, "Archive path")->required();
    c->callback([&] { compress(ca, out); });

    std::string d_in, d_out;
    auto* dc = app.add_subcommand("decompress", "Reconstruct an archive to a dense MRT0 tensor");
    dc->add_option("--input", d_in)->required();
    dc->add_option("--output", d_out)->required();
    dc->callback([&] { decompress(d_in, d_out, out); });

    std::string i_in;
    auto* ic = app.add_subcommand("info", "Describe an archive");
    ic->add_option("--input", i_in)->required();
    ic->callback([&] { info(i_in, out); });

    std::string e_orig, e_comp;
    auto* ec = app.add_subcommand("error", "Relative error of an archive against the original");
    ec->add_option("--original", e_orig)->required();
    ec->add_option("--compressed", e_comp)->required();
    ec->callback([&] { error_cmd(e_orig, e_comp, out); });

    BenchArgs ba;
    auto* bc = app.add_subcommand("bench", "Rank sweep against the single-scale baseline");
    bc->add_option("--input", ba.input)->required();
    bc->add_option("--base-format", ba.format)->capture_default_str();
    bc->add_option("--bs", ba.bs)->capture_default_str();
    bc->add_option("--levels", ba.levels);
    bc->add_option("--rank-sweep", ba.sweep, "a:b")->required();
    bc->add_option("--max-iter", ba.max_iter)->capture_default_str();
    bc->add_option("--csv", ba.csv)->required();
    bc->add_flag("--restructured", ba.restructured);
    bc->add_flag("--no-timings", ba.no_timings, "Write 0 in the seconds column");
    bc->add_option("--seed", ba.seed)->capture_default_str();
    bc->add_flag("--crop", ba.crop);
    bc->add_flag("--pad", ba.pad);
    bc->callback([&] { bench(ba, out); });

    auto* demo = app.add_subcommand("demo", "Reproduce the numerical experiments");
    demo->require_subcommand(1);

    Index m_d = 3, m_n = 64;
    bool m_csv = false;
    auto* dm = demo->add_subcommand("multiscale", "Three-scale sine example, MS-CP vs rank-2 CP");
    dm->add_option("--d", m_d)->capture_default_str();
    dm->add_option("--n", m_n)->capture_default_str();
    dm->add_flag("--csv", m_csv);
    dm->callback([&] { demo_multiscale(m_d, m_n, m_csv, out); });

    double cl_n = 1e6;
    auto* dcl = demo->add_subcommand("closedness", "Converging sequence with diverging components");
    dcl->add_option("--n-max", cl_n)->capture_default_str();
    dcl->callback([&] { demo_closedness(cl_n, out); });

    Index cv_n = 64;
    std::uint64_t cv_seed = 0;
    int cv_iter = 30;
    bool cv_csv = false;
    auto* dcv = demo->add_subcommand("convergence", "Local convergence of the restructured sweep");
    dcv->add_option("--n", cv_n)->capture_default_str();
    dcv->add_option("--seed", cv_seed)->capture_default_str();
    dcv->add_option("--max-iter", cv_iter)->capture_default_str();
    dcv->add_flag("--csv", cv_csv);
    dcv->callback([&] { demo_convergence(cv_n, cv_seed, cv_iter, cv_csv, out); });

    Index b_d = 3, b_n = 256;
    auto* db = demo->add_subcommand("bound", "Scale-separation error bound vs actual error");
    db->add_option("--d", b_d)->capture_default_str();
    db->add_option("--n", b_n)->capture_default_str();
    db->callback([&] { demo_bound(b_d, b_n, out); });

    std::vector<std::string> storage{"mrtc"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return run_app(args, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace mrt::cli
