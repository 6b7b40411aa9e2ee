#pragma once

// Command-line surface: parses a subcommand into an ExperimentConfig, runs it
// and emits a Table as CSV or JSON.
//
// Exit codes: 0 success, 2 usage error (bad flags or violated precondition),
// 3 contract failure (a certified inequality or identity did not hold).

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "arith.hpp"
#include "buchstab.hpp"
#include "euler_product.hpp"
#include "instances.hpp"
#include "interval_sieve.hpp"
#include "selberg.hpp"
#include "table.hpp"

namespace sqfree {

enum class ExitCode : int { ok = 0, failure = 1, usage = 2, contract = 3 };

class usage_error : public std::invalid_argument {
public:
    explicit usage_error(const std::string& what) : std::invalid_argument(what) {}
};

enum class Command { count, density, selberg, buchstab, squaremul, sweep };
enum class OutputFormat { csv, json };

struct ExperimentConfig {
    Command command = Command::count;
    std::vector<u64> xs;
    std::vector<u64> hs;
    std::vector<OffsetTuple> offsets;
    std::optional<std::string> z;  // "auto" or a real
    std::optional<double> lambda0;
    std::optional<PsiChoice> psi;
    std::optional<double> d_lo;
    std::optional<double> d_hi;
    bool lemma1 = false;
    std::size_t random_count = 0;
    InstanceLimits limits{};
    u64 prime_cutoff = kDefaultPrimeCutoff;
    u64 seed = 0;
    unsigned threads = 1;
    OutputFormat format = OutputFormat::csv;
    std::optional<std::string> out;
};

// ---------------------------------------------------------------------------
// Flag parsing
// ---------------------------------------------------------------------------

inline std::string strip_separators(std::string s) {
    s.erase(std::remove(s.begin(), s.end(), '_'), s.end());
    return s;
}

// Non-negative integer; accepts digit separators ("1_000_000") and exact
// scientific notation ("1e9").
inline u64 parse_integer(const std::string& raw) {
    const std::string s = strip_separators(raw);
    u64 v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size() && !s.empty()) return v;
    long double d = 0;
    std::istringstream is(s);
    is.imbue(std::locale::classic());
    if (!(is >> d) || !is.eof() || d < 0 || d > 1.9e19L || d != std::floor(d))
        throw usage_error("not a non-negative integer: '" + raw + "'");
    return static_cast<u64>(d);
}

inline double parse_real(const std::string& raw) {
    const std::string s = strip_separators(raw);
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw usage_error("not a real number: '" + raw + "'");
    return v;
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            parts.push_back(cur);
            cur.clear();
        } else if (ch != ' ') {
            cur += ch;
        }
    }
    parts.push_back(cur);
    return parts;
}

inline std::vector<u64> parse_integer_list(const std::string& s) {
    std::vector<u64> v;
    for (const auto& part : split_list(s)) v.push_back(parse_integer(part));
    return v;
}

inline OffsetTuple parse_offsets(const std::string& s) {
    try {
        return OffsetTuple(parse_integer_list(s));
    } catch (const usage_error&) {
        throw;
    } catch (const std::exception& e) {
        throw usage_error(std::string("--offsets: ") + e.what());
    }
}

inline PsiChoice parse_psi(const std::string& s) {
    if (s == "loglog") return {PsiKind::loglog, 0};
    if (s == "pow23") return {PsiKind::two_thirds_power, 0};
    if (s.rfind("const:", 0) == 0) return {PsiKind::constant, parse_real(s.substr(6))};
    throw usage_error("--psi must be loglog, pow23 or const:C");
}

inline std::string psi_name(const PsiChoice& p) {
    switch (p.kind) {
        case PsiKind::loglog: return "loglog";
        case PsiKind::two_thirds_power: return "pow23";
        case PsiKind::constant: return "const:" + format_real(p.c);
    }
    return "";
}

// Builds a config from command-line arguments (without the program name).
// Returns std::nullopt when help was requested; `help` receives the text.
inline std::optional<ExperimentConfig> parse_config(std::vector<std::string> args, std::string* help = nullptr) {
    CLI::App app{"Exact counts and sieve certificates for squarefree r-tuples in short intervals", "sqfree"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);

    std::string x, h, offsets_single, z, lambda0, psi, d_lo, d_hi, prime_cutoff, seed, threads, format = "csv", out;
    std::vector<std::string> offsets_multi;
    std::string random, max_x, max_h, max_r, max_offset;
    bool lemma1 = false;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--prime-cutoff", prime_cutoff, "Euler-product prime cutoff");
        sub->add_option("--seed", seed, "Seed for randomized instances");
        sub->add_option("--threads", threads, "Worker thread count");
        sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--out", out, "Output path (default: standard output)");
    };

    auto* count = app.add_subcommand("count", "Exact Q_l(x, h)");
    count->add_option("--x", x)->required();
    count->add_option("--h", h)->required();
    count->add_option("--offsets", offsets_single)->required();
    common(count);

    auto* density = app.add_subcommand("density", "Enclosure of A(l)");
    density->add_option("--offsets", offsets_single)->required();
    common(density);

    auto* selberg = app.add_subcommand("selberg", "Selberg upper-bound certificate");
    selberg->add_option("--x", x)->required();
    selberg->add_option("--h", h)->required();
    selberg->add_option("--offsets", offsets_single)->required();
    selberg->add_option("--z", z, "Sieve level: real or auto");
    common(selberg);

    auto* buchstab = app.add_subcommand("buchstab", "Buchstab decomposition ledger");
    buchstab->add_option("--x", x)->required();
    buchstab->add_option("--h", h)->required();
    buchstab->add_option("--offsets", offsets_single)->required();
    buchstab->add_option("--lambda0", lambda0);
    buchstab->add_option("--psi", psi, "loglog, pow23 or const:C");
    common(buchstab);

    auto* squaremul = app.add_subcommand("squaremul", "Count d with a multiple of d^2 in (X, X+h]");
    squaremul->add_option("--x", x)->required();
    squaremul->add_option("--h", h);
    squaremul->add_option("--d-lo", d_lo);
    squaremul->add_option("--d-hi", d_hi);
    squaremul->add_flag("--scaling-table", lemma1, "Emit the scaling table for R in {1,2,4,8}");
    common(squaremul);

    auto* sweep = app.add_subcommand("sweep", "Grid or randomized sweep of exact counts against A(l) h");
    sweep->add_option("--x", x, "Comma-separated x values");
    sweep->add_option("--h", h, "Comma-separated h values");
    sweep->add_option("--offsets", offsets_multi, "Offset tuple (repeatable)");
    sweep->add_option("--random", random, "Number of seeded random instances");
    sweep->add_option("--max-x", max_x);
    sweep->add_option("--max-h", max_h);
    sweep->add_option("--max-r", max_r);
    sweep->add_option("--max-offset", max_offset);
    common(sweep);

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        if (help) *help = app.help();
        return std::nullopt;
    } catch (const CLI::CallForAllHelp&) {
        if (help) *help = app.help();
        return std::nullopt;
    } catch (const CLI::ParseError& e) {
        throw usage_error(e.what());
    }

    ExperimentConfig cfg;
    if (count->parsed()) cfg.command = Command::count;
    if (density->parsed()) cfg.command = Command::density;
    if (selberg->parsed()) cfg.command = Command::selberg;
    if (buchstab->parsed()) cfg.command = Command::buchstab;
    if (squaremul->parsed()) cfg.command = Command::squaremul;
    if (sweep->parsed()) cfg.command = Command::sweep;

    if (!x.empty()) cfg.xs = parse_integer_list(x);
    if (!h.empty()) cfg.hs = parse_integer_list(h);
    if (!offsets_single.empty()) cfg.offsets.push_back(parse_offsets(offsets_single));
    for (const auto& o : offsets_multi) cfg.offsets.push_back(parse_offsets(o));
    if (!z.empty()) {
        if (z != "auto") parse_real(z);
        cfg.z = z;
    }
    if (!lambda0.empty()) cfg.lambda0 = parse_real(lambda0);
    if (!psi.empty()) cfg.psi = parse_psi(psi);
    if (!d_lo.empty()) cfg.d_lo = parse_real(d_lo);
    if (!d_hi.empty()) cfg.d_hi = parse_real(d_hi);
    cfg.lemma1 = lemma1;
    if (!random.empty()) cfg.random_count = parse_integer(random);
    if (!max_x.empty()) cfg.limits.max_x = parse_integer(max_x);
    if (!max_h.empty()) cfg.limits.max_h = parse_integer(max_h);
    if (!max_r.empty()) cfg.limits.max_r = parse_integer(max_r);
    if (!max_offset.empty()) cfg.limits.max_offset = parse_integer(max_offset);
    if (!prime_cutoff.empty()) cfg.prime_cutoff = parse_integer(prime_cutoff);
    if (!seed.empty()) cfg.seed = parse_integer(seed);
    cfg.threads = threads.empty() ? default_thread_count() : static_cast<unsigned>(std::max<u64>(1, parse_integer(threads)));
    cfg.format = format == "json" ? OutputFormat::json : OutputFormat::csv;
    if (!out.empty()) cfg.out = out;

    if (cfg.command != Command::sweep && cfg.command != Command::squaremul) {
        if (cfg.xs.size() > 1 || cfg.hs.size() > 1) throw usage_error("--x and --h take a single value here");
    }
    if (cfg.command == Command::sweep) {
        if (cfg.random_count == 0 && (cfg.xs.empty() || cfg.hs.empty() || cfg.offsets.empty()))
            throw usage_error("sweep needs --x, --h and --offsets, or --random N");
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct RunResult {
    Table table;
    std::vector<std::string> contract_failures;
    std::vector<std::string> warnings;
};

namespace detail {

inline Window single_window(const ExperimentConfig& cfg) {
    if (cfg.xs.size() != 1 || cfg.hs.size() != 1) throw usage_error("exactly one --x and one --h required");
    Window w{cfg.xs[0], cfg.hs[0]};
    return w;
}

inline const OffsetTuple& single_offsets(const ExperimentConfig& cfg) {
    if (cfg.offsets.size() != 1) throw usage_error("exactly one --offsets required");
    return cfg.offsets[0];
}

inline u64 cutoff_for(const ExperimentConfig& cfg, const OffsetTuple& l) {
    if (cfg.prime_cutoff < 2 * l.r() || cfg.prime_cutoff < 2)
        throw usage_error("--prime-cutoff must be at least 2r");
    return cfg.prime_cutoff;
}

// Warns when the theorem hypotheses h <= x and l_r <= x fail.
inline void hypothesis_warnings(const Window& w, const OffsetTuple& l, RunResult& res) {
    if (w.h > w.x) res.warnings.push_back("h > x: outside the theorem regime (counts remain exact)");
    if (l.max_offset() > w.x) res.warnings.push_back("l_r > x: outside the theorem regime (counts remain exact)");
}

inline RunResult run_count(const ExperimentConfig& cfg) {
    RunResult res;
    const Window w = single_window(cfg);
    const OffsetTuple& l = single_offsets(cfg);
    w.validate(l);
    res.table.columns = {"x", "h", "offsets", "r", "q"};
    const u64 q = count_tuples(w, l, {}, cfg.threads);
    res.table.add({w.x, w.h, l.to_string(), static_cast<u64>(l.r()), q});
    return res;
}

inline RunResult run_density(const ExperimentConfig& cfg) {
    RunResult res;
    const OffsetTuple& l = single_offsets(cfg);
    const EulerEstimate est = density_constant(l, cutoff_for(cfg, l), cfg.threads);
    res.table.columns = {"offsets", "r", "prime_cutoff", "lower", "upper", "midpoint", "tail_log_bound",
                         "degenerate", "a_inverse_upper", "inverse_bound", "inverse_bound_holds"};
    const double bound = std::exp(9.0 * std::sqrt(static_cast<double>(l.r())));
    double inv = std::numeric_limits<double>::infinity();
    bool holds = false;
    if (!est.degenerate_zero) {
        inv = std::nextafter(1.0 / est.lower, std::numeric_limits<double>::infinity());
        holds = inv <= bound;
        if (!holds) res.contract_failures.push_back("A(l)^{-1} <= e^{9 sqrt r} not confirmed");
    }
    res.table.add({l.to_string(), static_cast<u64>(l.r()), est.prime_cutoff, est.lower, est.upper, est.midpoint(),
                   est.tail_log_bound, est.degenerate_zero, inv, bound, holds});
    return res;
}

inline RunResult run_selberg(const ExperimentConfig& cfg) {
    RunResult res;
    const Window w = single_window(cfg);
    const OffsetTuple& l = single_offsets(cfg);
    w.validate(l);
    hypothesis_warnings(w, l, res);

    double z = 0;
    if (!cfg.z || *cfg.z == "auto") {
        z = selberg_level(static_cast<double>(w.h), l.r());
        if (!(z > 2.0)) throw usage_error("--z auto gives level " + format_real(z) + " <= 2; pass --z explicitly");
        z = std::min(z, kWeightTableCap);
    } else {
        z = parse_real(*cfg.z);
    }

    const EulerEstimate est = density_constant(l, cutoff_for(cfg, l), cfg.threads);
    const SelbergSystem<double> sys = optimal_weights<double>(z, l, est);
    const UpperBoundCertificate cert = quadratic_form_bound(w, sys, true, cfg.threads);
    const WeightMomentBounds mb = weight_moment_bounds(sys);

    double max_lambda = 0;
    for (double lam : sys.weights) max_lambda = std::max(max_lambda, std::fabs(lam));

    if (!cert.holds()) res.contract_failures.push_back("Selberg quadratic form below exact count");
    if (cert.quadratic_form_value > cert.theorem2_rhs * (1 + 1e-12) + 1e-9)
        res.contract_failures.push_back("quadratic form exceeds h V_min + R");
    if (max_lambda > sys.a_inverse_upper * (1 + 1e-12)) res.contract_failures.push_back("|lambda(d)| > A^{-1}");
    if (!mb.g_holds()) res.contract_failures.push_back("G > A^{-1} U");
    if (mb.applicable && !mb.u_holds()) res.contract_failures.push_back("U > z (2e log z / r)^r");

    res.table.columns = {"x",       "h",      "offsets",     "r",        "z",       "weights",
                         "h_z",     "v_min",  "a_lower",     "a_upper",  "bound",   "exact",
                         "theorem2_rhs", "main_term", "g",   "g_bound",  "u",       "u_bound",
                         "nu",      "moment_bounds_applicable", "max_abs_lambda", "holds"};
    res.table.add({w.x, w.h, l.to_string(), static_cast<u64>(l.r()), z, static_cast<u64>(sys.size()), sys.h_z,
                   sys.v_min, est.lower, est.upper, cert.quadratic_form_value, *cert.exact_count, cert.theorem2_rhs,
                   cert.main_term, mb.g, mb.g_bound, mb.u, mb.u_bound, mb.nu, mb.applicable, max_lambda,
                   res.contract_failures.empty()});
    return res;
}

inline RunResult run_buchstab(const ExperimentConfig& cfg) {
    RunResult res;
    const Window w = single_window(cfg);
    const OffsetTuple& l = single_offsets(cfg);
    w.validate(l);
    hypothesis_warnings(w, l, res);

    std::optional<Theorem1Parameters> t1;
    if (cfg.psi) t1 = theorem1_parameters(std::max(static_cast<double>(w.x), 16.0), l.r(), *cfg.psi);
    const double cutoff = full_cutoff(w, l);
    double lambda0 = 0;
    if (cfg.lambda0) {
        lambda0 = *cfg.lambda0;
    } else if (t1) {
        lambda0 = std::min(t1->lambda0, cutoff);
        if (t1->lambda0 > cutoff) res.warnings.push_back("lambda0 from --psi exceeds the full cutoff; clamped");
    } else {
        throw usage_error("buchstab needs --lambda0 or --psi");
    }

    const BuchstabReport rep = buchstab_ledger(w, l, lambda0, cfg.threads);
    if (rep.reconciliation != 0) res.contract_failures.push_back("R_0 - Sigma != Q_l");
    if (!rep.sigma_within_bound()) res.contract_failures.push_back("Sigma > r max S_nu");
    if (!rep.r0_within_cap()) res.contract_failures.push_back("|R_0 - h W| > prod (1 + u(p))");

    res.table.columns = {"x",     "h",        "offsets",  "r",        "lambda0",     "cutoff",        "r0",
                         "w",     "r0_main",  "r0_error", "h_cap",    "sigma",       "max_s_nu",      "q",
                         "reconciliation", "ledger_rows", "sigma_bound_holds", "psi", "psi_value",
                         "psi_lambda0", "h_min", "hypotheses_ok"};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    res.table.add({w.x, w.h, l.to_string(), static_cast<u64>(l.r()), lambda0, cutoff, rep.r0_exact, rep.w_product,
                   rep.r0_main, rep.r0_error, rep.h_cap, rep.sigma_total, rep.max_s_nu(), rep.exact_count,
                   rep.reconciliation, static_cast<u64>(rep.rnu_q_ledger.size()), rep.sigma_within_bound(),
                   cfg.psi ? psi_name(*cfg.psi) : std::string(), t1 ? t1->psi : nan, t1 ? t1->lambda0 : nan,
                   t1 ? t1->h_min : nan, t1 ? t1->hypotheses_ok : false});
    return res;
}

inline RunResult run_squaremul(const ExperimentConfig& cfg) {
    RunResult res;
    res.table.columns = {"x", "h", "scale", "d_lo", "d_hi", "count", "ratio"};
    if (cfg.xs.size() != 1) throw usage_error("squaremul takes one --x");
    const u64 x = cfg.xs[0];
    if (cfg.lemma1) {
        const double scales[] = {1, 2, 4, 8};
        for (const Lemma1Row& row : lemma1_table(x, scales))
            res.table.add({x, row.h, row.scale, row.lambda, row.d_hi, row.count, row.ratio});
        return res;
    }
    if (cfg.hs.size() != 1 || !cfg.d_lo || !cfg.d_hi)
        throw usage_error("squaremul needs --h, --d-lo and --d-hi (or --scaling-table)");
    const u64 c = count_square_multiples({x, cfg.hs[0], *cfg.d_lo, *cfg.d_hi});
    res.table.add({x, cfg.hs[0], 1.0, *cfg.d_lo, *cfg.d_hi, c, static_cast<double>(c) / static_cast<double>(cfg.hs[0])});
    return res;
}

inline RunResult run_sweep(const ExperimentConfig& cfg) {
    RunResult res;
    std::vector<Instance> grid;
    if (cfg.random_count > 0) {
        InstanceGenerator gen(cfg.seed);
        for (std::size_t i = 0; i < cfg.random_count; ++i) grid.push_back(gen.next(cfg.limits));
    } else {
        for (u64 x : cfg.xs)
            for (u64 h : cfg.hs)
                for (const auto& l : cfg.offsets) grid.push_back({Window{x, h}, l});
    }
    if (grid.empty()) throw usage_error("sweep grid is empty");

    std::map<std::vector<u64>, EulerEstimate> densities;
    res.table.columns = {"x", "h", "r", "offsets", "q", "a_lower", "a_upper", "a_mid", "density", "ratio", "rho",
                         "excess_stat"};
    for (const Instance& inst : grid) {
        const OffsetTuple& l = inst.offsets;
        inst.window.validate(l);
        const std::vector<u64> key(l.offsets().begin(), l.offsets().end());
        auto it = densities.find(key);
        if (it == densities.end()) it = densities.emplace(key, density_constant(l, cutoff_for(cfg, l), cfg.threads)).first;
        const EulerEstimate& est = it->second;
        const u64 q = count_tuples(inst.window, l, {}, cfg.threads);
        const double h = static_cast<double>(inst.window.h);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        const double ratio = est.degenerate_zero ? nan : static_cast<double>(q) / (est.midpoint() * h);
        const double rho = h > std::exp(1.0) ? rho_exponent(h) : nan;
        const double stat = std::max(0.0, ratio - 1.0) * std::pow(h, 1.0 / 3.0 - rho);
        res.table.add({inst.window.x, inst.window.h, static_cast<u64>(l.r()), l.to_string(), q, est.lower, est.upper,
                       est.midpoint(), static_cast<double>(q) / h, ratio, rho, stat});
    }
    return res;
}

} // namespace detail

inline RunResult run(const ExperimentConfig& cfg) {
    switch (cfg.command) {
        case Command::count: return detail::run_count(cfg);
        case Command::density: return detail::run_density(cfg);
        case Command::selberg: return detail::run_selberg(cfg);
        case Command::buchstab: return detail::run_buchstab(cfg);
        case Command::squaremul: return detail::run_squaremul(cfg);
        case Command::sweep: return detail::run_sweep(cfg);
    }
    throw std::logic_error("unknown command");
}

inline void emit(const Table& t, OutputFormat format, std::ostream& os) {
    if (format == OutputFormat::json)
        write_json(t, os);
    else
        write_csv(t, os);
}

// Full CLI entry point. Rows go to --out or `out`; diagnostics to `err`.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        std::string help;
        const auto cfg = parse_config(args, &help);
        if (!cfg) {
            out << help;
            return static_cast<int>(ExitCode::ok);
        }
        const RunResult res = run(*cfg);
        for (const auto& w : res.warnings) err << "warning: " << w << '\n';
        if (cfg->out) {
            std::ofstream file(*cfg->out, std::ios::binary);
            if (!file) throw usage_error("cannot open output file " + *cfg->out);
            emit(res.table, cfg->format, file);
        } else {
            emit(res.table, cfg->format, out);
        }
        if (!res.contract_failures.empty()) {
            for (const auto& f : res.contract_failures) err << "contract failure: " << f << '\n';
            return static_cast<int>(ExitCode::contract);
        }
        return static_cast<int>(ExitCode::ok);
    } catch (const contract_error& e) {
        err << "contract failure: " << e.what() << '\n';
        return static_cast<int>(ExitCode::contract);
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::usage);
    } catch (const std::out_of_range& e) {
        err << "usage error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::usage);
    } catch (const capacity_error& e) {
        err << "usage error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::usage);
    } catch (const degenerate_error& e) {
        err << "usage error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::usage);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::failure);
    }
}

} // namespace sqfree
