#pragma once

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "agnostic.hpp"
#include "algebra.hpp"
#include "dims.hpp"
#include "hclass.hpp"
#include "learn.hpp"
#include "oig.hpp"

namespace dslab::cli {

enum Exit : int { ok = 0, usage = 1, verdict_fail = 2 };

struct RunConfig {
    std::string command;
    std::string class_path;
    std::string dir; ///< audit batch input
    std::string witness_path;
    std::string cube;   ///< gen: k=..,ell=..,s=..,m=..
    std::string random; ///< gen: k=..,n=..,size=..
    int ell = 1;
    std::optional<int> n;
    std::optional<int> s;
    std::string bound = "reduced";
    std::uint64_t budget_subsets = DimensionOptions{}.subset_budget;
    std::uint64_t budget_matrix = AlgebraOptions{}.matrix_budget;
    std::size_t exact_cap = SearchOptions{}.exact_cap;
    std::uint64_t seed = 0;
    std::string seed_source = "default";
    unsigned jobs = 0;
    std::string format = "json";
    std::string output;

    // learners
    std::size_t target = 0;
    std::size_t m = 100;
    double delta = 0.1;
    std::size_t trials = 200;
    double noise = 0.1;
    std::size_t n1 = 100, rounds = 50, n3 = 200;
    std::size_t cover_d = 0, cover_j = 0;

    void validate() const {
        static const std::vector<std::string> commands{"gen",  "dims", "density", "mu",  "orient", "span",
                                                       "audit", "loo", "pac",     "agnostic", "witness"};
        if (std::find(commands.begin(), commands.end(), command) == commands.end())
            throw InvalidInput("unknown command '" + command + "'");
        if (ell < 1)
            throw InvalidInput("--ell must be >= 1");
        if (format != "json" && format != "csv")
            throw InvalidInput("--format must be json or csv");
        if (bound != "reduced" && bound != "full")
            throw InvalidInput("--bound must be reduced or full");
        if (n && *n < 0)
            throw InvalidInput("--n must be >= 0");
        if (command == "gen") {
            if (cube.empty() == random.empty())
                throw InvalidInput("gen needs exactly one of --cube or --random");
            if (format != "json")
                throw InvalidInput("gen writes class JSON only");
        } else if (command == "audit") {
            if (class_path.empty() == dir.empty())
                throw InvalidInput("audit needs exactly one of --class or --dir");
        } else if (class_path.empty()) {
            throw InvalidInput(command + " needs --class");
        }
        if (command == "witness" && witness_path.empty())
            throw InvalidInput("witness needs --witness");
    }

    AuditOptions audit_options() const {
        AuditOptions o;
        o.search.exact_cap = exact_cap;
        o.dims.subset_budget = budget_subsets;
        o.algebra.matrix_budget = budget_matrix;
        o.algebra.bound = bound == "full" ? DegreeBound::full : DegreeBound::reduced;
        o.algebra.prime_seed = seed;
        return o;
    }
};

inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j{{"command", c.command},
                     {"ell", c.ell},
                     {"bound", c.bound},
                     {"budget_subsets", c.budget_subsets},
                     {"budget_matrix", c.budget_matrix},
                     {"exact_cap", c.exact_cap},
                     {"seed", c.seed},
                     {"seed_source", c.seed_source},
                     {"jobs", c.jobs},
                     {"format", c.format}};
    auto put = [&](const char* key, const std::string& v) {
        if (!v.empty())
            j[key] = v;
    };
    put("class", c.class_path);
    put("dir", c.dir);
    put("witness", c.witness_path);
    put("cube", c.cube);
    put("random", c.random);
    put("output", c.output);
    if (c.n)
        j["n"] = *c.n;
    if (c.s)
        j["s"] = *c.s;
    if (c.command == "loo" || c.command == "pac" || c.command == "agnostic")
        j["target"] = c.target;
    if (c.command == "loo" || c.command == "pac")
        j["m"] = c.m;
    if (c.command == "pac") {
        j["delta"] = c.delta;
        j["trials"] = c.trials;
    }
    if (c.command == "agnostic") {
        j["noise"] = c.noise;
        j["n1"] = c.n1;
        j["T"] = c.rounds;
        j["n3"] = c.n3;
        j["cover_d"] = c.cover_d;
        j["cover_j"] = c.cover_j;
    }
    return j;
}

namespace detail {

inline std::map<std::string, long long> parse_kv(const std::string& spec, const std::vector<std::string>& keys) {
    std::map<std::string, long long> kv;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos)
            throw InvalidInput("expected key=value in '" + spec + "'");
        auto key = item.substr(0, eq);
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw InvalidInput("unknown key '" + key + "' in '" + spec + "'");
        try {
            kv[key] = std::stoll(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw InvalidInput("bad integer for '" + key + "' in '" + spec + "'");
        }
    }
    for (const auto& k : keys)
        if (!kv.count(k))
            throw InvalidInput("missing key '" + k + "' in '" + spec + "'");
    return kv;
}

inline std::string csv_cell(const nlohmann::json& v) {
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"')
            q += '"';
        q += c;
    }
    return q + '"';
}

inline void flatten(const nlohmann::json& j, const std::string& prefix, std::vector<std::string>& head,
                    std::vector<std::string>& row) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items())
            flatten(v, prefix.empty() ? k : prefix + "." + k, head, row);
        return;
    }
    head.push_back(prefix);
    row.push_back(csv_cell(j));
}

inline std::string join(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i)
        out += (i ? "," : "") + cells[i];
    return out + '\n';
}

inline std::string class_id(const std::string& path) { return std::filesystem::path(path).stem().string(); }

template <typename T>
nlohmann::json opt(const std::optional<T>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json dimension_json(const DimensionResult& r) {
    nlohmann::json j{{"value", r.value}, {"exact", r.exact}};
    if (r.witness)
        j["witness"] = to_json(*r.witness);
    return j;
}

inline nlohmann::json subfamily_json(const SubfamilyResult& r) {
    return nlohmann::json{{"density", r.density.str()}, {"members", r.members}, {"exact", r.exact}};
}

struct Outcome {
    nlohmann::json result;
    int code = ok;
};

inline Outcome gen(const RunConfig& c) {
    HypothesisClass h = [&] {
        if (!c.cube.empty()) {
            auto kv = parse_kv(c.cube, {"k", "ell", "s", "m"});
            return gen_cube(static_cast<int>(kv["k"]), static_cast<int>(kv["ell"]), static_cast<int>(kv["s"]),
                            static_cast<int>(kv["m"]));
        }
        auto kv = parse_kv(c.random, {"k", "n", "size"});
        if (kv["size"] < 1)
            throw InvalidInput("size must be >= 1");
        return gen_random(static_cast<int>(kv["k"]), static_cast<int>(kv["n"]),
                          static_cast<std::size_t>(kv["size"]), c.seed);
    }();
    return {to_json(h)};
}

inline Outcome dims(const RunConfig& c, const HypothesisClass& h) {
    DimensionOptions o{c.budget_subsets};
    nlohmann::json j{{"ds", dimension_json(ds_dimension(h, c.ell, o))},
                     {"natarajan", dimension_json(natarajan_dimension(h, c.ell, o))}};
    if (h.k() == 2)
        j["vc"] = vc_dimension(h, o);
    return {j};
}

inline Outcome density_cmd(const RunConfig& c, const HypothesisClass& h) {
    SearchOptions o{c.exact_cap, false};
    auto d = density(h, c.ell);
    return {{{"density", d.str()}, {"value", d.value()}, {"densest", subfamily_json(max_density_subfamily(h, c.ell, SearchMode::exact, o))}}};
}

inline Outcome mu_cmd(const RunConfig& c, const HypothesisClass& h) {
    SearchOptions o{c.exact_cap, false};
    int n = c.n.value_or(h.n());
    auto m = mu(h, n, c.ell, o);
    nlohmann::json j{{"mu", m.value.str()},
                     {"mu_num", m.value.num()},
                     {"mu_den", m.value.den()},
                     {"ceil_mu", m.value.ceil()},
                     {"exact", m.exact},
                     {"coords", nlohmann::json::array()},
                     {"densest", subfamily_json(m.best)}};
    for (int x : m.coords.coords)
        j["coords"].push_back(x + 1);
    auto mp = mu_prime(h, n, o);
    j["mu_prime"] = mp.value.str();
    return {j};
}

inline Outcome orient(const RunConfig& c, const HypothesisClass& h) {
    auto g = build_oig(h);
    auto o = min_max_orientation(g, c.ell);
    return {{{"t_star", o.t_star},
             {"certified", o.certified},
             {"ceil_density", max_density_subfamily(h, c.ell, SearchMode::exact, {c.exact_cap, false}).density.ceil()},
             {"orientation", orientation_to_json(g, o.sigma)}}};
}

inline Outcome span(const RunConfig& c, const HypothesisClass& h) {
    auto o = c.audit_options();
    int s = c.s ? *c.s : [&] {
        auto ds = ds_dimension(h, c.ell, o.dims);
        if (!ds.exact)
            throw BudgetExceeded("DS dimension search exceeded the subset budget; pass --s or raise --budget-subsets");
        return ds.value;
    }();
    auto r = check_spanning(h, c.ell, s, o.algebra);
    return {to_json(r), r.spans ? ok : verdict_fail};
}

inline Outcome witness(const RunConfig& c, const HypothesisClass& h) {
    std::ifstream in(c.witness_path);
    if (!in)
        throw InvalidInput("cannot read witness file '" + c.witness_path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInput(std::string("malformed JSON: ") + e.what());
    }
    bool valid = validate_witness(h, witness_from_json(j));
    return {{{"valid", valid}, {"verdict", valid ? "PASS" : "FAIL"}}, valid ? ok : verdict_fail};
}

inline Outcome loo(const RunConfig& c, const HypothesisClass& h) {
    auto d = SyntheticDistribution::realizable(h, c.target);
    std::mt19937_64 rng(c.seed);
    auto sample = d.sample(rng, c.m);
    auto d_ds = ds_dimension(h, c.ell, {c.budget_subsets});
    nlohmann::json j{{"d_ds", d_ds.value}, {"d_ds_exact", d_ds.exact}};
    try {
        auto r = loo_error(h, sample, c.ell);
        j["mistakes"] = r.mistakes;
        j["t_star"] = r.t_star;
        bool pass = r.mistakes <= r.t_star && (!d_ds.exact || r.t_star <= d_ds.value);
        j["verdict"] = pass ? "PASS" : "FAIL";
        return {j, pass ? ok : verdict_fail};
    } catch (const InvariantViolation& e) {
        j["verdict"] = "FAIL";
        j["error"] = e.what();
        return {j, verdict_fail};
    }
}

inline Outcome pac(const RunConfig& c, const HypothesisClass& h) {
    auto d = SyntheticDistribution::realizable(h, c.target);
    auto r = pac_experiment(h, d, c.ell, c.m, c.delta, c.trials, c.seed, c.jobs, class_id(c.class_path));
    return {to_json(r), r.pass() ? ok : verdict_fail};
}

inline Outcome agnostic(const RunConfig& c, const HypothesisClass& h) {
    auto d = SyntheticDistribution::noisy(h, c.target, c.noise);
    CoverOptions o;
    o.d = c.cover_d;
    o.j = c.cover_j;
    o.jobs = c.jobs;
    auto r = agnostic_pipeline(h, d, c.ell, c.n1, c.rounds, c.n3, c.seed, o, class_id(c.class_path));
    return {to_json(r), r.invariants_hold() ? ok : verdict_fail};
}

inline Outcome audit_one(const RunConfig& c, const HypothesisClass& h, const std::string& id) {
    auto r = audit_theorem(h, c.ell, c.n.value_or(h.n()), c.audit_options(), id);
    return {to_json(r), r.verdict() == "FAIL" ? verdict_fail : ok};
}

inline const std::vector<std::string>& batch_columns() {
    static const std::vector<std::string> cols{"class", "ell",    "n",     "seed",  "budget_subsets",
                                               "budget_matrix", "mu_num", "mu_den", "ceil_mu", "d_ds",
                                               "d_nat", "t_star", "spanning", "verdict", "note"};
    return cols;
}

inline std::vector<std::string> batch_row(const RunConfig& c, const std::string& id, int n, const AuditReport* r,
                                          const std::string& error) {
    std::vector<std::string> row{csv_cell(id), std::to_string(c.ell), std::to_string(n), std::to_string(c.seed),
                                 std::to_string(c.budget_subsets), std::to_string(c.budget_matrix)};
    if (!r) {
        row.insert(row.end(), {"", "", "", "", "", "", "", "ERROR", csv_cell(error)});
        return row;
    }
    auto num = r->mu ? std::optional<std::int64_t>(r->mu->num()) : std::nullopt;
    auto den = r->mu ? std::optional<std::int64_t>(r->mu->den()) : std::nullopt;
    auto ceil = r->mu ? std::optional<std::int64_t>(r->mu->ceil()) : std::nullopt;
    std::string spanning;
    if (r->span_h)
        spanning = r->span_h->spans && (!r->span_w_star || r->span_w_star->spans) ? "yes" : "no";
    for (auto* s : {&num, &den, &ceil})
        row.push_back(*s ? std::to_string(**s) : "");
    row.push_back(r->d_ds ? std::to_string(*r->d_ds) : "");
    row.push_back(r->d_nat ? std::to_string(*r->d_nat) : "");
    row.push_back(r->t_star ? std::to_string(*r->t_star) : "");
    row.push_back(spanning);
    row.push_back(r->verdict());
    row.push_back(csv_cell(r->note));
    return row;
}

/// Audits every *.json class under the directory in name order. CSV rows
/// are flushed as each class completes.
inline int audit_batch(const RunConfig& c, std::ostream& out, std::ostream& err) {
    std::vector<std::filesystem::path> files;
    std::error_code ec;
    for (const auto& e : std::filesystem::directory_iterator(c.dir, ec))
        if (e.is_regular_file() && e.path().extension() == ".json")
            files.push_back(e.path());
    if (ec)
        throw InvalidInput("cannot read directory '" + c.dir + "'");
    std::sort(files.begin(), files.end());

    bool any_fail = false, any_error = false;
    nlohmann::json results = nlohmann::json::array();
    if (c.format == "csv")
        out << join(batch_columns()) << std::flush;
    for (const auto& f : files) {
        auto id = f.stem().string();
        std::optional<AuditReport> r;
        std::string error;
        int n = c.n.value_or(0);
        try {
            auto h = load_class(f.string());
            n = c.n.value_or(h.n());
            r = audit_theorem(h, c.ell, n, c.audit_options(), id);
            any_fail = any_fail || r->verdict() == "FAIL";
        } catch (const Error& e) {
            error = e.what();
            any_error = true;
            err << id << ": " << error << '\n';
        }
        if (c.format == "csv") {
            out << join(batch_row(c, id, n, r ? &*r : nullptr, error)) << std::flush;
        } else {
            results.push_back(r ? to_json(*r) : nlohmann::json{{"class", id}, {"verdict", "ERROR"}, {"error", error}});
        }
    }
    if (c.format == "json")
        out << nlohmann::json{{"config", to_json(c)}, {"results", results}}.dump(2) << '\n';
    return any_fail ? verdict_fail : any_error ? usage : ok;
}

inline std::string hint(const BudgetExceeded&) {
    return "hint: raise --budget-subsets, --budget-matrix or --exact-cap, or shrink the class";
}

} // namespace detail

/// Runs a validated configuration, writing the report to `out` (or to the
/// configured output file). Returns the process exit code.
inline int dispatch(const RunConfig& c, std::ostream& out, std::ostream& err) {
    std::ofstream file;
    std::ostream* sink = &out;
    try {
        c.validate();
        if (!c.output.empty()) {
            file.open(c.output);
            if (!file)
                throw InvalidInput("cannot write '" + c.output + "'");
            sink = &file;
        }
        if (c.command == "audit" && !c.dir.empty())
            return detail::audit_batch(c, *sink, err);

        detail::Outcome r;
        if (c.command == "gen") {
            r = detail::gen(c);
            r.result["config"] = to_json(c);
            *sink << r.result.dump() << '\n';
            return ok;
        }
        auto h = load_class(c.class_path);
        if (c.command == "dims")
            r = detail::dims(c, h);
        else if (c.command == "density")
            r = detail::density_cmd(c, h);
        else if (c.command == "mu")
            r = detail::mu_cmd(c, h);
        else if (c.command == "orient")
            r = detail::orient(c, h);
        else if (c.command == "span")
            r = detail::span(c, h);
        else if (c.command == "audit")
            r = detail::audit_one(c, h, detail::class_id(c.class_path));
        else if (c.command == "loo")
            r = detail::loo(c, h);
        else if (c.command == "pac")
            r = detail::pac(c, h);
        else if (c.command == "agnostic")
            r = detail::agnostic(c, h);
        else
            r = detail::witness(c, h);

        nlohmann::json doc{{"config", to_json(c)}, {"result", r.result}};
        if (c.format == "csv") {
            std::vector<std::string> head, row;
            detail::flatten(doc, "", head, row);
            *sink << detail::join(head) << detail::join(row);
        } else {
            *sink << doc.dump(2) << '\n';
        }
        return r.code;
    } catch (const BudgetExceeded& e) {
        err << "error: " << e.what() << '\n' << detail::hint(e) << '\n';
        return usage;
    } catch (const InvariantViolation& e) {
        err << "invariant violated: " << e.what() << '\n';
        return verdict_fail;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    }
}

/// Parses argv into a RunConfig; nullopt with `code` set when the process
/// should exit without dispatching (help, usage errors).
inline std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
                                           int& code) {
    RunConfig c;
    std::optional<std::uint64_t> seed;
    CLI::App app{"dslab: one-inclusion graphs, DS dimension, density and list learners"};
    app.require_subcommand(1);
    app.fallthrough();

    app.add_option("--class", c.class_path, "hypothesis class JSON");
    app.add_option("--dir", c.dir, "directory of class JSON files (audit batch)");
    app.add_option("--witness", c.witness_path, "shattering witness JSON");
    app.add_option("--cube", c.cube, "gen: k=..,ell=..,s=..,m=..");
    app.add_option("--random", c.random, "gen: k=..,n=..,size=..");
    app.add_option("--ell", c.ell, "list size");
    app.add_option("--n", c.n, "number of sample coordinates");
    app.add_option("--s", c.s, "span: support bound (default d_DS)");
    app.add_option("--bound", c.bound, "monomial degree caps: reduced|full");
    app.add_option("--seed", seed, "seed (falls back to DSLAB_SEED)");
    app.add_option("--jobs", c.jobs, "worker threads (0: all cores)");
    app.add_option("--budget-subsets", c.budget_subsets, "coordinate subsets per dimension search");
    app.add_option("--budget-matrix", c.budget_matrix, "entries per evaluation matrix");
    app.add_option("--exact-cap", c.exact_cap, "largest family for exact densest-subfamily search");
    app.add_option("--format", c.format, "json|csv");
    app.add_option("-o,--output", c.output, "output file");
    app.add_option("--target", c.target, "index of the target hypothesis");
    app.add_option("--m", c.m, "sample size");
    app.add_option("--delta", c.delta, "confidence parameter");
    app.add_option("--trials", c.trials, "PAC trials");
    app.add_option("--noise", c.noise, "agnostic label noise rate");
    app.add_option("--n1", c.n1, "agnostic cover sample size");
    app.add_option("--T", c.rounds, "agnostic MW rounds");
    app.add_option("--n3", c.n3, "agnostic inside-menu sample size");
    app.add_option("--cover-d", c.cover_d, "cover subsample size (0: 4 d_DS)");
    app.add_option("--cover-j", c.cover_j, "cover union count (0: ceil log2 n1)");

    for (const char* name : {"gen", "dims", "density", "mu", "orient", "span", "audit", "loo", "pac", "agnostic",
                             "witness"})
        app.add_subcommand(name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        code = app.exit(e, out, err) == 0 ? ok : usage;
        return std::nullopt;
    }
    c.command = app.get_subcommands().front()->get_name();
    if (seed) {
        c.seed = *seed;
        c.seed_source = "flag";
    } else if (const char* env = std::getenv("DSLAB_SEED")) {
        try {
            std::size_t used = 0;
            c.seed = std::stoull(env, &used);
            if (used != std::string(env).size())
                throw std::invalid_argument(env);
        } catch (const std::exception&) {
            err << "error: DSLAB_SEED must be an unsigned integer\n";
            code = usage;
            return std::nullopt;
        }
        c.seed_source = "env";
    }
    return c;
}

inline int main_entry(int argc, const char* const* argv, std::ostream& out = std::cout,
                      std::ostream& err = std::cerr) {
    int code = ok;
    auto c = parse_args(argc, argv, out, err, code);
    if (!c)
        return code;
    return dispatch(*c, out, err);
}

} // namespace dslab::cli
