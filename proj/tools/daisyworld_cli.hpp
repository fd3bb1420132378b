#pragma once

// Command-line front end: option/config parsing into a RunConfig and the
// dispatch of each subcommand to the library, writing CSV/JSON datasets and
// a run manifest.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <ostream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "daisyworld/daisyworld.hpp"

namespace daisyworld::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kOutputEnv = "DAISYWORLD_OUTPUT_DIR";
inline constexpr const char* kDefaultOutput = "daisyworld-out";

enum class Exit { ok = 0, config = 1, numerical = 2 };

struct EquilibriaConfig {
    std::vector<double> L{1.0};
    friend bool operator==(const EquilibriaConfig&, const EquilibriaConfig&) = default;
};

struct ContinueConfig {
    /// Branch starts as "label@L", e.g. "e2@1.4".
    std::vector<std::string> starts{"e0@1.0", "e2@1.4", "e4@0.68", "e5@1.0"};
    double L_lo = defaults::kLuminosityLo;
    double L_hi = defaults::kLuminosityHi;
    friend bool operator==(const ContinueConfig&, const ContinueConfig&) = default;
};

struct BasinsConfig {
    double L = defaults::kLmax;
    int resolution = defaults::kBasinResolution;
    friend bool operator==(const BasinsConfig&, const BasinsConfig&) = default;
};

struct ManifoldConfig {
    std::string saddle = "e1";
    double L = defaults::kLmax;
    friend bool operator==(const ManifoldConfig&, const ManifoldConfig&) = default;
};

struct TipConfig {
    double L_min = defaults::kLmin;
    double delta_L = defaults::kDeltaL;
    double r = defaults::kFastRate;
    /// Admit ramps that leave the coexistence range (bifurcation territory).
    bool allow_bifurcation = false;
    /// Also bisect for the critical rate within [r_lo, r_hi].
    bool critical_rate = false;
    double r_lo = 1e-3;
    double r_hi = 1e3;
    friend bool operator==(const TipConfig&, const TipConfig&) = default;
};

struct DiagramConfig {
    double L_min = defaults::kLmin;
    double r_min = defaults::kRateLo;
    double r_max = defaults::kRateHi;
    int r_count = defaults::kRateCount;
    double dL_min = defaults::kDeltaLLo;
    double dL_max = defaults::kDeltaLHi;
    int dL_count = defaults::kDeltaLCount;
    friend bool operator==(const DiagramConfig&, const DiagramConfig&) = default;
};

struct ReproduceConfig {
    int resolution = defaults::kBasinResolution;
    friend bool operator==(const ReproduceConfig&, const ReproduceConfig&) = default;
};

struct RunConfig {
    std::string command;
    Params params{};
    int workers = 0;  ///< 0 = all hardware threads
    std::string out_dir = kDefaultOutput;
    EquilibriaConfig equilibria;
    ContinueConfig cont;
    BasinsConfig basins;
    ManifoldConfig manifold;
    TipConfig tip;
    DiagramConfig diagram;
    ReproduceConfig reproduce;
    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parsed "label@L" branch start.
struct BranchStart {
    Label label;
    double L;
};

[[nodiscard]] inline BranchStart parse_start(const std::string& text) {
    const auto at = text.find('@');
    if (at == std::string::npos) throw ConfigError("branch start '" + text + "' must look like label@L, e.g. e2@1.4");
    BranchStart s{parse_label(text.substr(0, at)), 0.0};
    try {
        std::size_t used = 0;
        s.L = std::stod(text.substr(at + 1), &used);
        if (used != text.size() - at - 1) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
        throw ConfigError("branch start '" + text + "' has an unreadable luminosity");
    }
    return s;
}

namespace detail {

inline void check_L(double L, const std::string& what) {
    if (!(L >= defaults::kLuminosityLo && L <= defaults::kLuminosityHi)) {
        throw ConfigError(what + " = " + io::format_double(L) + " lies outside [" +
                          io::format_double(defaults::kLuminosityLo) + ", " +
                          io::format_double(defaults::kLuminosityHi) + "]");
    }
}

inline void check_positive(double v, const std::string& what) {
    if (!(v > 0.0)) throw ConfigError(what + " must be positive");
}

}  // namespace detail

/// Range and consistency checks for the selected subcommand.
inline void validate(const RunConfig& c) {
    using detail::check_L;
    validate(c.params, defaults::kLuminosityLo, defaults::kLuminosityHi);
    if (c.workers < 0) throw ConfigError("workers must be non-negative");
    if (c.command == "equilibria") {
        if (c.equilibria.L.empty()) throw ConfigError("equilibria: at least one L is required");
        for (double L : c.equilibria.L) check_L(L, "equilibria.L");
    } else if (c.command == "continue") {
        check_L(c.cont.L_lo, "continue.L-lo");
        check_L(c.cont.L_hi, "continue.L-hi");
        if (!(c.cont.L_lo < c.cont.L_hi)) throw ConfigError("continue: L-lo must be below L-hi");
        if (c.cont.starts.empty()) throw ConfigError("continue: at least one start is required");
        for (const auto& s : c.cont.starts) {
            const auto st = parse_start(s);
            check_L(st.L, "continue.start");
            if (st.L < c.cont.L_lo || st.L > c.cont.L_hi) throw ConfigError("continue: start " + s + " is outside the L range");
        }
    } else if (c.command == "basins") {
        check_L(c.basins.L, "basins.L");
        if (c.basins.resolution < 2) throw ConfigError("basins: resolution must be at least 2");
    } else if (c.command == "manifold") {
        (void)parse_label(c.manifold.saddle);
        check_L(c.manifold.L, "manifold.L");
    } else if (c.command == "tip") {
        check_L(c.tip.L_min, "tip.Lmin");
        check_L(c.tip.L_min + c.tip.delta_L, "tip.Lmin + tip.dL");
        if (!(c.tip.delta_L >= 0.0)) throw ConfigError("tip: dL must be non-negative");
        detail::check_positive(c.tip.r, "tip.r");
        if (c.tip.critical_rate && !(c.tip.r_lo > 0.0 && c.tip.r_lo < c.tip.r_hi)) {
            throw ConfigError("tip: need 0 < r-lo < r-hi");
        }
    } else if (c.command == "diagram") {
        check_L(c.diagram.L_min, "diagram.Lmin");
        check_L(c.diagram.L_min + c.diagram.dL_max, "diagram.Lmin + diagram.dL-max");
        detail::check_positive(c.diagram.r_min, "diagram.r-min");
        detail::check_positive(c.diagram.dL_min, "diagram.dL-min");
        if (!(c.diagram.r_min < c.diagram.r_max && c.diagram.dL_min < c.diagram.dL_max)) {
            throw ConfigError("diagram: grid bounds must be increasing");
        }
        if (c.diagram.r_count < 2 || c.diagram.dL_count < 2) throw ConfigError("diagram: grids need at least 2 points");
    } else if (c.command == "reproduce-figures-data") {
        if (c.reproduce.resolution < 2) throw ConfigError("reproduce-figures-data: resolution must be at least 2");
    }
}

/// Owns the CLI11 application bound to a RunConfig.
class Parser {
public:
    Parser() : app_("Daisyworld equilibria, continuation, basin geometry and tipping experiments", "daisyworld") {
        build();
    }

    /// Parses argv-style arguments (without the program name). Throws
    /// CLI::ParseError (including CLI::Success for --help) or ConfigError.
    RunConfig parse(std::vector<std::string> args) {
        std::reverse(args.begin(), args.end());  // CLI11 consumes the vector from the back
        const std::string on_command_line = first_subcommand(args);
        app_.parse(args);
        cfg_.command = select_command(on_command_line);
        validate(cfg_);
        return cfg_;
    }

    [[nodiscard]] std::string help() const { return app_.help(); }

    [[nodiscard]] const CLI::App& app() const { return app_; }

private:
    /// Subcommand named among the arguments (reversed order), if any.
    [[nodiscard]] std::string first_subcommand(const std::vector<std::string>& reversed) const {
        for (auto it = reversed.rbegin(); it != reversed.rend(); ++it) {
            if (*it == "--") break;
            for (const auto* sub : app_.get_subcommands({})) {
                if (sub->get_name() == *it) return *it;
            }
        }
        return {};
    }

    /// The command line wins; otherwise the config's `command` key; otherwise
    /// the single subcommand section present in the config file.
    [[nodiscard]] std::string select_command(const std::string& on_command_line) const {
        if (!on_command_line.empty()) return on_command_line;
        if (!config_command_.empty()) {
            if (app_.get_subcommand_no_throw(config_command_) == nullptr) {
                throw ConfigError("unknown command '" + config_command_ + "'");
            }
            return config_command_;
        }
        const auto active = app_.get_subcommands();
        if (active.size() == 1) return active.front()->get_name();
        throw ConfigError(active.empty() ? "a subcommand is required"
                                         : "config selects several subcommands; name one on the command line");
    }

    void build() {
        app_.set_version_flag("--version", std::string(DAISYWORLD_VERSION));
        app_.set_config("--config", "", "INI file with one section per subcommand; flags override it");
        app_.config_formatter(std::make_shared<CLI::ConfigINI>());
        app_.allow_config_extras(CLI::config_extras_mode::error);
        app_.fallthrough();
        app_.add_option("--command", config_command_, "subcommand to run when none is named (for config files)");

        auto& p = cfg_.params;
        app_.add_option("--gamma", p.gamma, "daisy death rate")->capture_default_str();
        app_.add_option("--k", p.k, "growth curve curvature (K^-2)")->capture_default_str();
        app_.add_option("--T-opt", p.T_opt, "optimal growth temperature (K)")->capture_default_str();
        app_.add_option("--S", p.S, "solar flux constant (W m^-2)")->capture_default_str();
        app_.add_option("--sigma", p.sigma, "Stefan-Boltzmann constant")->capture_default_str();
        app_.add_option("--A-w", p.A_w, "white daisy albedo")->capture_default_str();
        app_.add_option("--A-b", p.A_b, "black daisy albedo")->capture_default_str();
        app_.add_option("--A-g", p.A_g, "bare ground albedo")->capture_default_str();
        app_.add_option("--q", p.q, "heat transfer coefficient (K^4)")->capture_default_str();
        app_.add_option("--workers", cfg_.workers, "worker threads for grid commands (0 = all cores)")
            ->capture_default_str();
        app_.add_option("--out", cfg_.out_dir, "output directory")->envname(kOutputEnv)->capture_default_str();

        auto* eq = add_sub("equilibria", "enumerate and classify equilibria at given luminosities");
        eq->add_option("--L", cfg_.equilibria.L, "luminosities")->capture_default_str();

        auto* co = add_sub("continue", "trace equilibrium branches in L and locate folds");
        co->add_option("--start", cfg_.cont.starts, "branch starts as label@L")->capture_default_str();
        co->add_option("--L-lo", cfg_.cont.L_lo, "lower end of the L range")->capture_default_str();
        co->add_option("--L-hi", cfg_.cont.L_hi, "upper end of the L range")->capture_default_str();

        auto* ba = add_sub("basins", "classify a grid of initial states by attractor at frozen L");
        ba->add_option("--L", cfg_.basins.L, "luminosity")->capture_default_str();
        ba->add_option("--resolution", cfg_.basins.resolution, "cells per side")->capture_default_str();

        auto* ma = add_sub("manifold", "stable manifold of a saddle equilibrium");
        ma->add_option("--saddle", cfg_.manifold.saddle, "saddle label (e1..e4)")->capture_default_str();
        ma->add_option("--L", cfg_.manifold.L, "luminosity")->capture_default_str();

        auto* ti = add_sub("tip", "one rate-induced tipping experiment");
        ti->add_option("--Lmin", cfg_.tip.L_min, "starting luminosity")->capture_default_str();
        ti->add_option("--dL", cfg_.tip.delta_L, "total luminosity change")->capture_default_str();
        ti->add_option("--r", cfg_.tip.r, "rate parameter")->capture_default_str();
        ti->add_flag("--allow-bifurcation", cfg_.tip.allow_bifurcation,
                     "allow L_max beyond the coexistence range")
            ->capture_default_str();
        ti->add_flag("--critical-rate", cfg_.tip.critical_rate, "also compute the critical rate")
            ->capture_default_str();
        ti->add_option("--r-lo", cfg_.tip.r_lo, "critical-rate bracket, low end")->capture_default_str();
        ti->add_option("--r-hi", cfg_.tip.r_hi, "critical-rate bracket, high end")->capture_default_str();

        auto* di = add_sub("diagram", "tip/track classification over an (r, dL) grid");
        di->add_option("--Lmin", cfg_.diagram.L_min, "starting luminosity")->capture_default_str();
        di->add_option("--r-min", cfg_.diagram.r_min, "smallest rate")->capture_default_str();
        di->add_option("--r-max", cfg_.diagram.r_max, "largest rate")->capture_default_str();
        di->add_option("--r-count", cfg_.diagram.r_count, "rates (log spaced)")->capture_default_str();
        di->add_option("--dL-min", cfg_.diagram.dL_min, "smallest dL")->capture_default_str();
        di->add_option("--dL-max", cfg_.diagram.dL_max, "largest dL")->capture_default_str();
        di->add_option("--dL-count", cfg_.diagram.dL_count, "dL values (linear)")->capture_default_str();

        auto* re = add_sub("reproduce-figures-data", "write every figure dataset into one bundle");
        re->add_option("--resolution", cfg_.reproduce.resolution, "basin grid cells per side")->capture_default_str();
    }

    CLI::App* add_sub(const std::string& name, const std::string& description) {
        auto* sub = app_.add_subcommand(name, description);
        sub->allow_config_extras(CLI::config_extras_mode::error);
        sub->configurable();
        return sub;
    }

    CLI::App app_;
    RunConfig cfg_;
    std::string config_command_;
};

namespace detail {

inline std::string ini_value(double v) { return io::format_double(v); }
inline std::string ini_value(int v) { return std::to_string(v); }
inline std::string ini_value(bool v) { return v ? "true" : "false"; }
inline std::string ini_value(const std::string& v) { return "\"" + v + "\""; }
template <class T>
std::string ini_value(const std::vector<T>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : " ") + ini_value(x);
    return s;
}

}  // namespace detail

/// Full-precision INI rendering of a RunConfig: every global key, the
/// command, and every subcommand section. Parsing it back (with or without
/// naming the command) yields the same RunConfig.
[[nodiscard]] inline std::string echo(const RunConfig& c) {
    using detail::ini_value;
    std::string s;
    auto kv = [&](const std::string& key, const std::string& value) { s += key + "=" + value + "\n"; };
    auto section = [&](const std::string& name) { s += "[" + name + "]\n"; };
    const Params& p = c.params;
    kv("command", ini_value(c.command));
    kv("gamma", ini_value(p.gamma));
    kv("k", ini_value(p.k));
    kv("T-opt", ini_value(p.T_opt));
    kv("S", ini_value(p.S));
    kv("sigma", ini_value(p.sigma));
    kv("A-w", ini_value(p.A_w));
    kv("A-b", ini_value(p.A_b));
    kv("A-g", ini_value(p.A_g));
    kv("q", ini_value(p.q));
    kv("workers", ini_value(c.workers));
    kv("out", ini_value(c.out_dir));
    section("equilibria");
    kv("L", ini_value(c.equilibria.L));
    section("continue");
    kv("start", ini_value(c.cont.starts));
    kv("L-lo", ini_value(c.cont.L_lo));
    kv("L-hi", ini_value(c.cont.L_hi));
    section("basins");
    kv("L", ini_value(c.basins.L));
    kv("resolution", ini_value(c.basins.resolution));
    section("manifold");
    kv("saddle", ini_value(c.manifold.saddle));
    kv("L", ini_value(c.manifold.L));
    section("tip");
    kv("Lmin", ini_value(c.tip.L_min));
    kv("dL", ini_value(c.tip.delta_L));
    kv("r", ini_value(c.tip.r));
    kv("allow-bifurcation", ini_value(c.tip.allow_bifurcation));
    kv("critical-rate", ini_value(c.tip.critical_rate));
    kv("r-lo", ini_value(c.tip.r_lo));
    kv("r-hi", ini_value(c.tip.r_hi));
    section("diagram");
    kv("Lmin", ini_value(c.diagram.L_min));
    kv("r-min", ini_value(c.diagram.r_min));
    kv("r-max", ini_value(c.diagram.r_max));
    kv("r-count", ini_value(c.diagram.r_count));
    kv("dL-min", ini_value(c.diagram.dL_min));
    kv("dL-max", ini_value(c.diagram.dL_max));
    kv("dL-count", ini_value(c.diagram.dL_count));
    section("reproduce-figures-data");
    kv("resolution", ini_value(c.reproduce.resolution));
    return s;
}

// ---- execution ----------------------------------------------------------------

/// Files written by a command, relative to the output directory, plus any
/// datasets that failed (bundle mode keeps going).
struct RunReport {
    std::vector<std::string> outputs;
    json failures = json::array();
    json summary = json::object();
};

namespace detail {

class Writer {
public:
    Writer(fs::path root, RunReport& report) : root_(std::move(root)), report_(report) {}

    void csv(const std::string& rel, const io::CsvTable& t) { text(rel, t.str()); }
    void json_file(const std::string& rel, const json& j) { text(rel, j.dump(2) + "\n"); }
    void text(const std::string& rel, const std::string& s) {
        io::write_file(root_ / rel, s);
        report_.outputs.push_back(rel);
    }

private:
    fs::path root_;
    RunReport& report_;
};

inline json state_json(State s) { return json::array({s.alpha_w, s.alpha_b}); }

inline json equilibrium_json(const Equilibrium& e) {
    return {{"label", to_string(e.label)},
            {"L", e.L},
            {"state", state_json(e.state)},
            {"stability", to_string(e.stability)},
            {"eigenvalues", json::array({json::array({e.eigenvalues[0].real(), e.eigenvalues[0].imag()}),
                                         json::array({e.eigenvalues[1].real(), e.eigenvalues[1].imag()})})},
            {"T_e", e.T_e}};
}

inline json params_json(const Params& p) {
    return {{"gamma", p.gamma}, {"k", p.k},     {"T_opt", p.T_opt}, {"S", p.S}, {"sigma", p.sigma},
            {"A_w", p.A_w},     {"A_b", p.A_b}, {"A_g", p.A_g},     {"q", p.q}};
}

inline Equilibrium find_equilibrium(Label l, double L, const Params& p) {
    const auto e = equilibria::find_label(equilibria::enumerate_equilibria(L, p), l);
    if (!e) throw ConfigError("no equilibrium " + std::string(to_string(l)) + " at L = " + io::format_double(L));
    return *e;
}

inline json basin_header(const geometry::BasinGrid& g) {
    json legend = json::object();
    for (const auto& a : g.attractors) legend[std::to_string(static_cast<int>(a.label))] = to_string(a.label);
    legend[std::to_string(geometry::kInvalidCell)] = "outside_simplex";
    legend[std::to_string(geometry::kUnresolvedCell)] = "unresolved";
    json attractors = json::array();
    for (const auto& a : g.attractors) attractors.push_back(equilibrium_json(a));
    json areas = json::object();
    for (const auto& a : g.attractors) areas[to_string(a.label)] = g.area_fraction(a.label);
    return {{"L", g.L},
            {"resolution", g.resolution},
            {"cell_centers", "(i + 0.5) / resolution"},
            {"legend", legend},
            {"attractors", attractors},
            {"area_fraction", areas},
            {"unresolved", g.unresolved}};
}

inline std::vector<continuation::Branch> trace_starts(const std::vector<std::string>& starts, double L_lo,
                                                      double L_hi, const Params& p) {
    std::vector<continuation::Branch> out;
    for (const auto& s : starts) {
        const auto st = parse_start(s);
        out.push_back(continuation::trace_both_ways(find_equilibrium(st.label, st.L, p), L_lo, L_hi, p));
    }
    return out;
}

inline tipping::Diagram run_diagram(const DiagramConfig& c, const Params& p, unsigned workers) {
    tipping::DiagramOptions o;
    o.workers = workers;
    return tipping::tipping_diagram(c.L_min, tipping::log_grid(c.r_min, c.r_max, c.r_count),
                                    tipping::linear_grid(c.dL_min, c.dL_max, c.dL_count), p, o);
}

/// Diagram datasets plus a JSON summary with the basin-instability threshold.
inline void write_diagram(Writer& w, const std::string& prefix, const tipping::Diagram& d, const Params& p) {
    w.csv(prefix + "diagram.csv", io::diagram_table(d));
    w.csv(prefix + "critical_curve.csv", io::critical_curve_table(d));
    json j = {{"L_min", d.L_min}, {"unresolved", d.unresolved}};
    try {
        const auto e5 = tipping::stable_coexistence(d.L_min, p);
        const double L_BI = geometry::find_L_BI(e5, d.L_min, d.L_min + d.delta_L_grid.back(), p);
        j["L_BI"] = L_BI;
        j["delta_L_BI"] = L_BI - d.L_min;
    } catch (const BracketError& e) {
        j["L_BI"] = nullptr;
        j["L_BI_error"] = e.what();
    }
    w.json_file(prefix + "diagram.json", j);
}

inline json outcome_json(const tipping::TippingOutcome& o) {
    return {{"L_min", o.forcing.L_min},
            {"delta_L", o.forcing.delta_L},
            {"L_max", o.forcing.L_max()},
            {"r", o.forcing.r},
            {"classification", to_string(o.classification)},
            {"final_attractor", o.final_attractor ? json(to_string(*o.final_attractor)) : json(nullptr)},
            {"crossed_manifold", o.crossed_manifold},
            {"forced_samples", o.forced_samples}};
}

}  // namespace detail

/// Runs the configured subcommand, writing datasets below cfg.out_dir.
inline RunReport execute(const RunConfig& cfg, std::ostream& out) {
    RunReport report;
    detail::Writer w(cfg.out_dir, report);
    const Params& p = cfg.params;
    const unsigned workers = resolve_workers(cfg.workers);

    if (cfg.command == "equilibria") {
        std::vector<Equilibrium> all;
        for (double L : cfg.equilibria.L) {
            auto eqs = equilibria::enumerate_equilibria(L, p);
            all.insert(all.end(), eqs.begin(), eqs.end());
        }
        w.csv("equilibria.csv", io::equilibria_table(all));
        for (const auto& e : all) {
            out << "L=" << io::format_double(e.L) << ' ' << to_string(e.label) << ' ' << to_string(e.stability)
                << '\n';
        }
    } else if (cfg.command == "continue") {
        const auto branches = detail::trace_starts(cfg.cont.starts, cfg.cont.L_lo, cfg.cont.L_hi, p);
        w.csv("branches.csv", io::branches_table(branches));
        w.csv("folds.csv", io::folds_table(branches));
        for (const auto& b : branches) {
            for (const auto& f : b.folds) out << b.label << " fold at L=" << io::format_double(f.L_fold) << '\n';
        }
    } else if (cfg.command == "basins") {
        geometry::BasinOptions o;
        o.workers = workers;
        const auto g = geometry::basin_grid(cfg.basins.L, cfg.basins.resolution, p, o);
        w.csv("basins.csv", io::basin_table(g));
        w.json_file("basins.json", detail::basin_header(g));
    } else if (cfg.command == "manifold") {
        const Label l = parse_label(cfg.manifold.saddle);
        const auto e = detail::find_equilibrium(l, cfg.manifold.L, p);
        if (e.stability != Stability::saddle) {
            throw ConfigError(std::string(to_string(l)) + " at L = " + io::format_double(cfg.manifold.L) +
                              " is " + std::string(to_string(e.stability)) + ", not a saddle");
        }
        const auto c = geometry::stable_manifold(e, p);
        w.csv("manifold.csv", io::manifold_table(c));
        w.json_file("manifold.json", {{"saddle", detail::equilibrium_json(e)}, {"saddle_index", c.saddle_index}});
    } else if (cfg.command == "tip") {
        tipping::ExperimentOptions o;
        o.require_coexistence = !cfg.tip.allow_bifurcation;
        const auto res = tipping::run_experiment({cfg.tip.L_min, cfg.tip.delta_L, cfg.tip.r}, p, o);
        w.csv("trajectory.csv", io::trajectory_table(res.trajectory, p));
        json j = detail::outcome_json(res);
        if (cfg.tip.critical_rate) {
            j["critical_rate"] =
                tipping::critical_rate(cfg.tip.L_min, cfg.tip.delta_L, cfg.tip.r_lo, cfg.tip.r_hi, p, o);
        }
        w.json_file("outcome.json", j);
        out << to_string(res.classification) << '\n';
    } else if (cfg.command == "diagram") {
        const auto d = detail::run_diagram(cfg.diagram, p, workers);
        detail::write_diagram(w, "", d, p);
    } else if (cfg.command == "reproduce-figures-data") {
        using namespace defaults;
        auto dataset = [&](const std::string& name, const std::function<void()>& fn) {
            try {
                fn();
            } catch (const Error& e) {
                report.failures.push_back({{"dataset", name}, {"kind", e.kind()}, {"message", e.what()}});
            }
        };
        dataset("bifurcation", [&] {
            const auto branches = detail::trace_starts(ContinueConfig{}.starts, kLuminosityLo, kLuminosityHi, p);
            w.csv("bifurcation/branches.csv", io::branches_table(branches));
            w.csv("bifurcation/folds.csv", io::folds_table(branches));
        });
        dataset("portraits", [&] {
            std::vector<Equilibrium> eqs;
            io::CsvTable manifolds({"L", "saddle", "alpha_w", "alpha_b"});
            for (double L : kPortraitL) {
                for (const auto& e : equilibria::enumerate_equilibria(L, p)) {
                    eqs.push_back(e);
                    if (e.stability != Stability::saddle) continue;
                    for (const State& s : geometry::stable_manifold(e, p).points) {
                        manifolds.cell(L).cell(to_string(e.label)).cell(s.alpha_w).cell(s.alpha_b);
                    }
                }
            }
            w.csv("portraits/equilibria.csv", io::equilibria_table(eqs));
            w.csv("portraits/manifolds.csv", manifolds);
        });
        dataset("btipping", [&] {
            const auto white = continuation::quasistatic_ramp(detail::find_equilibrium(Label::e2, kWhiteRampStart, p),
                                                              kWhiteRampEnd, p, kRampRate);
            const auto black = continuation::quasistatic_ramp(detail::find_equilibrium(Label::e4, kBlackRampStart, p),
                                                              kBlackRampEnd, p, kRampRate);
            w.csv("btipping/white_ramp.csv", io::trajectory_table(white.trajectory, p));
            w.csv("btipping/black_ramp.csv", io::trajectory_table(black.trajectory, p));
        });
        double L_BI = std::nan("");
        dataset("rtipping", [&] {
            json outcomes = json::array();
            for (double r : {kSlowRate, kFastRate}) {
                const auto res = tipping::run_experiment({kLmin, kDeltaL, r}, p);
                w.csv(r == kSlowRate ? "rtipping/slow.csv" : "rtipping/fast.csv",
                      io::trajectory_table(res.trajectory, p));
                outcomes.push_back(detail::outcome_json(res));
            }
            tipping::ManifoldSurface surface;
            surface.build(kLmin, kLmax, 41, p);
            w.csv("rtipping/manifold_surface.csv", io::manifold_surface_table(surface.curves));
            w.json_file("rtipping/outcomes.json", outcomes);
        });
        dataset("basins", [&] {
            geometry::BasinOptions o;
            o.workers = workers;
            const auto e5 = tipping::stable_coexistence(kLmin, p);
            L_BI = geometry::find_L_BI(e5, kLmin, kLmax, p);
            const auto at_bi = geometry::basin_grid(L_BI, cfg.reproduce.resolution, p, o);
            const auto at_max = geometry::basin_grid(kLmax, cfg.reproduce.resolution, p, o);
            w.csv("basins/basins_L_BI.csv", io::basin_table(at_bi));
            w.csv("basins/basins_L_max.csv", io::basin_table(at_max));
            w.json_file("basins/basins.json", {{"L_min", kLmin},
                                               {"e5_L_min", detail::state_json(e5.state)},
                                               {"L_BI", detail::basin_header(at_bi)},
                                               {"L_max", detail::basin_header(at_max)}});
        });
        dataset("diagram", [&] {
            const auto d = detail::run_diagram(DiagramConfig{}, p, workers);
            detail::write_diagram(w, "diagram/", d, p);
        });
        report.summary["L_BI"] = std::isnan(L_BI) ? json(nullptr) : json(L_BI);
    }
    return report;
}

/// One-line, machine-parsable error report.
[[nodiscard]] inline std::string error_line(std::string_view kind, std::string_view message) {
    return "error: kind=" + std::string(kind) + " message=" + json(std::string(message)).dump();
}

/// Whole program: parse, run, write the manifest. Returns the exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const auto started = std::chrono::steady_clock::now();
    Parser parser;
    RunConfig cfg;
    try {
        cfg = parser.parse(args);
    } catch (const CLI::CallForVersion& v) {
        out << v.what() << '\n';
        return static_cast<int>(Exit::ok);
    } catch (const CLI::Success&) {
        out << parser.help();
        return static_cast<int>(Exit::ok);
    } catch (const CLI::ParseError& e) {
        err << error_line("config", e.what()) << '\n';
        return static_cast<int>(Exit::config);
    } catch (const Error& e) {
        err << error_line(e.kind(), e.what()) << '\n';
        return static_cast<int>(Exit::config);
    }

    RunReport report;
    Exit code = Exit::ok;
    try {
        report = execute(cfg, out);
    } catch (const ConfigError& e) {
        err << error_line(e.kind(), e.what()) << '\n';
        return static_cast<int>(Exit::config);
    } catch (const Error& e) {
        err << error_line(e.kind(), e.what()) << '\n';
        return static_cast<int>(Exit::numerical);
    } catch (const std::exception& e) {
        err << error_line("internal", e.what()) << '\n';
        return static_cast<int>(Exit::numerical);
    }
    for (const auto& f : report.failures) {
        err << error_line(f["kind"].get<std::string>(),
                          f["dataset"].get<std::string>() + ": " + f["message"].get<std::string>())
            << '\n';
        code = Exit::numerical;
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const json manifest = {{"tool", "daisyworld"},
                           {"version", DAISYWORLD_VERSION},
                           {"command", cfg.command},
                           {"config", echo(cfg)},
                           {"params", detail::params_json(cfg.params)},
                           {"workers", resolve_workers(cfg.workers)},
                           {"wall_time_seconds", wall},
                           {"outputs", report.outputs},
                           {"summary", report.summary},
                           {"failures", report.failures}};
    try {
        io::write_file(fs::path(cfg.out_dir) / "manifest.json", manifest.dump(2) + "\n");
    } catch (const Error& e) {
        err << error_line(e.kind(), e.what()) << '\n';
        return static_cast<int>(Exit::config);
    }
    return static_cast<int>(code);
}

}  // namespace daisyworld::cli
