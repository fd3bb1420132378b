#pragma once

// CSV export of trajectories, equilibria, branches, manifolds, basin grids
// and tipping diagrams. Dialect: comma separated, '.' decimal point, 17
// significant digits, one header row, LF line endings.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "daisyworld/continuation.hpp"
#include "daisyworld/equilibrium.hpp"
#include "daisyworld/errors.hpp"
#include "daisyworld/geometry.hpp"
#include "daisyworld/model.hpp"
#include "daisyworld/solver.hpp"
#include "daisyworld/tipping.hpp"

namespace daisyworld::io {

/// Output file could not be created or written.
class IoError : public ConfigError {
public:
    using ConfigError::ConfigError;
    [[nodiscard]] const char* kind() const noexcept override { return "io"; }
};

/// 17 significant digits (exact round trip), locale independent.
[[nodiscard]] inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return {buf, res.ptr};
}

/// Row-at-a-time CSV builder; write the text out with write_file().
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : columns_(header.size()) { add_row(header); }

    CsvTable& cell(double v) { return cell(format_double(v)); }
    CsvTable& cell(int v) { return cell(std::to_string(v)); }
    CsvTable& cell(std::string_view v) {
        if (pending_ > 0) text_ += ',';
        text_ += v;
        if (++pending_ == columns_) {
            text_ += '\n';
            pending_ = 0;
        }
        return *this;
    }

    [[nodiscard]] const std::string& str() const { return text_; }

private:
    void add_row(const std::vector<std::string>& values) {
        for (const auto& v : values) cell(std::string_view(v));
    }

    std::size_t columns_;
    std::size_t pending_ = 0;
    std::string text_;
};

/// Writes `text` to `path` in binary mode (LF endings on every platform),
/// creating parent directories.
inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out.flush()) throw IoError("failed writing " + path.string());
}

// ---- tables ---------------------------------------------------------------

/// t, alpha_w, alpha_b, [L], T_e. `L_frozen` supplies T_e for autonomous runs.
[[nodiscard]] inline CsvTable trajectory_table(const solver::Trajectory& traj, const Params& p, double L_frozen = 0.0) {
    const bool forced = traj.forced();
    std::vector<std::string> header{"t", "alpha_w", "alpha_b"};
    if (forced) header.emplace_back("L");
    header.emplace_back("T_e");
    CsvTable t(header);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double L = forced ? traj.forcing_values[i] : L_frozen;
        t.cell(traj.times[i]).cell(traj.states[i].alpha_w).cell(traj.states[i].alpha_b);
        if (forced) t.cell(L);
        t.cell(L > 0.0 ? detail::climate_unchecked(traj.states[i], L, p).T_e : std::nan(""));
    }
    return t;
}

inline std::vector<std::string> equilibrium_columns() {
    return {"L", "alpha_w", "alpha_b", "label", "stability", "re1", "im1", "re2", "im2", "T_e"};
}

inline void equilibrium_cells(CsvTable& t, const Equilibrium& e) {
    t.cell(e.L).cell(e.state.alpha_w).cell(e.state.alpha_b);
    t.cell(to_string(e.label)).cell(to_string(e.stability));
    for (const auto& ev : e.eigenvalues) t.cell(ev.real()).cell(ev.imag());
    t.cell(e.T_e);
}

[[nodiscard]] inline CsvTable equilibria_table(const std::vector<Equilibrium>& eqs) {
    CsvTable t(equilibrium_columns());
    for (const auto& e : eqs) equilibrium_cells(t, e);
    return t;
}

/// One row per continuation point, tagged with the branch name. The `fold`
/// column is 1 on the point nearest each detected fold, else 0.
[[nodiscard]] inline CsvTable branches_table(const std::vector<continuation::Branch>& branches) {
    auto cols = equilibrium_columns();
    cols.insert(cols.begin(), "branch");
    cols.emplace_back("fold");
    CsvTable t(cols);
    for (const auto& br : branches) {
        std::vector<int> marker(br.points.size(), 0);
        for (const auto& f : br.folds) {
            std::size_t nearest = 0;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < br.points.size(); ++i) {
                const double d = std::hypot(distance(br.points[i].state, f.equilibrium.state), br.points[i].L - f.L_fold);
                if (d < best) {
                    best = d;
                    nearest = i;
                }
            }
            if (!br.points.empty()) marker[nearest] = 1;
        }
        for (std::size_t i = 0; i < br.points.size(); ++i) {
            t.cell(br.label);
            equilibrium_cells(t, br.points[i]);
            t.cell(marker[i]);
        }
    }
    return t;
}

[[nodiscard]] inline CsvTable folds_table(const std::vector<continuation::Branch>& branches) {
    CsvTable t({"branch", "L_fold", "alpha_w", "alpha_b", "T_e", "eigen_confirmed"});
    for (const auto& br : branches) {
        for (const auto& f : br.folds) {
            t.cell(br.label).cell(f.L_fold).cell(f.equilibrium.state.alpha_w).cell(f.equilibrium.state.alpha_b);
            t.cell(f.equilibrium.T_e).cell(f.eigen_confirmed ? 1 : 0);
        }
    }
    return t;
}

/// alpha_w, alpha_b ordered by arclength.
[[nodiscard]] inline CsvTable manifold_table(const geometry::ManifoldCurve& c) {
    CsvTable t({"alpha_w", "alpha_b"});
    for (const State& s : c.points) t.cell(s.alpha_w).cell(s.alpha_b);
    return t;
}

/// Several manifolds tagged with their luminosity (a sampled surface).
[[nodiscard]] inline CsvTable manifold_surface_table(const std::vector<geometry::ManifoldCurve>& curves) {
    CsvTable t({"L", "alpha_w", "alpha_b"});
    for (const auto& c : curves) {
        for (const State& s : c.points) t.cell(c.L).cell(s.alpha_w).cell(s.alpha_b);
    }
    return t;
}

/// Basin matrix: one row per alpha_b cell centre, one column per alpha_w
/// cell centre; entries are attractor ids (label index), -1 outside the
/// simplex, -2 unresolved.
[[nodiscard]] inline CsvTable basin_table(const geometry::BasinGrid& g) {
    std::vector<std::string> header{"alpha_b"};
    for (int i = 0; i < g.resolution; ++i) header.push_back(format_double(g.center(i, 0).alpha_w));
    CsvTable t(header);
    for (int j = 0; j < g.resolution; ++j) {
        t.cell(g.center(0, j).alpha_b);
        for (int i = 0; i < g.resolution; ++i) t.cell(g.at(i, j));
    }
    return t;
}

[[nodiscard]] inline CsvTable diagram_table(const tipping::Diagram& d) {
    CsvTable t({"r", "delta_L", "classification"});
    for (std::size_t i = 0; i < d.r_grid.size(); ++i) {
        for (std::size_t j = 0; j < d.delta_L_grid.size(); ++j) {
            t.cell(d.r_grid[i]).cell(d.delta_L_grid[j]).cell(to_string(d.at(i, j)));
        }
    }
    return t;
}

/// Per-r critical delta_L; rows without a tipping cell are omitted.
[[nodiscard]] inline CsvTable critical_curve_table(const tipping::Diagram& d) {
    CsvTable t({"r", "delta_L_crit"});
    for (std::size_t i = 0; i < d.r_grid.size(); ++i) {
        if (!std::isnan(d.critical_delta_L[i])) t.cell(d.r_grid[i]).cell(d.critical_delta_L[i]);
    }
    return t;
}

}  // namespace daisyworld::io
