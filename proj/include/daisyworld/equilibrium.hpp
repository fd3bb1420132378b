#pragma once

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <string_view>

#include "daisyworld/errors.hpp"
#include "daisyworld/model.hpp"

namespace daisyworld {

/// e0 dead planet; e1/e2 white only; e3/e4 black only; e5 coexistence.
enum class Label { e0 = 0, e1, e2, e3, e4, e5 };

enum class Stability { stable_node, stable_focus, saddle, unstable_node, unstable_focus };

[[nodiscard]] inline std::string_view to_string(Label l) {
    static constexpr std::array<std::string_view, 6> names{"e0", "e1", "e2", "e3", "e4", "e5"};
    return names[static_cast<int>(l)];
}

[[nodiscard]] inline Label parse_label(std::string_view s) {
    for (int i = 0; i < 6; ++i) {
        if (to_string(static_cast<Label>(i)) == s) return static_cast<Label>(i);
    }
    throw ConfigError("unknown equilibrium label '" + std::string(s) + "'");
}

[[nodiscard]] inline std::string_view to_string(Stability s) {
    switch (s) {
        case Stability::stable_node: return "stable-node";
        case Stability::stable_focus: return "stable-focus";
        case Stability::saddle: return "saddle";
        case Stability::unstable_node: return "unstable-node";
        case Stability::unstable_focus: return "unstable-focus";
    }
    return "?";
}

[[nodiscard]] inline bool is_living(Label l) { return l != Label::e0; }

/// A located fixed point with its linearization.
struct Equilibrium {
    State state;
    double L = 0.0;
    std::array<std::complex<double>, 2> eigenvalues{};
    Stability stability = Stability::saddle;
    Label label = Label::e0;
    double T_e = 0.0;
    /// Some eigenvalue has |Re| below the marginal tolerance (fold neighbourhood).
    bool marginal = false;
    /// A local temperature is within 0.5 K of a growth window edge.
    bool near_cutoff = false;

    [[nodiscard]] bool is_stable() const {
        return !marginal && (stability == Stability::stable_node || stability == Stability::stable_focus);
    }
};

}  // namespace daisyworld
