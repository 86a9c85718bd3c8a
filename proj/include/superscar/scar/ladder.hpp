#pragma once

#include <sstream>
#include <vector>

#include "superscar/classical/periodic_orbit.hpp"
#include "superscar/errors.hpp"

namespace superscar::scar {

/// Bohr-Sommerfeld hbar values that put the n-th excitation band of an
/// orbit with reduced action S and Maslov index nu at the orbit's energy:
///
///     hbar(n) = S / (n + nu / 4)
struct BSLadder {
    double S = 0.0; // reduced action (action / 2 pi), a.u.
    int nu = 0;
    struct Entry {
        int n = 0;
        double hbar = 0.0;
    };
    std::vector<Entry> entries;

    double effective_n(int n) const { return n + nu / 4.0; }
};

inline BSLadder bs_ladder(double S, int nu, int n_lo, int n_hi) {
    if (!(S > 0.0)) throw ContractError("Bohr-Sommerfeld ladder needs a positive action");
    if (nu < 0) throw ContractError("Maslov index must be non-negative");
    if (n_hi < n_lo) throw ContractError("empty n range");
    BSLadder L;
    L.S = S;
    L.nu = nu;
    for (int n = n_lo; n <= n_hi; ++n) {
        const double q = n + nu / 4.0;
        if (!(q > 0.0)) {
            std::ostringstream os;
            os << "n + nu/4 must be positive (n = " << n << ", nu = " << nu << ")";
            throw ContractError(os.str());
        }
        L.entries.push_back({n, S / q});
    }
    return L;
}

inline BSLadder bs_ladder(const classical::PeriodicOrbit& po, int n_lo, int n_hi) {
    return bs_ladder(po.reduced_action(), po.maslov, n_lo, n_hi);
}

} // namespace superscar::scar
