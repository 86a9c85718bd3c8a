#pragma once

// Unit conventions. Everything inside the library is in atomic units
// (hartree, bohr, electron masses, hbar in a.u.); wavenumbers only appear at
// the I/O boundary.

namespace superscar::units {

/// Wavenumbers per hartree.
inline constexpr double kCmPerHartree = 219474.6313632;

/// Electron masses per unified atomic mass unit.
inline constexpr double kElectronMassPerAmu = 1822.888486209;

inline constexpr double kPi = 3.14159265358979323846;

constexpr double cm_to_hartree(double cm) { return cm / kCmPerHartree; }
constexpr double hartree_to_cm(double eh) { return eh * kCmPerHartree; }
constexpr double amu_to_me(double amu) { return amu * kElectronMassPerAmu; }

} // namespace superscar::units
