#pragma once

#include <stdexcept>
#include <string>

namespace hexquant {

/// Invalid geometric input: collinear triangle vertices, center outside a
/// polygon, degenerate moment legs, and the like.
struct geometry_error : std::runtime_error {
    explicit geometry_error(const std::string& what) : std::runtime_error(what) {}
};

/// A configuration left the near-identity regime the closed forms need
/// (negative radicand, violated sign condition, Phi below the guard,
/// nonpositive Jacobian determinant).
struct regime_error : std::runtime_error {
    explicit regime_error(const std::string& what) : std::runtime_error(what) {}
};

/// Singular matrix where an inverse or determinant division is required.
struct singular_error : regime_error {
    explicit singular_error(const std::string& what) : regime_error(what) {}
};

/// Hexagon-mode Voronoi construction produced a cell that is not the
/// six-neighbor hexagon. Signals that the deformation is too large for the
/// fast path; the general mode remains valid.
struct mode_violation_error : geometry_error {
    explicit mode_violation_error(const std::string& what) : geometry_error(what) {}
};

/// A flow step could not make progress (time step underflow away from any
/// energy plateau).
struct stagnation_error : std::runtime_error {
    explicit stagnation_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace hexquant
