#pragma once

// Self-contained property suites behind `kglab verify --which ...`.

#include <cstdint>
#include <string>
#include <vector>

#include "kglab/iteration.hpp"

namespace kglab {

using SuiteReport = ClosedFormReport;

/// ODE residuals of I0, J0 at random points, exact values at 0, the lower
/// bounds I0 >= 1 and I1(x) >= x/2, series/asymptotic seam, std oracle.
SuiteReport verify_bessel_suite(std::uint64_t seed = 20240601);

/// Stationary solution, observed pde_residual order in the three regimes,
/// initial conditions and finite speed of propagation.
SuiteReport verify_kernel_suite();

/// Standard blow-up run: first lower bound, iteration frame with the
/// pinned one-dimensional constants and envelopes j = 0..5.
SuiteReport verify_frame_suite();

/// Exact rational and log-domain checks of the iteration sequences.
SuiteReport verify_closed_forms_suite();

/// Dispatches on "bessel", "kernel", "frame" or "closed-forms".
SuiteReport run_verify_suite(const std::string& which, std::uint64_t seed = 20240601);

/// Parameters of the critical configuration used by the suites: n = 2,
/// p = 3/2, q = 2 (pq = 3, theta = 0) with frame constants C = K = 1/2.
ModelParams critical_reference_params();

}  // namespace kglab
