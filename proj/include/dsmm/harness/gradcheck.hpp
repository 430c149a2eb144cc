#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace dsmm::harness {

/// One tiny DSMM setup for checking the analytic meta-gradient against
/// central differences of phi -> meta_loss(virtual_step(theta, phi)).
struct GradcheckCase {
    std::size_t embed_dim = 4;     // D
    std::size_t miner_hidden = 4;  // H
    std::size_t positives = 2;     // m
    std::size_t ratio = 1;         // C
    double alpha = 0.5;
    std::uint64_t seed = 0;
};

struct GradcheckRow {
    GradcheckCase setup;
    double max_rel_error = 0.0;
    double max_abs_analytic = 0.0;
    double max_abs_numeric = 0.0;
    bool passed = false;
};

inline constexpr double kGradcheckTolerance = 1e-4;
inline constexpr double kGradcheckStep = 1e-4;

// D in {2, 4, 8} x H in {4, 8} x C in {1, 3}, m = 2, plus one alpha = 0 row.
std::vector<GradcheckCase> default_grid();

// corrupt_sign flips the analytic gradient before comparing (negative control).
GradcheckRow run_gradcheck_case(const GradcheckCase& setup, bool corrupt_sign = false,
                                double tolerance = kGradcheckTolerance);

// Prints one line per row; returns true when every row passed.
bool run_gradcheck(const std::vector<GradcheckCase>& grid, std::ostream& out, bool corrupt_sign = false,
                   double tolerance = kGradcheckTolerance);

}  // namespace dsmm::harness
