#pragma once

// Central finite-difference checks of every layer type, the loss, and the
// image -> filter -> convolution chains.

#include <cstdint>
#include <string>
#include <vector>

namespace dynenh {

struct GradcheckRow {
    std::string name;
    std::size_t checked = 0;
    std::size_t kinked = 0;  // draws skipped: loss not smooth across the stencil
    double max_rel_error = 0.0;
};

/// Relative error |a-n| / max(|a|,|n|); pairs below `floor` in both magnitudes
/// are compared absolutely against the same floor instead.
double gradcheck_rel_error(double analytic, double numeric, double floor = 1e-9);

std::vector<GradcheckRow> run_gradcheck(std::uint64_t seed, std::size_t coords = 100);

}  // namespace dynenh
