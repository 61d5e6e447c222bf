#pragma once

#include <cstdint>
#include <ostream>

namespace sqfit {

/// Validate the analytic radial-distance gradient against central finite
/// differences (h = 1e-6) on random configurations constrained to
/// ||t|| in [0.2, 10] and F in [0.1, 10]. Returns true when every
/// configuration agrees to relative error < 1e-5.
bool gradient_check(int n_configs, std::uint64_t seed, std::ostream& log);

}  // namespace sqfit
