#pragma once

namespace sqfit {

/// Execution mode for the data-parallel kernels. Every kernel has a serial
/// reference path that produces bit-identical results; tests and the
/// benchmark tool compare the two.
enum class Exec { serial, parallel };

}  // namespace sqfit
