#pragma once

namespace tarml {

// Selects between the OpenMP kernel and its serial reference. Both produce
// bit-identical results: parallel loops only distribute independent outputs,
// never reorder a reduction.
enum class Exec { kSerial, kParallel };

// Number of OpenMP threads available to parallel kernels (1 without OpenMP).
int max_threads();

}  // namespace tarml
