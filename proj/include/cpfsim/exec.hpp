#pragma once

namespace cpfsim {

/// Selects between the serial reference kernels and their OpenMP versions.
/// Both produce bit-identical results; the serial path is kept as the
/// reference for tests and benchmarks.
enum class Exec { serial, parallel };

/// Sets the OpenMP worker count for subsequent parallel kernels. Values < 1
/// leave the runtime default untouched.
void set_worker_count(int threads);

int worker_count();

}  // namespace cpfsim
