#pragma once

namespace normint {

/// Applies the NI_THREADS cap (if set) to the OpenMP runtime. Returns the
/// thread count in effect.
int configure_threads();

}  // namespace normint
