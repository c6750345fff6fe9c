#include "normint/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace normint {

int configure_threads() {
#ifdef _OPENMP
  if (const char* env = std::getenv("NI_THREADS"); env != nullptr && *env != '\0') {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace normint
