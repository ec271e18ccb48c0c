#include "ddrgs/parallel.hpp"

#include <algorithm>

#ifdef DDRGS_HAVE_OPENMP
#include <omp.h>
#endif

namespace ddrgs {

void set_num_threads(int n) {
#ifdef DDRGS_HAVE_OPENMP
  omp_set_num_threads(std::max(1, n));
#else
  (void)n;
#endif
}

int num_threads() {
#ifdef DDRGS_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace ddrgs
