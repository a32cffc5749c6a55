#include "vax/parallel.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace vax {

namespace {
#if defined(_OPENMP)
const int kDefaultThreads = omp_get_max_threads();
#endif
}  // namespace

void set_threads(int threads) {
#if defined(_OPENMP)
    omp_set_num_threads(threads > 0 ? threads : kDefaultThreads);
#else
    (void)threads;
#endif
}

int max_threads() {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace vax
