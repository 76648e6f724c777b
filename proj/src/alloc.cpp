#include "resgene/alloc.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace resgene {

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 32 << 20);  // glibc ceiling on 64-bit
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace resgene
