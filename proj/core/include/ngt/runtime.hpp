#pragma once

namespace ngt {

// Keeps large allocations on the heap for reuse instead of mmap/munmap per
// training step; call once at process start in compute-heavy binaries.
void tune_allocator();

}  // namespace ngt
