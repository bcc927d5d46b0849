#include <cstdlib>
#include <string_view>

#include "oral/simd.hpp"

namespace oral::simd {

#if defined(ORAL_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(ORAL_HAVE_NEON)
const KernelTable& neon_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(ORAL_HAVE_AVX2)
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() {
#if defined(ORAL_HAVE_NEON)
  return &neon_table();  // baseline on aarch64
#else
  return nullptr;
#endif
}

namespace {

const KernelTable& select() {
  const char* env = std::getenv("ORAL_SIMD");
  if (env && std::string_view(env) == "scalar") return scalar_kernels();
  if (const auto* t = avx2_kernels()) return *t;
  if (const auto* t = neon_kernels()) return *t;
  return scalar_kernels();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace oral::simd
