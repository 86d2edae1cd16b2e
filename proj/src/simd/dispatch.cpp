#include <atomic>
#include <cstdlib>
#include <cstring>

#include "logseg/simd/kernels.hpp"

namespace logseg::simd {

const KernelTable* avx2_table_unchecked() noexcept;

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* avx2_kernels() noexcept {
  static const KernelTable* table = cpu_has_avx2() ? avx2_table_unchecked() : nullptr;
  return table;
}

namespace {

const KernelTable* pick_default() noexcept {
  if (const char* env = std::getenv("LOGSEG_SIMD"); env != nullptr && std::strcmp(env, "scalar") == 0) {
    return &scalar_kernels();
  }
  if (const KernelTable* t = avx2_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& current() noexcept {
  static std::atomic<const KernelTable*> table{pick_default()};
  return table;
}

}  // namespace

const KernelTable& active() noexcept { return *current().load(std::memory_order_acquire); }

Backend set_backend(Backend requested) noexcept {
  const KernelTable* table = &scalar_kernels();
  if (requested == Backend::Avx2 && avx2_kernels() != nullptr) table = avx2_kernels();
  current().store(table, std::memory_order_release);
  return table->backend;
}

const char* to_string(Backend backend) noexcept {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

}  // namespace logseg::simd
