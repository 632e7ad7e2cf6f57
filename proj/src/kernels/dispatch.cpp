#include <atomic>
#include <cstdlib>
#include <string_view>

#include "planarfab/kernels.hpp"

namespace planarfab::kernels {
namespace {

std::atomic<const KernelTable*> g_active{nullptr};

const KernelTable* select_default() noexcept {
  if (const char* env = std::getenv("PLANARFAB_SIMD")) {
    if (std::string_view(env) == "scalar") return &scalar_table();
  }
  return isa_available(Isa::Avx2) ? &avx2_table() : &scalar_table();
}

}  // namespace

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(__i386__)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("popcnt");
#else
      return false;
#endif
  }
  return false;
}

std::string_view isa_name(Isa isa) noexcept {
  return isa == Isa::Avx2 ? "avx2" : "scalar";
}

const KernelTable& active() noexcept {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    t = select_default();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

void force_isa(Isa isa) noexcept {
  const KernelTable* t =
      (isa == Isa::Avx2 && isa_available(Isa::Avx2)) ? &avx2_table() : &scalar_table();
  g_active.store(t, std::memory_order_release);
}

}  // namespace planarfab::kernels
