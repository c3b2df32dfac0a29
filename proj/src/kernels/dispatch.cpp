#include <atomic>
#include <cstdlib>
#include <string_view>

#include "imblr/error.hpp"
#include "imblr/kernels/kernels.hpp"

namespace imblr::kernels {

namespace {

constexpr KernelTable kScalar{Isa::scalar, &scalar::logistic_sums_1d, &scalar::logistic_terms,
                              &scalar::tilt_sums_1d, &scalar::exp_inplace};

#if defined(IMBLR_HAS_AVX2)
constexpr KernelTable kAvx2{Isa::avx2, &avx2::logistic_sums_1d, &avx2::logistic_terms,
                            &avx2::tilt_sums_1d, &avx2::exp_inplace};
#endif

Isa initial_isa() {
  Isa isa = detect_best();
  if (const char* env = std::getenv("IMBLR_KERNELS")) {
    const std::string_view requested(env);
    if (requested == "scalar") {
      isa = Isa::scalar;
    } else if (requested == "avx2" && supported(Isa::avx2)) {
      isa = Isa::avx2;
    }
  }
  return isa;
}

std::atomic<Isa>& active_slot() {
  static std::atomic<Isa> slot{initial_isa()};
  return slot;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

bool supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(IMBLR_HAS_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa detect_best() { return supported(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

Isa active() { return active_slot().load(std::memory_order_relaxed); }

void set_active(Isa isa) {
  if (!supported(isa)) {
    throw Error(ErrorCode::InvalidArgument,
                std::string("kernel variant not supported on this CPU: ") + std::string(to_string(isa)));
  }
  active_slot().store(isa, std::memory_order_relaxed);
}

const KernelTable& table(Isa isa) {
#if defined(IMBLR_HAS_AVX2)
  if (isa == Isa::avx2) return kAvx2;
#else
  (void)isa;
#endif
  return kScalar;
}

const KernelTable& current() { return table(active()); }

}  // namespace imblr::kernels
