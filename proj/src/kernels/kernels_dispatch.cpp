#include <cstdlib>
#include <string>

#include "afs/errors.hpp"
#include "afs/kernels.hpp"

namespace afs::kernels {

const KernelOps& by_name(const std::string& want) {
  if (want == "scalar") return scalar_ops();
#if defined(__x86_64__) || defined(_M_X64)
  if (want == "avx2") {
    if (!avx2_supported()) {
      throw InvalidArgument("AFS_KERNELS=avx2 but the CPU lacks AVX2");
    }
    return avx2_ops();
  }
#endif
#if defined(__aarch64__)
  if (want == "neon") return neon_ops();
#endif
  throw InvalidArgument("AFS_KERNELS names an unknown kernel set: '" + want +
                        "'");
}

namespace {

const KernelOps& select() {
  if (const char* env = std::getenv("AFS_KERNELS")) {
    return by_name(env);
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (avx2_supported()) return avx2_ops();
#endif
#if defined(__aarch64__)
  return neon_ops();
#endif
  return scalar_ops();
}

}  // namespace

const KernelOps& active() {
  static const KernelOps& ops = select();
  return ops;
}

std::vector<const KernelOps*> available() {
  std::vector<const KernelOps*> out{&scalar_ops()};
#if defined(__x86_64__) || defined(_M_X64)
  if (avx2_supported()) out.push_back(&avx2_ops());
#endif
#if defined(__aarch64__)
  out.push_back(&neon_ops());
#endif
  return out;
}

}  // namespace afs::kernels
