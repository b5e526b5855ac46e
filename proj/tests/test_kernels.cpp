#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "afs/errors.hpp"
#include "afs/kernels.hpp"
#include "afs/rng.hpp"

using afs::kernels::KernelOps;
using afs::rng::RandomStream;

namespace {

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

// Sizes straddle every lane-group boundary: sub-vector, exact multiples,
// multiples plus tails.
const std::vector<std::size_t> kSizes = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16,
                                         17, 31, 33, 64, 100, 257};

std::vector<double> random_vec(RandomStream& rs, std::size_t n) {
  std::vector<double> v(n);
  rs.fill_gaussian(v);
  return v;
}

}  // namespace

TEST_CASE("scalar reference is always available and first") {
  const auto impls = afs::kernels::available();
  REQUIRE(!impls.empty());
  CHECK(std::string(impls.front()->name) == "scalar");
}

TEST_CASE("element-wise kernels are bit-identical across implementations") {
  const KernelOps& ref = afs::kernels::scalar_ops();
  RandomStream rs(0xBEEF01);
  for (const KernelOps* impl : afs::kernels::available()) {
    CAPTURE(impl->name);
    for (const std::size_t n : kSizes) {
      CAPTURE(n);
      const auto x = random_vec(rs, n);
      const auto y = random_vec(rs, n);
      const auto grad = random_vec(rs, n);
      auto mask = random_vec(rs, n);
      for (std::size_t i = 0; i < n; i += 3) mask[i] = 0.0;  // exercise zeros

      // axpy
      auto a_ref = y, a_got = y;
      ref.axpy(1.7, x.data(), a_ref.data(), n);
      impl->axpy(1.7, x.data(), a_got.data(), n);
      for (std::size_t i = 0; i < n; ++i) {
        REQUIRE(same_bits(a_ref[i], a_got[i]));
      }

      // scale_add, including the aliasing case out == y
      std::vector<double> s_ref(n), s_got(n);
      ref.scale_add(-0.3, x.data(), y.data(), s_ref.data(), n);
      impl->scale_add(-0.3, x.data(), y.data(), s_got.data(), n);
      auto alias = y;
      impl->scale_add(-0.3, x.data(), alias.data(), alias.data(), n);
      for (std::size_t i = 0; i < n; ++i) {
        REQUIRE(same_bits(s_ref[i], s_got[i]));
        REQUIRE(same_bits(s_ref[i], alias[i]));
      }

      // steer_blend: masked lanes must copy v verbatim
      std::vector<double> b_ref(n), b_got(n);
      ref.steer_blend(y.data(), grad.data(), mask.data(), 0.25, b_ref.data(),
                      n);
      impl->steer_blend(y.data(), grad.data(), mask.data(), 0.25, b_got.data(),
                        n);
      for (std::size_t i = 0; i < n; ++i) {
        REQUIRE(same_bits(b_ref[i], b_got[i]));
        if (mask[i] == 0.0) REQUIRE(same_bits(b_got[i], y[i]));
      }

      // gmm_vel_accum accumulates into out
      auto v_ref = random_vec(rs, n);
      auto v_got = v_ref;
      auto s2 = random_vec(rs, n);
      for (double& s : s2) s = 0.5 + std::abs(s);
      ref.gmm_vel_accum(0.37, x.data(), y.data(), s2.data(), 0.4, 0.6,
                        v_ref.data(), n);
      impl->gmm_vel_accum(0.37, x.data(), y.data(), s2.data(), 0.4, 0.6,
                          v_got.data(), n);
      for (std::size_t i = 0; i < n; ++i) {
        REQUIRE(same_bits(v_ref[i], v_got[i]));
      }
    }
  }
}

TEST_CASE("reductions agree across implementations to 1e-13 relative") {
  const KernelOps& ref = afs::kernels::scalar_ops();
  RandomStream rs(0xBEEF02);
  for (const KernelOps* impl : afs::kernels::available()) {
    CAPTURE(impl->name);
    for (const std::size_t n : kSizes) {
      CAPTURE(n);
      const auto x = random_vec(rs, n);
      const auto y = random_vec(rs, n);
      auto s2 = random_vec(rs, n);
      for (double& s : s2) s = 0.5 + std::abs(s);

      const double d_ref = ref.dot(x.data(), y.data(), n);
      const double d_got = impl->dot(x.data(), y.data(), n);
      CHECK(std::abs(d_got - d_ref) <= 1e-13 * std::max(1.0, std::abs(d_ref)));

      const double q_ref = ref.sum_sq(x.data(), n);
      const double q_got = impl->sum_sq(x.data(), n);
      CHECK(std::abs(q_got - q_ref) <= 1e-13 * std::max(1.0, q_ref));

      const double g_ref = ref.gmm_quad(x.data(), y.data(), s2.data(), 0.3,
                                        0.7, n);
      const double g_got = impl->gmm_quad(x.data(), y.data(), s2.data(), 0.3,
                                          0.7, n);
      CHECK(std::abs(g_got - g_ref) <= 1e-13 * std::max(1.0, std::abs(g_ref)));
    }
  }
}

TEST_CASE("reductions match brute-force arithmetic on a tiny case") {
  const std::vector<double> x = {1.0, 2.0, 3.0};
  const std::vector<double> y = {4.0, -5.0, 6.0};
  for (const KernelOps* impl : afs::kernels::available()) {
    CHECK(impl->dot(x.data(), y.data(), 3) == doctest::Approx(12.0));
    CHECK(impl->sum_sq(x.data(), 3) == doctest::Approx(14.0));
  }
}

TEST_CASE("name lookup backs the AFS_KERNELS override") {
  CHECK(std::string(afs::kernels::by_name("scalar").name) == "scalar");
  CHECK_THROWS_AS(afs::kernels::by_name("sse9"), afs::InvalidArgument);
  CHECK_THROWS_AS(afs::kernels::by_name(""), afs::InvalidArgument);
  // Every advertised implementation is reachable by its own name.
  for (const KernelOps* impl : afs::kernels::available()) {
    CHECK(std::string(afs::kernels::by_name(impl->name).name) == impl->name);
  }
  // active() resolves to one of the advertised implementations.
  const KernelOps& act = afs::kernels::active();
  bool known = false;
  for (const KernelOps* impl : afs::kernels::available()) {
    known = known || std::string(impl->name) == act.name;
  }
  CHECK(known);
}

TEST_CASE("span helpers forward to the active implementation") {
  const std::vector<double> a = {3.0, 4.0};
  CHECK(afs::kernels::norm(a) == doctest::Approx(5.0));
  std::vector<double> y = {1.0, 1.0};
  afs::kernels::axpy(2.0, a, y);
  CHECK(y[0] == doctest::Approx(7.0));
  CHECK(y[1] == doctest::Approx(9.0));
  const auto out = afs::kernels::scale_add(-1.0, a, y);
  CHECK(out[0] == doctest::Approx(4.0));
  CHECK(out[1] == doctest::Approx(5.0));
}
