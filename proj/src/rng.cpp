#include "mfl/rng.hpp"

#include <array>
#include <cmath>

namespace mfl {

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xFF51AFD7ED558CCDull;
  x ^= x >> 33;
  x *= 0xC4CEB9FE1A85EC53ull;
  x ^= x >> 33;
  return x;
}

Rng make_stream(std::uint64_t seed, Purpose purpose, std::uint64_t index,
                std::uint64_t step) {
  std::uint64_t h = mix64(seed ^ 0x6A09E667F3BCC909ull);
  h = mix64(h ^ static_cast<std::uint64_t>(purpose) * 0x9E3779B97F4A7C15ull);
  h = mix64(h ^ (index + 0x3C6EF372FE94F82Bull));
  h = mix64(h ^ (step + 0xA54FF53A5F1D36F1ull));
  return Rng(h);
}

namespace {

// Doornik's 128-layer ziggurat (ZIGNOR).
constexpr int kLayers = 128;
constexpr double kTailStart = 3.442619855899;
constexpr double kLayerArea = 9.91256303526217e-3;

struct ZigguratTables {
  std::array<double, kLayers + 1> x{};
  std::array<double, kLayers> ratio{};

  ZigguratTables() {
    double f = std::exp(-0.5 * kTailStart * kTailStart);
    x[0] = kLayerArea / f;
    x[1] = kTailStart;
    x[kLayers] = 0.0;
    for (int i = 2; i < kLayers; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kLayerArea / x[i - 1] + f));
      f = std::exp(-0.5 * x[i] * x[i]);
    }
    for (int i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

const ZigguratTables& tables() {
  static const ZigguratTables t;
  return t;
}

}  // namespace

double Rng::normal() {
  const auto& t = tables();
  for (;;) {
    const std::uint64_t bits = next_u64();
    const int i = static_cast<int>(bits & 0x7F);
    const double u = 2.0 * (static_cast<double>(bits >> 11) * 0x1.0p-53) - 1.0;
    if (std::fabs(u) < t.ratio[i]) return u * t.x[i];
    if (i == 0) {
      double x;
      double y;
      do {
        x = std::log(uniform_open()) / kTailStart;
        y = std::log(uniform_open());
      } while (-2.0 * y < x * x);
      return u < 0 ? x - kTailStart : kTailStart - x;
    }
    const double x = u * t.x[i];
    const double f0 = std::exp(-0.5 * (t.x[i] * t.x[i] - x * x));
    const double f1 = std::exp(-0.5 * (t.x[i + 1] * t.x[i + 1] - x * x));
    if (f1 + uniform() * (f0 - f1) < 1.0) return x;
  }
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Lemire's multiply-shift; bias is below 2^-64 * n and irrelevant here.
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

}  // namespace mfl
