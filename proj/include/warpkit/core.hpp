#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace warpkit {

// Error taxonomy. The CLI maps these onto exit codes, so keep the
// hierarchy flat and the categories disjoint.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};
struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense row-major H x W grid.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, T fill = T{})
      : h_(height), w_(width), v_(static_cast<size_t>(height) * width, fill) {
    if (height <= 0 || width <= 0)
      throw DimensionError("Grid: non-positive size");
  }

  int height() const { return h_; }
  int width() const { return w_; }
  size_t size() const { return v_.size(); }

  T& operator()(int y, int x) { return v_[static_cast<size_t>(y) * w_ + x]; }
  const T& operator()(int y, int x) const {
    return v_[static_cast<size_t>(y) * w_ + x];
  }
  T& operator[](size_t i) { return v_[i]; }
  const T& operator[](size_t i) const { return v_[i]; }

  T* data() { return v_.data(); }
  const T* data() const { return v_.data(); }

  bool same_size(const Grid& o) const { return h_ == o.h_ && w_ == o.w_; }

  void fill(T value) { std::fill(v_.begin(), v_.end(), value); }

 private:
  int h_ = 0;
  int w_ = 0;
  std::vector<T> v_;
};

using GridD = Grid<double>;
using GridB = Grid<uint8_t>;

// Planar H x W x C image, values in [0,1], C in {1,3}.
struct Image {
  Image() = default;
  Image(int height, int width, int channels, double fill = 0.0)
      : h(height), w(width), c(channels),
        data(static_cast<size_t>(height) * width * channels, fill) {
    if (height <= 0 || width <= 0)
      throw DimensionError("Image: non-positive size");
    if (channels != 1 && channels != 3)
      throw DimensionError("Image: channels must be 1 or 3");
  }

  int h = 0, w = 0, c = 0;
  std::vector<double> data;  // planar: channel-major, row-major planes

  double& at(int y, int x, int ch) {
    return data[(static_cast<size_t>(ch) * h + y) * w + x];
  }
  double at(int y, int x, int ch) const {
    return data[(static_cast<size_t>(ch) * h + y) * w + x];
  }
  const double* plane(int ch) const {
    return data.data() + static_cast<size_t>(ch) * h * w;
  }
  double* plane(int ch) {
    return data.data() + static_cast<size_t>(ch) * h * w;
  }
  bool same_size(const Image& o) const {
    return h == o.h && w == o.w && c == o.c;
  }

  void clamp01() {
    for (double& x : data) x = std::clamp(x, 0.0, 1.0);
  }
};

inline Image image_from_grid(const Grid<double>& g) {
  Image im(g.height(), g.width(), 1);
  std::copy(g.data(), g.data() + g.size(), im.data.begin());
  return im;
}

inline Grid<double> grid_from_plane(const Image& im, int ch = 0) {
  Grid<double> g(im.h, im.w);
  std::copy(im.plane(ch), im.plane(ch) + g.size(), g.data());
  return g;
}

inline void require_same_size(const Image& a, const Image& b,
                              const char* where) {
  if (!a.same_size(b))
    throw DimensionError(std::string(where) + ": image size mismatch");
}

template <typename T>
inline void require_same_size(const Grid<T>& a, const Grid<T>& b,
                              const char* where) {
  if (!a.same_size(b))
    throw DimensionError(std::string(where) + ": grid size mismatch");
}

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// Deterministic RNG. mt19937_64 with explicit value mappings so streams
// are identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(splitmix(seed)), inc_(seed) { skip(); }

  uint64_t next_u64() {
    // xorshift* keeps this self-contained and fast.
    uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1DULL;
  }

  double uniform01() {  // [0,1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {  // Box-Muller, one value per call
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  int uniform_int(int lo, int hi) {  // inclusive range
    return lo + static_cast<int>(next_u64() % static_cast<uint64_t>(hi - lo + 1));
  }

  static uint64_t splitmix(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

 private:
  void skip() {
    state_ = splitmix(state_ ^ splitmix(inc_));
    if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
  }
  uint64_t state_;
  uint64_t inc_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stateless lattice hash for procedural textures.
inline double hash01(int64_t x, int64_t y, uint64_t seed) {
  uint64_t h = Rng::splitmix(static_cast<uint64_t>(x) * 0x9E3779B97F4A7C15ULL ^
                             Rng::splitmix(static_cast<uint64_t>(y) ^
                                           Rng::splitmix(seed)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Row-parallel map. Results must be written to disjoint, preallocated
// slots so the output is identical for any thread count; reductions stay
// sequential at call sites.
template <typename Fn>
inline void parallel_rows(int rows, int threads, Fn&& fn) {
  if (threads <= 1 || rows < 2 * threads) {
    for (int y = 0; y < rows; ++y) fn(y);
    return;
  }
  std::vector<std::thread> pool;
  int chunk = (rows + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    int y0 = t * chunk;
    int y1 = std::min(rows, y0 + chunk);
    if (y0 >= y1) break;
    pool.emplace_back([y0, y1, &fn] {
      for (int y = y0; y < y1; ++y) fn(y);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace warpkit
