#include "fluctuo/convolution.hpp"

#include <complex>
#include <mutex>

#include <fftw3.h>

#include "fluctuo/errors.hpp"

namespace fluctuo {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

struct CyclicConvolver::Fft {
  std::size_t n_real = 0;
  std::size_t n_complex = 0;
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  std::vector<std::complex<double>> kernel_hat;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  explicit Fft(const Grid& g) {
    n_real = g.size();
    n_complex = g.d == 1 ? g.N / 2 + 1 : g.N * (g.N / 2 + 1);
    real = static_cast<double*>(fftw_malloc(sizeof(double) * n_real));
    spec = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_complex));
    if (!real || !spec) throw std::bad_alloc();
    std::lock_guard<std::mutex> lock(planner_mutex());
    const int n = static_cast<int>(g.N);
    if (g.d == 1) {
      forward = fftw_plan_dft_r2c_1d(n, real, spec, FFTW_ESTIMATE);
      backward = fftw_plan_dft_c2r_1d(n, spec, real, FFTW_ESTIMATE);
    } else {
      forward = fftw_plan_dft_r2c_2d(n, n, real, spec, FFTW_ESTIMATE);
      backward = fftw_plan_dft_c2r_2d(n, n, spec, real, FFTW_ESTIMATE);
    }
    if (!forward || !backward) throw SolverError("FFTW plan creation failed");
  }

  ~Fft() {
    {
      std::lock_guard<std::mutex> lock(planner_mutex());
      if (forward) fftw_destroy_plan(forward);
      if (backward) fftw_destroy_plan(backward);
    }
    fftw_free(real);
    fftw_free(spec);
  }

  void transform(const std::vector<double>& in, std::vector<std::complex<double>>& out) {
    std::copy(in.begin(), in.end(), real);
    fftw_execute(forward);
    out.resize(n_complex);
    for (std::size_t i = 0; i < n_complex; ++i) out[i] = {spec[i][0], spec[i][1]};
  }
};

CyclicConvolver::CyclicConvolver(const Grid& grid, std::vector<double> kernel, bool allow_fft)
    : grid_(grid), kernel_(std::move(kernel)) {
  if (kernel_.size() != grid_.size()) throw GridMismatch("convolution kernel size does not match grid");
  for (std::size_t o = 0; o < kernel_.size(); ++o) {
    if (kernel_[o] != 0.0) support_.push_back(o);
  }
  if (allow_fft && is_pow2(grid_.N)) {
    fft_ = std::make_unique<Fft>(grid_);
    fft_->transform(kernel_, fft_->kernel_hat);
    const double scale = 1.0 / static_cast<double>(grid_.size());
    for (auto& c : fft_->kernel_hat) c *= scale;
  }
}

CyclicConvolver::~CyclicConvolver() = default;
CyclicConvolver::CyclicConvolver(CyclicConvolver&&) noexcept = default;
CyclicConvolver& CyclicConvolver::operator=(CyclicConvolver&&) noexcept = default;

void CyclicConvolver::apply(const std::vector<double>& in, std::vector<double>& out) {
  if (in.size() != grid_.size()) throw GridMismatch("convolution input size does not match grid");
  out.resize(in.size());
  if (!fft_) {
    apply_direct(in, out);
    return;
  }
  Fft& f = *fft_;
  std::copy(in.begin(), in.end(), f.real);
  fftw_execute(f.forward);
  for (std::size_t i = 0; i < f.n_complex; ++i) {
    const std::complex<double> z = std::complex<double>(f.spec[i][0], f.spec[i][1]) * f.kernel_hat[i];
    f.spec[i][0] = z.real();
    f.spec[i][1] = z.imag();
  }
  fftw_execute(f.backward);
  std::copy(f.real, f.real + f.n_real, out.begin());
}

void CyclicConvolver::apply_direct(const std::vector<double>& in, std::vector<double>& out) const {
  const std::size_t N = grid_.N;
  if (grid_.d == 1) {
    for (std::size_t i = 0; i < N; ++i) {
      double s = 0.0;
      for (std::size_t o : support_) s += kernel_[o] * in[(i + N - o) % N];
      out[i] = s;
    }
    return;
  }
  for (std::size_t i0 = 0; i0 < N; ++i0) {
    for (std::size_t i1 = 0; i1 < N; ++i1) {
      double s = 0.0;
      for (std::size_t o : support_) {
        const std::size_t o0 = o / N, o1 = o % N;
        s += kernel_[o] * in[((i0 + N - o0) % N) * N + (i1 + N - o1) % N];
      }
      out[i0 * N + i1] = s;
    }
  }
}

}  // namespace fluctuo
