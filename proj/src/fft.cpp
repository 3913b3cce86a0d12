#include "stopsec/fft.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace stopsec {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }
}  // namespace

Fft::Fft(size_t n) : n_(n) {
    if (!is_pow2(n)) throw std::invalid_argument("Fft: size must be a power of two");
    bitrev_.resize(n);
    size_t log2n = 0;
    while ((size_t{1} << log2n) < n) ++log2n;
    for (size_t i = 0; i < n; ++i) {
        size_t r = 0;
        for (size_t b = 0; b < log2n; ++b)
            if (i & (size_t{1} << b)) r |= size_t{1} << (log2n - 1 - b);
        bitrev_[i] = r;
    }
    twiddle_.resize(n / 2);
    for (size_t k = 0; k < n / 2; ++k) {
        double a = -kTwoPi * static_cast<double>(k) / static_cast<double>(n);
        twiddle_[k] = {std::cos(a), std::sin(a)};
    }
}

void Fft::transform(std::vector<cplx>& data, bool inv) const {
    if (data.size() != n_) throw std::invalid_argument("Fft: data size mismatch");
    for (size_t i = 0; i < n_; ++i) {
        size_t j = bitrev_[i];
        if (i < j) std::swap(data[i], data[j]);
    }
    for (size_t len = 2; len <= n_; len <<= 1) {
        size_t half = len >> 1;
        size_t step = n_ / len;
        for (size_t start = 0; start < n_; start += len) {
            for (size_t k = 0; k < half; ++k) {
                cplx w = twiddle_[k * step];
                if (inv) w = std::conj(w);
                cplx u = data[start + k];
                cplx v = data[start + k + half] * w;
                data[start + k] = u + v;
                data[start + k + half] = u - v;
            }
        }
    }
}

void Fft::inverse(std::vector<cplx>& data) const {
    transform(data, true);
    double scale = 1.0 / static_cast<double>(n_);
    for (auto& x : data) x *= scale;
}

const Fft& fft_plan(size_t n) {
    thread_local std::map<size_t, Fft> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, Fft(n)).first;
    return it->second;
}

std::vector<cplx> cross_correlate(const std::vector<cplx>& window,
                                  const std::vector<cplx>& tmpl) {
    if (tmpl.empty() || window.size() < tmpl.size())
        throw std::invalid_argument("cross_correlate: window shorter than template");
    const size_t n_lags = window.size() - tmpl.size() + 1;
    const size_t m = tmpl.size();

    if (window.size() < 1024) {
        std::vector<cplx> out(n_lags);
        for (size_t lag = 0; lag < n_lags; ++lag) {
            cplx acc = 0.0;
            for (size_t i = 0; i < m; ++i) acc += std::conj(tmpl[i]) * window[lag + i];
            out[lag] = acc;
        }
        return out;
    }

    // FFT correlation: corr = IFFT(FFT(window) * conj(FFT(tmpl))), linear
    // because the transform is zero-padded beyond window+template size.
    size_t fft_n = 1;
    while (fft_n < window.size() + m) fft_n <<= 1;
    const Fft& plan = fft_plan(fft_n);

    std::vector<cplx> a(fft_n, cplx{0.0, 0.0});
    std::vector<cplx> b(fft_n, cplx{0.0, 0.0});
    for (size_t i = 0; i < window.size(); ++i) a[i] = window[i];
    for (size_t i = 0; i < m; ++i) b[i] = tmpl[i];
    plan.forward(a);
    plan.forward(b);
    for (size_t i = 0; i < fft_n; ++i) a[i] *= std::conj(b[i]);
    plan.inverse(a);

    std::vector<cplx> out(n_lags);
    for (size_t lag = 0; lag < n_lags; ++lag) out[lag] = a[lag];
    return out;
}

}  // namespace stopsec
