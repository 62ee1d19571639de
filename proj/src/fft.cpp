#include "fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace ragent::detail {
namespace {

// FFTW's planner is not thread-safe; execution with the new-array interface is.
class PlanCache {
public:
    ~PlanCache()
    {
        for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get(std::size_t n)
    {
        std::lock_guard lock(mutex_);
        auto it = plans_.find(n);
        if (it != plans_.end()) return it->second;
        std::vector<std::complex<double>> a(n), b(n);
        fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n),
                                          reinterpret_cast<fftw_complex*>(a.data()),
                                          reinterpret_cast<fftw_complex*>(b.data()),
                                          FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(n, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::size_t, fftw_plan> plans_;
};

PlanCache& cache()
{
    static PlanCache instance;
    return instance;
}

}  // namespace

void fft_forward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out)
{
    const std::size_t n = out.size();
    if (n == 0) return;
    thread_local std::vector<std::complex<double>> buf;
    buf.assign(n, {0.0, 0.0});
    const std::size_t m = std::min(n, in.size());
    for (std::size_t k = 0; k < m; ++k) buf[k] = in[k];
    fftw_execute_dft(cache().get(n), reinterpret_cast<fftw_complex*>(buf.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
}

std::vector<double> hann(std::size_t n)
{
    if (n == 1) return {1.0};
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k)
        w[k] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n)));
    return w;
}

}  // namespace ragent::detail
