#include "infersim/grid.hpp"

#include <exception>

#include <omp.h>

namespace infersim {

std::vector<MetricsReport> run_grid_serial(std::span<const GridJob> jobs, const RateCard& card,
                                           std::span<const ModelProfile> catalog, const SimOptions& options) {
  std::vector<MetricsReport> out;
  out.reserve(jobs.size());
  for (const auto& j : jobs) out.push_back(run(*j.trace, j.queries, j.policy, card, catalog, j.seed, options));
  return out;
}

std::vector<MetricsReport> run_grid_parallel(std::span<const GridJob> jobs, const RateCard& card,
                                             std::span<const ModelProfile> catalog, const SimOptions& options,
                                             int threads) {
  std::vector<MetricsReport> out(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  const int n = static_cast<int>(jobs.size());
  const int nt = threads > 0 ? threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
  for (int i = 0; i < n; ++i) {
    const GridJob& j = jobs[static_cast<std::size_t>(i)];
    try {
      out[static_cast<std::size_t>(i)] = run(*j.trace, j.queries, j.policy, card, catalog, j.seed, options);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace infersim
