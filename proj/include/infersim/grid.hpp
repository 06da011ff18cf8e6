#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "infersim/simengine.hpp"

namespace infersim {

// One independent simulation. The trace and queries are borrowed and must
// outlive the grid call.
struct GridJob {
  const ArrivalTrace* trace = nullptr;
  std::span<const QuerySpec> queries;
  PolicySpec policy;
  std::uint64_t seed = 0;
};

// Reference implementation: jobs one after another, in order.
std::vector<MetricsReport> run_grid_serial(std::span<const GridJob> jobs, const RateCard& card,
                                           std::span<const ModelProfile> catalog, const SimOptions& options);

// Same results as run_grid_serial, with jobs spread over OpenMP threads.
// threads <= 0 uses the OpenMP default. The first failing job's exception (in
// job order) is rethrown after all jobs finish.
std::vector<MetricsReport> run_grid_parallel(std::span<const GridJob> jobs, const RateCard& card,
                                             std::span<const ModelProfile> catalog, const SimOptions& options,
                                             int threads = 0);

}  // namespace infersim
