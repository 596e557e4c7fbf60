#pragma once

#include <cstdint>
#include <functional>

#include "anderson/config.hpp"
#include "anderson/report.hpp"

namespace anderson {

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;
// Seed of realization `index`; depends only on (master, index).
std::uint64_t realization_seed(std::uint64_t master, std::uint64_t index) noexcept;

// Calls fn(i) for i in [0, count) on up to `threads` workers (0 = hardware
// concurrency). The first exception thrown by fn is rethrown after all
// workers stop.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

// Runs one experiment. Realizations failing numerically are excluded and
// counted; more than 1% of them raises failure_budget_exceeded. The report
// and optional table are written when the config names output paths.
ensemble_report run_experiment(const experiment_config& config, sample_table* table = nullptr);

} // namespace anderson
