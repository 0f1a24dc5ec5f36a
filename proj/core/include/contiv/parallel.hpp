#pragma once

#include <cstddef>
#include <functional>

namespace contiv {

//! Worker count used when a call passes jobs = 0: the value set here, else
//! CONTIV_JOBS, else the hardware concurrency.
void set_default_jobs(std::size_t jobs);
std::size_t default_jobs();

//! Runs body(i) for i in [0, n) on up to `jobs` threads. Each index is
//! processed exactly once and results must be written to per-index slots,
//! so the outcome does not depend on the thread count. Calls made from
//! inside a worker run serially. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t jobs = 0);

} // namespace contiv
