#pragma once

#include <cstddef>
#include <functional>

namespace casebase {

/// Worker count used by fold- and profile-level parallel loops. Defaults to
/// the CASEBASE_THREADS environment variable, else 1.
int thread_count();
void set_thread_count(int threads);

/// Runs task(i) for i in [0, n). Results must be written to index-addressed
/// slots so the outcome does not depend on scheduling. The first exception
/// (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task);

}  // namespace casebase
