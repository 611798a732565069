// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace qrsnap {

/// Worker count: the THREADS environment variable when set to a positive
/// integer, otherwise the hardware concurrency.
int thread_count();

/// Overrides THREADS for the rest of the process (0 restores the default).
void set_thread_count(int threads);

/// Calls fn(i) for i in [0, n). Work items must write to disjoint outputs;
/// results never depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace qrsnap
