/*
 * flairhi - FLAIR hyperintensity enhancement toolkit
 *
 * Copyright 2026 the flairhi authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FLAIRHI_PARALLEL_HPP
#define FLAIRHI_PARALLEL_HPP

#include <cstdint>
#include <functional>

namespace flairhi {

/// Number of worker threads used by parallel loops when the caller does not
/// say otherwise. Defaults to std::thread::hardware_concurrency().
int default_threads();
void set_default_threads(int n);

/// Runs fn(begin, end) over a contiguous partition of [0, n).
///
/// Chunk boundaries depend only on n and the chunk count, never on scheduling,
/// so any computation whose chunks write disjoint outputs produces bit-identical
/// results for every thread count. Exceptions thrown by workers are rethrown
/// on the calling thread (first one wins).
void parallel_chunks(std::int64_t n,
                     const std::function<void(std::int64_t, std::int64_t)>& fn,
                     int threads = 0);

} // namespace flairhi

#endif
