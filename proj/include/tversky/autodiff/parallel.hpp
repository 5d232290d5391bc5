#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace tversky {

inline int max_threads() {
    if (const char* env = std::getenv("TVERSKY_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// Static contiguous partition of [0,n). The partition depends only on n and
// the resolved thread count, so per-chunk results combined in chunk order are
// reproducible run to run.
inline std::vector<std::pair<int64_t, int64_t>> partition_ranges(int64_t n, int64_t grain) {
    std::vector<std::pair<int64_t, int64_t>> out;
    if (n <= 0) return out;
    int nt = max_threads();
    int chunks = static_cast<int>(std::min<int64_t>(nt, (n + grain - 1) / grain));
    if (chunks < 1) chunks = 1;
    int64_t per = (n + chunks - 1) / chunks;
    for (int64_t b = 0; b < n; b += per) out.emplace_back(b, std::min<int64_t>(n, b + per));
    return out;
}

// fn(chunk_index, begin, end); chunks run concurrently, caller combines
// per-chunk results in chunk order when a deterministic reduction is needed.
inline void run_chunks(const std::vector<std::pair<int64_t, int64_t>>& chunks,
                       const std::function<void(size_t, int64_t, int64_t)>& fn) {
    if (chunks.empty()) return;
    if (chunks.size() == 1) {
        fn(0, chunks[0].first, chunks[0].second);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(chunks.size() - 1);
    for (size_t c = 1; c < chunks.size(); ++c)
        pool.emplace_back([&fn, &chunks, c] { fn(c, chunks[c].first, chunks[c].second); });
    fn(0, chunks[0].first, chunks[0].second);
    for (auto& t : pool) t.join();
}

inline void parallel_for(int64_t n, int64_t grain, const std::function<void(int64_t, int64_t)>& fn) {
    run_chunks(partition_ranges(n, grain), [&fn](size_t, int64_t b, int64_t e) { fn(b, e); });
}

}  // namespace tversky
