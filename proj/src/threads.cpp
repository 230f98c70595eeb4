#include "qmem/threads.hpp"

#include <algorithm>
#include <thread>
#include <vector>

namespace qmem {

unsigned default_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return std::clamp(hw, 1u, 8u);
}

void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
    if (workers == 0) workers = default_workers();
    if (count == 0) return;
    const std::size_t nw = std::min<std::size_t>(workers, count);
    if (nw <= 1) {
        fn(0, count);
        return;
    }
    // Even contiguous split; the first (count % nw) chunks get one extra.
    const std::size_t base = count / nw;
    const std::size_t extra = count % nw;
    std::vector<std::thread> pool;
    pool.reserve(nw);
    std::size_t begin = 0;
    for (std::size_t k = 0; k < nw; ++k) {
        const std::size_t len = base + (k < extra ? 1 : 0);
        const std::size_t end = begin + len;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
        begin = end;
    }
    for (std::thread& t : pool) t.join();
}

} // namespace qmem
