#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace lc::util {

// splitmix64 finalizer; used to derive independent sub-seeds
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

// stable 64-bit FNV-1a (std::hash is not stable across implementations)
std::uint64_t fnv1a64(const std::string& s);
std::string hex64(std::uint64_t v);

// LATENTCYCLE_THREADS, default 1
int thread_count();

// runs fn(i) for i in [0, n); each index is processed exactly once
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// visit every k-subset of items in lexicographic order; stop early when fn returns false
bool for_each_combination(const std::vector<int>& items, int k,
                          const std::function<bool(const std::vector<int>&)>& fn);

std::vector<int> set_minus(const std::vector<int>& a, const std::vector<int>& b);
std::vector<int> set_union(const std::vector<int>& a, const std::vector<int>& b);
bool intersects(const std::vector<int>& a, const std::vector<int>& b);
std::vector<int> sorted_unique(std::vector<int> v);

}  // namespace lc::util
