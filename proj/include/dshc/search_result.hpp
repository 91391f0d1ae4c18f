#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace dshc {

/// A ranked hit. `score` holds a similarity (BM25, dense) or a Hamming
/// distance, depending on the backend.
struct Hit {
    std::uint64_t id = 0;
    double score = 0.0;

    friend bool operator==(const Hit&, const Hit&) = default;
};

using SearchResult = std::vector<Hit>;

enum class Rank { SmallestFirst, LargestFirst };

/// Bounded heap keeping the best K hits; ties go to the lower id.
template <Rank R>
class TopK {
  public:
    explicit TopK(std::size_t k) : k_(k) { heap_.reserve(k); }

    static bool before(const Hit& a, const Hit& b) noexcept {
        if (a.score != b.score) return R == Rank::SmallestFirst ? a.score < b.score : a.score > b.score;
        return a.id < b.id;
    }

    void push(std::uint64_t id, double score) {
        if (k_ == 0) return;
        const Hit hit{id, score};
        if (heap_.size() < k_) {
            heap_.push_back(hit);
            std::push_heap(heap_.begin(), heap_.end(), &TopK::before);
        } else if (before(hit, heap_.front())) {
            std::pop_heap(heap_.begin(), heap_.end(), &TopK::before);
            heap_.back() = hit;
            std::push_heap(heap_.begin(), heap_.end(), &TopK::before);
        }
    }

    /// Worst kept score; only meaningful once full().
    double threshold() const noexcept { return heap_.front().score; }
    bool full() const noexcept { return heap_.size() == k_; }

    SearchResult take() && {
        std::sort_heap(heap_.begin(), heap_.end(), &TopK::before);
        return std::move(heap_);
    }

  private:
    std::size_t k_;
    std::vector<Hit> heap_;
};

}  // namespace dshc
