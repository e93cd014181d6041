#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "../process.hpp"
#include "../random.hpp"

// Randomized sorting by transpositions: pick two different positions
// uniformly at random, swap the entries iff they are out of order. The
// potential is the inversion count, maintained incrementally; a chosen
// inversion's swap decreases it by at least 1.

namespace driftkit {

struct ArrayState {
    std::vector<int> entries;
    std::int64_t inversions = 0;
};

// Merge-counting routine, O(n log n); used when (re)building states.
inline std::int64_t count_inversions(const std::vector<int>& entries) {
    std::vector<int> work(entries);
    std::vector<int> buffer(entries.size());
    std::int64_t total = 0;
    for (std::size_t width = 1; width < work.size(); width *= 2) {
        for (std::size_t left = 0; left + width < work.size(); left += 2 * width) {
            const std::size_t mid = left + width;
            const std::size_t right = std::min(left + 2 * width, work.size());
            std::size_t i = left, j = mid, k = left;
            while (i < mid && j < right) {
                if (work[j] < work[i]) {
                    total += static_cast<std::int64_t>(mid - i);
                    buffer[k++] = work[j++];
                } else {
                    buffer[k++] = work[i++];
                }
            }
            while (i < mid) buffer[k++] = work[i++];
            while (j < right) buffer[k++] = work[j++];
            std::copy(buffer.begin() + static_cast<std::ptrdiff_t>(left),
                      buffer.begin() + static_cast<std::ptrdiff_t>(right),
                      work.begin() + static_cast<std::ptrdiff_t>(left));
        }
    }
    return total;
}

inline ArrayState make_array_state(std::vector<int> entries) {
    ArrayState s;
    s.inversions = count_inversions(entries);
    s.entries = std::move(entries);
    return s;
}

class InversionSortProcess {
public:
    enum class Start { random_permutation, adjacent_swapped, fixed };

    using state_type = ArrayState;

    InversionSortProcess(std::int64_t n, Start start, std::vector<int> fixed_entries = {})
        : n_(n), start_(start), fixed_(std::move(fixed_entries)) {
        if (n < 1) throw std::invalid_argument("InversionSortProcess: n must be >= 1");
        if (start == Start::adjacent_swapped && n % 2 != 0)
            throw std::invalid_argument("InversionSortProcess: adjacent_swapped start needs even n");
        if (start == Start::fixed) {
            if (static_cast<std::int64_t>(fixed_.size()) != n)
                throw std::invalid_argument("InversionSortProcess: fixed start length mismatch");
        } else if (!fixed_.empty()) {
            throw std::invalid_argument("InversionSortProcess: fixed entries given without fixed start");
        }
    }

    std::string_view name() const { return "inversion_sort"; }

    std::int64_t n() const { return n_; }

    state_type initial_state(RandomStream& rng) const {
        switch (start_) {
            case Start::random_permutation: {
                std::vector<int> entries(static_cast<std::size_t>(n_));
                std::iota(entries.begin(), entries.end(), 1);
                driftkit::shuffle(entries, rng);
                return make_array_state(std::move(entries));
            }
            case Start::adjacent_swapped: {
                std::vector<int> entries(static_cast<std::size_t>(n_));
                for (std::size_t i = 0; i < entries.size(); i += 2) {
                    entries[i] = static_cast<int>(i) + 2;
                    entries[i + 1] = static_cast<int>(i) + 1;
                }
                return make_array_state(std::move(entries));
            }
            case Start::fixed:
                return make_array_state(fixed_);
        }
        throw std::logic_error("InversionSortProcess: unknown start mode");
    }

    state_type step(const state_type& s, RandomStream& rng) const {
        if (absorbed(s) || n_ < 2) return s;
        const auto [i, j] = rng.distinct_pair(static_cast<std::uint64_t>(n_));
        const auto a = static_cast<std::size_t>(i);
        const auto b = static_cast<std::size_t>(j);
        if (s.entries[a] <= s.entries[b]) return s;
        state_type next = s;
        // Swapping out-of-order values big = A[a] > small = A[b] fixes the
        // (a, b) pair itself and only touches pairs formed with positions
        // strictly between; each such pair can only lose an inversion, so
        // the potential drops by at least 1.
        const int big = s.entries[a];
        const int small = s.entries[b];
        std::int64_t delta = -1;
        for (std::size_t k = a + 1; k < b; ++k) {
            const int mid = s.entries[k];
            delta += (mid > big ? 1 : 0) - (mid > small ? 1 : 0);      // pair (k, b)
            delta += (small > mid ? 1 : 0) - (big > mid ? 1 : 0);      // pair (a, k)
        }
        std::swap(next.entries[a], next.entries[b]);
        next.inversions += delta;
        return next;
    }

    double potential(const state_type& s) const { return static_cast<double>(s.inversions); }

    bool absorbed(const state_type& s) const { return s.inversions == 0; }

private:
    std::int64_t n_;
    Start start_;
    std::vector<int> fixed_;
};

}  // namespace driftkit
