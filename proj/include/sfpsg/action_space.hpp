#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sfpsg/errors.hpp"

namespace sfpsg {

// Joint action profiles are flattened row-major: player 0's action is the
// slowest index, the last player's the fastest. Every payoff tensor and
// transition block in the library uses this order.
struct ActionSpace {
    std::vector<int> counts;  // |A^i| per player

    int players() const { return static_cast<int>(counts.size()); }

    std::int64_t num_profiles() const {
        std::int64_t n = 1;
        for (int c : counts) n *= c;
        return n;
    }

    std::int64_t index(std::span<const int> profile) const {
        std::int64_t idx = 0;
        for (int j = 0; j < players(); ++j) idx = idx * counts[j] + profile[j];
        return idx;
    }

    void decode(std::int64_t idx, std::vector<int>& profile) const {
        profile.resize(counts.size());
        for (int j = players() - 1; j >= 0; --j) {
            profile[j] = static_cast<int>(idx % counts[j]);
            idx /= counts[j];
        }
    }

    std::vector<int> decode(std::int64_t idx) const {
        std::vector<int> profile;
        decode(idx, profile);
        return profile;
    }

    // Odometer step in index order; returns false after the last profile.
    bool next(std::vector<int>& profile) const {
        for (int j = players() - 1; j >= 0; --j) {
            if (++profile[j] < counts[j]) return true;
            profile[j] = 0;
        }
        return false;
    }

    bool operator==(const ActionSpace& other) const = default;
};

inline void require_profile_tensor(const ActionSpace& space, std::span<const double> q,
                                   const char* what) {
    if (static_cast<std::int64_t>(q.size()) != space.num_profiles())
        throw ShapeError(std::string(what) + ": tensor has " + std::to_string(q.size()) +
                         " entries, expected " + std::to_string(space.num_profiles()));
}

}  // namespace sfpsg
