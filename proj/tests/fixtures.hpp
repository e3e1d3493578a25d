#pragma once

#include "scone/domains.hpp"

#include <algorithm>
#include <random>
#include <string>

namespace scone::testutil {

inline AlchemyState random_alchemy(int beakers, int max_depth, std::mt19937_64& rng) {
    static const std::string colors = "bgopry";
    std::uniform_int_distribution<int> depth(0, max_depth);
    std::uniform_int_distribution<int> color(0, 5);
    AlchemyState st;
    st.beakers.resize(beakers);
    for (auto& b : st.beakers) {
        int d = depth(rng);
        for (int i = 0; i < d; ++i) b += colors[color(rng)];
    }
    return st;
}

inline SceneState random_scene(int positions, std::mt19937_64& rng) {
    static const std::string colors = "bgopry";
    std::uniform_int_distribution<int> slot(0, 6);
    SceneState st;
    st.positions.resize(positions);
    for (auto& p : st.positions) {
        int s = slot(rng);
        p.shirt = s == 0 ? '_' : colors[s - 1];
        // a hat can only sit on a person
        if (p.shirt != '_') {
            int h = slot(rng);
            p.hat = h == 0 ? '_' : colors[h - 1];
        }
    }
    return st;
}

inline TangramsState random_tangrams(int max_positions, std::mt19937_64& rng) {
    std::string pool = "01234";
    std::shuffle(pool.begin(), pool.end(), rng);
    std::uniform_int_distribution<int> len(0, max_positions);
    TangramsState st;
    st.figures = pool.substr(0, len(rng));
    return st;
}

inline State random_state(const Domain& domain, std::mt19937_64& rng) {
    switch (domain.kind()) {
        case DomainKind::alchemy: return random_alchemy(domain.positions(), 4, rng);
        case DomainKind::scene: return random_scene(domain.positions(), rng);
        case DomainKind::tangrams: return random_tangrams(domain.positions(), rng);
    }
    throw std::logic_error("unreachable");
}

} // namespace scone::testutil
