#include "optpac/instances.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "optpac/errors.hpp"

namespace optpac {

int tree_depth(int num_states) {
    int d = 0;
    while ((1LL << d) < num_states) ++d;
    return d;
}

void validate_tree_spec(const TreeSpec& spec) {
    if (spec.num_states < 4)
        throw ConfigError("tree instance needs S >= 4 (got S=" + std::to_string(spec.num_states) + ")");
    if (spec.num_actions < 2)
        throw ConfigError("tree instance needs A >= 2 (got A=" + std::to_string(spec.num_actions) + ")");
    const int need = tree_depth(spec.num_states) + 1;
    if (spec.horizon < need)
        throw ConfigError("tree instance needs H >= ceil(log2(S)) + 1 = " + std::to_string(need) +
                          " (got H=" + std::to_string(spec.horizon) + ")");
    if (!(spec.delta > 0.0 && spec.delta <= 1.0))
        throw ConfigError("tree instance needs 0 < delta <= 1 (got " + std::to_string(spec.delta) + ")");
    if (!spec.bernoulli && !(spec.variance > 0.0))
        throw ConfigError("tree instance needs a positive reward variance");
}

int tree_reward_state(const TreeSpec& spec) { return spec.num_states - 1; }

int tree_leaf_count(const TreeSpec& spec) {
    const int nodes = spec.num_states - 1;
    int leaves = 0;
    for (int i = 0; i < nodes; ++i)
        if (2 * i + 1 >= nodes) ++leaves;
    return leaves;
}

Mdp tree_mdp(const TreeSpec& spec) {
    validate_tree_spec(spec);
    const int S = spec.num_states, A = spec.num_actions, H = spec.horizon;
    const int nodes = S - 1;
    const int goal = tree_reward_state(spec);
    MdpBuilder b(S, A, H, 0);

    const std::vector<int> two{0, 1};
    for (int h = 1; h <= H - 1; ++h) {
        for (int s = 0; s < nodes; ++s) {
            const int left = 2 * s + 1, right = 2 * s + 2;
            const bool has_left = left < nodes, has_right = right < nodes;
            if (has_left) b.set_actions(h, s, two);
            for (int a = 0; a < A; ++a) {
                if (!b.available(h, s, a)) continue;
                int next = s;
                if (h == H - 1) next = goal;
                else if (a == 0 && has_left) next = left;
                else if (a == 1 && has_right) next = right;
                b.set_deterministic(h, s, a, next);
            }
        }
    }

    b.set_actions(H, goal, two);
    if (spec.bernoulli) {
        b.set_reward(H, goal, 0, RewardModel::bernoulli(spec.delta));
        b.set_reward(H, goal, 1, RewardModel::bernoulli(0.0));
    } else {
        b.set_reward(H, goal, 0, RewardModel::gaussian(spec.delta, spec.variance));
        b.set_reward(H, goal, 1, RewardModel::gaussian(0.0, spec.variance));
    }
    return b.build();
}

Mdp random_mdp(int num_states, int num_actions, int horizon, std::uint64_t seed, bool stochastic) {
    const int S = num_states, A = num_actions, H = horizon;
    MdpBuilder b(S, A, H, 0);
    Rng rng(mix64(seed));
    std::vector<double> row(S);
    for (int h = 1; h <= H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                if (stochastic) {
                    // Dirichlet(1,...,1) as normalized unit exponentials.
                    double total = 0.0;
                    for (int k = 0; k < S; ++k) {
                        row[k] = -std::log1p(-uniform01(rng));
                        total += row[k];
                    }
                    for (double& x : row) x /= total;
                    b.set_transition(h, s, a, row);
                } else {
                    b.set_deterministic(h, s, a, static_cast<int>(uniform01(rng) * S));
                }
                b.set_reward(h, s, a, RewardModel::bernoulli(uniform01(rng)));
            }
    return b.build();
}

}  // namespace optpac
