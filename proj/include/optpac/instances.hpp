#pragma once

// Benchmark MDP constructors.

#include <cstdint>

#include "optpac/mdp.hpp"

namespace optpac {

/// Binary-tree instance with a single rewarded action at the last stage.
///
/// States 0..S-2 form a breadth-first binary tree rooted at state 0; state S-1
/// is the reward state. For the first stages, action 0 moves to the left child
/// and action 1 to the right child. Two-child nodes expose exactly those two
/// actions, a node with a single child exposes {0 -> child, 1 -> stay}, and
/// leaves keep all A actions as self-loops. At stage H-1 every available action
/// of every state leads to the reward state, which exposes two actions at
/// stage H: action 0 pays `delta` on average, action 1 pays zero.
struct TreeSpec {
    int num_states = 8;
    int num_actions = 3;
    int horizon = 4;
    double delta = 0.2;
    double variance = 1.0;
    // Bernoulli(delta) / zero rewards at the last stage instead of Gaussian.
    bool bernoulli = false;
};

/// ceil(log2(S)) for S >= 1.
int tree_depth(int num_states);

/// Throws ConfigError naming the violated constraint.
void validate_tree_spec(const TreeSpec& spec);

Mdp tree_mdp(const TreeSpec& spec);

int tree_reward_state(const TreeSpec& spec);

/// Tree states without children; each has all A actions and is reachable at
/// stage H-1.
int tree_leaf_count(const TreeSpec& spec);

/// All actions available. Transitions are Dirichlet(1) rows when `stochastic`,
/// otherwise a uniformly drawn successor. Bernoulli rewards with means drawn
/// uniformly on [0, 1]. Fully determined by `seed`.
Mdp random_mdp(int num_states, int num_actions, int horizon, std::uint64_t seed, bool stochastic);

}  // namespace optpac
