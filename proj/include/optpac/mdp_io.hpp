#pragma once

// MDP spec files: JSON documents of the form
//
//   {
//     "format": "optpac-mdp", "version": 1,
//     "S": 3, "A": 2, "H": 3, "s1": 0,
//     "masks":       [h][s]    -> list of available actions       (optional)
//     "transitions": [h][s][a] -> list of S probabilities, or null (unavailable)
//     "rewards":     [h][s][a] -> {"kind": "bernoulli"|"fixed"|"gaussian",
//                                  "mean": m, "variance": v}, or null
//   }
//
// Outer arrays are indexed by stage 1..H in order. Loading validates every
// model invariant and reports the first violation with its coordinates.

#include <filesystem>
#include <string>
#include <string_view>

#include "optpac/mdp.hpp"

namespace optpac {

Mdp parse_mdp(std::string_view text);
Mdp load_mdp(const std::filesystem::path& path);

std::string serialize_mdp(const Mdp& mdp);
void save_mdp(const Mdp& mdp, const std::filesystem::path& path);

}  // namespace optpac
