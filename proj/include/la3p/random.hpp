#pragma once

#include <random>

namespace la3p {

/// Seeded random source shared by every sampling routine.
using Rng = std::mt19937_64;

}  // namespace la3p
