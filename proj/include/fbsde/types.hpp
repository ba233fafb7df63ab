#pragma once
// Shared small dense types.  Everything in this library works on matrices of
// order <= 6, so the aliases below are dynamic-size but fixed-capacity: they
// live on the stack and never touch the heap, which keeps the integrator hot
// loops allocation-free.

#include <Eigen/Dense>

namespace fbsde {

// Largest matrix order handled by the dense helpers (Lyapunov solves etc.).
inline constexpr int kMaxDim = 6;

// Largest embedding dimension used by the manifold catalogue (flat torus in R^4).
inline constexpr int kMaxEmbedDim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

using EmbedVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxEmbedDim, 1>;
using EmbedMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxEmbedDim, kMaxDim>;

}  // namespace fbsde
