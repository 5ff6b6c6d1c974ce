#pragma once
// Transport (rho-bar) distance between two pmfs on finite alphabets and its
// representation as a maximum of linear functions of the first argument.

#include <cstddef>
#include <functional>
#include <vector>

#include "simid/core.hpp"

namespace simid {

/// Joint pmf with prescribed marginals and its expected distortion.
struct Coupling {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> joint;  // row-major
  double value = 0.0;

  double operator()(std::size_t x, std::size_t y) const { return joint[x * cols + y]; }
};

/// Basic feasible point of the dual polyhedron {alpha(x) + beta(y) <= rho(x,y)},
/// gauge-fixed by alpha(0) = 0.
struct DualVertex {
  std::vector<double> alpha;
  std::vector<double> beta;
  double offset_on_py = 0.0;  // sum_y beta(y) py(y)

  /// Linear piece alpha . p + offset_on_py.
  double evaluate(const Pmf& p) const;
};

struct RhoBarResult {
  double value = 0.0;
  Coupling witness;
  DualVertex dual;  // an optimal dual solution (complementary to `witness`)
  int pivots = 0;
};

/// Exact optimum of the transportation LP min E[rho(X,Y)] over couplings of p and q.
RhoBarResult rho_bar(const Pmf& p, const Pmf& q, const DistortionMatrix& rho);

/// Closed form for Hamming distortion: half the L1 distance.
double rho_bar_hamming(const Pmf& p, const Pmf& q);

inline constexpr std::size_t kDefaultTreeBudget = 20'000'000;

/// All deduplicated basic dual solutions for target marginal q. For every pmf
/// p, max over the result of evaluate(p) equals rho_bar(p, q, rho).
std::vector<DualVertex> dual_vertices(const DistortionMatrix& rho, const Pmf& q,
                                      std::size_t tree_budget = kDefaultTreeBudget);

/// Calls `visit` with the edge list (cell indices r*cols+c) of every spanning
/// tree of the complete bipartite graph K_{rows,cols}. Throws BudgetExceeded
/// when the number of candidate edge subsets exceeds `budget`.
void for_each_bipartite_spanning_tree(std::size_t rows, std::size_t cols, std::size_t budget,
                                      const std::function<void(const std::vector<std::size_t>&)>& visit);

}  // namespace simid
