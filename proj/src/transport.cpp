#include "simid/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <string>

namespace simid {

namespace {

constexpr int kMaxPivots = 1'000'000;

/// Spanning-tree basis of the transportation problem. Nodes 0..m-1 are rows,
/// m..m+k-1 are columns; every basic cell (i,j) is an edge i -- m+j.
struct TreeBasis {
  std::size_t m;
  std::size_t k;
  std::vector<std::size_t> cells;  // basic cell indices, size m+k-1

  // Node potentials u (rows) and v (cols) with u[0] = 0 and u_i + v_j = c_ij on the tree.
  void potentials(const DistortionMatrix& rho, std::vector<double>& u, std::vector<double>& v) const {
    const std::size_t nodes = m + k;
    std::vector<std::vector<std::size_t>> adj(nodes);
    for (std::size_t c : cells) {
      adj[c / k].push_back(c);
      adj[m + c % k].push_back(c);
    }
    u.assign(m, 0.0);
    v.assign(k, 0.0);
    std::vector<bool> seen(nodes, false);
    std::queue<std::size_t> todo;
    todo.push(0);
    seen[0] = true;
    while (!todo.empty()) {
      const std::size_t node = todo.front();
      todo.pop();
      for (std::size_t c : adj[node]) {
        const std::size_t i = c / k, j = c % k;
        if (node < m && !seen[m + j]) {
          v[j] = rho(i, j) - u[i];
          seen[m + j] = true;
          todo.push(m + j);
        } else if (node >= m && !seen[i]) {
          u[i] = rho(i, j) - v[j];
          seen[i] = true;
          todo.push(i);
        }
      }
    }
  }

  // Tree path (as cell list) from column node of `col` to row node of `row`.
  std::vector<std::size_t> path_col_to_row(std::size_t col, std::size_t row) const {
    const std::size_t nodes = m + k;
    std::vector<std::vector<std::size_t>> adj(nodes);
    for (std::size_t c : cells) {
      adj[c / k].push_back(c);
      adj[m + c % k].push_back(c);
    }
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> via(nodes, kNone);
    std::vector<bool> seen(nodes, false);
    std::queue<std::size_t> todo;
    const std::size_t start = m + col;
    todo.push(start);
    seen[start] = true;
    while (!todo.empty() && !seen[row]) {
      const std::size_t node = todo.front();
      todo.pop();
      for (std::size_t c : adj[node]) {
        const std::size_t other = node < m ? m + c % k : c / k;
        if (!seen[other]) {
          seen[other] = true;
          via[other] = c;
          todo.push(other);
        }
      }
    }
    std::vector<std::size_t> path;
    for (std::size_t node = row; node != start;) {
      const std::size_t c = via[node];
      path.push_back(c);
      node = node < m ? m + c % k : c / k;
    }
    std::reverse(path.begin(), path.end());  // starts at the column end
    return path;
  }
};

void check_dims(const Pmf& p, const Pmf& q, const DistortionMatrix& rho) {
  if (p.size() != rho.rows() || q.size() != rho.cols())
    throw DimensionMismatch("rho_bar: pmf sizes " + std::to_string(p.size()) + "x" + std::to_string(q.size()) +
                            " do not match distortion " + std::to_string(rho.rows()) + "x" +
                            std::to_string(rho.cols()));
}

}  // namespace

double DualVertex::evaluate(const Pmf& p) const {
  double s = offset_on_py;
  for (std::size_t x = 0; x < alpha.size(); ++x) s += alpha[x] * p[x];
  return s;
}

RhoBarResult rho_bar(const Pmf& p, const Pmf& q, const DistortionMatrix& rho) {
  check_dims(p, q, rho);
  const std::size_t m = rho.rows(), k = rho.cols();
  std::vector<double> flow(m * k, 0.0);
  std::vector<bool> basic(m * k, false);
  TreeBasis basis{m, k, {}};

  // North-west corner start; degenerate steps keep a zero cell so the basis
  // stays a spanning tree.
  {
    std::vector<double> supply(p.vec()), demand(q.vec());
    std::size_t i = 0, j = 0;
    for (;;) {
      const double x = std::min(supply[i], demand[j]);
      const std::size_t c = i * k + j;
      flow[c] = x;
      basic[c] = true;
      basis.cells.push_back(c);
      supply[i] -= x;
      demand[j] -= x;
      if (i == m - 1 && j == k - 1) break;
      if (i == m - 1) {
        ++j;
      } else if (j == k - 1) {
        ++i;
      } else if (supply[i] <= demand[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  const double eps = 1e-12 * (1.0 + rho.rho_max());
  std::vector<double> u, v;
  int pivots = 0;
  for (; pivots < kMaxPivots; ++pivots) {
    basis.potentials(rho, u, v);
    // Bland: lowest-index improving cell enters.
    std::size_t entering = m * k;
    for (std::size_t c = 0; c < m * k; ++c) {
      if (basic[c]) continue;
      if (rho(c / k, c % k) - u[c / k] - v[c % k] < -eps) {
        entering = c;
        break;
      }
    }
    if (entering == m * k) break;

    const auto path = basis.path_col_to_row(entering % k, entering / k);
    // Signs along the path alternate -, +, -, ..., - starting at the column end.
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving = m * k;
    for (std::size_t t = 0; t < path.size(); t += 2) {
      const std::size_t c = path[t];
      if (flow[c] < theta || (flow[c] == theta && c < leaving)) {
        theta = flow[c];
        leaving = c;
      }
    }
    for (std::size_t t = 0; t < path.size(); ++t) {
      double& f = flow[path[t]];
      f += (t % 2 == 0) ? -theta : theta;
      if (f < 0.0) f = 0.0;
    }
    flow[entering] = theta;
    flow[leaving] = 0.0;
    basic[leaving] = false;
    basic[entering] = true;
    std::replace(basis.cells.begin(), basis.cells.end(), leaving, entering);
  }
  if (pivots == kMaxPivots) throw Error("rho_bar: transportation simplex did not terminate");

  RhoBarResult res;
  res.pivots = pivots;
  res.witness.rows = m;
  res.witness.cols = k;
  res.witness.joint = flow;
  double value = 0.0;
  for (std::size_t c = 0; c < m * k; ++c) value += flow[c] * rho(c / k, c % k);
  res.witness.value = value;
  res.value = value;
  res.dual.alpha = u;
  res.dual.beta = v;
  res.dual.offset_on_py = std::inner_product(v.begin(), v.end(), q.vec().begin(), 0.0);
  return res;
}

double rho_bar_hamming(const Pmf& p, const Pmf& q) {
  if (p.size() != q.size()) throw DimensionMismatch("rho_bar_hamming: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

void for_each_bipartite_spanning_tree(std::size_t rows, std::size_t cols, std::size_t budget,
                                      const std::function<void(const std::vector<std::size_t>&)>& visit) {
  const std::size_t edges = rows * cols;
  const std::size_t pick = rows + cols - 1;
  // C(edges, pick), saturating at budget + 1
  double combos = 1.0;
  for (std::size_t i = 0; i < pick; ++i) combos = combos * static_cast<double>(edges - i) / static_cast<double>(i + 1);
  if (combos > static_cast<double>(budget))
    throw BudgetExceeded("spanning tree enumeration: " + std::to_string(static_cast<long double>(combos)) +
                         " edge subsets exceed budget " + std::to_string(budget));

  std::vector<std::size_t> idx(pick);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::size_t> parent(rows + cols);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (;;) {
    std::iota(parent.begin(), parent.end(), 0);
    bool acyclic = true;
    for (std::size_t c : idx) {
      const std::size_t a = find(c / cols), b = find(rows + c % cols);
      if (a == b) {
        acyclic = false;
        break;
      }
      parent[a] = b;
    }
    if (acyclic) visit(idx);

    // next combination in lexicographic order
    std::size_t i = pick;
    while (i > 0 && idx[i - 1] == edges - pick + (i - 1)) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < pick; ++j) idx[j] = idx[j - 1] + 1;
  }
}

std::vector<DualVertex> dual_vertices(const DistortionMatrix& rho, const Pmf& q, std::size_t tree_budget) {
  if (q.size() != rho.cols()) throw DimensionMismatch("dual_vertices: q size != distortion columns");
  const std::size_t m = rho.rows(), k = rho.cols();
  const double feas_tol = 1e-9;

  std::vector<DualVertex> out;
  std::map<std::vector<long long>, std::size_t> seen;
  std::vector<double> u, v;
  for_each_bipartite_spanning_tree(m, k, tree_budget, [&](const std::vector<std::size_t>& cells) {
    TreeBasis{m, k, cells}.potentials(rho, u, v);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < k; ++j)
        if (u[i] + v[j] > rho(i, j) + feas_tol) return;
    std::vector<long long> key;
    key.reserve(m + k);
    for (double a : u) key.push_back(std::llround(a * 1e9));
    for (double b : v) key.push_back(std::llround(b * 1e9));
    if (!seen.emplace(std::move(key), out.size()).second) return;
    DualVertex dv;
    dv.alpha = u;
    dv.beta = v;
    dv.offset_on_py = std::inner_product(v.begin(), v.end(), q.vec().begin(), 0.0);
    out.push_back(std::move(dv));
  });
  return out;
}

}  // namespace simid
