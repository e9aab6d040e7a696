#include "kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace mfl::detail {

namespace {
constexpr std::size_t kLeafSize = 12;
}

KdTree::KdTree(const double* points, std::size_t count, std::size_t dim)
    : points_(points), count_(count), dim_(dim), index_(count) {
  if (count == 0 || dim == 0) throw std::invalid_argument("KdTree: empty point set");
  std::iota(index_.begin(), index_.end(), std::size_t{0});
  nodes_.reserve(2 * count / kLeafSize + 2);
  build(0, count);
}

int KdTree::build(std::size_t begin, std::size_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{begin, end, 0, 0.0});
  if (end - begin <= kLeafSize) return id;

  std::size_t best_dim = 0;
  double best_spread = -1.0;
  for (std::size_t d = 0; d < dim_; ++d) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t k = begin; k < end; ++k) {
      const double v = coord(index_[k], d);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best_dim = d;
    }
  }
  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(index_.begin() + static_cast<std::ptrdiff_t>(begin),
                   index_.begin() + static_cast<std::ptrdiff_t>(mid),
                   index_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) {
                     return coord(a, best_dim) < coord(b, best_dim);
                   });
  const double split = coord(index_[mid], best_dim);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].split_dim = best_dim;
  nodes_[static_cast<std::size_t>(id)].split_value = split;
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

double KdTree::kth_neighbor_distance(std::size_t i, std::size_t k) const {
  if (k == 0 || k >= count_) throw std::invalid_argument("KdTree: need 1 <= k < N");
  // Max-heap of the k smallest squared distances seen so far.
  std::priority_queue<double> best;
  const auto worst = [&] {
    return best.size() < k ? std::numeric_limits<double>::infinity() : best.top();
  };

  struct Pending {
    int node;
    double bound;
  };
  std::vector<Pending> stack{{0, 0.0}};
  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    if (p.bound >= worst()) continue;
    const Node& node = nodes_[static_cast<std::size_t>(p.node)];
    if (node.left < 0) {
      for (std::size_t q = node.begin; q < node.end; ++q) {
        const std::size_t j = index_[q];
        if (j == i) continue;
        double d2 = 0.0;
        for (std::size_t d = 0; d < dim_; ++d) {
          const double diff = coord(i, d) - coord(j, d);
          d2 += diff * diff;
        }
        if (best.size() < k) {
          best.push(d2);
        } else if (d2 < best.top()) {
          best.pop();
          best.push(d2);
        }
      }
      continue;
    }
    const double delta = coord(i, node.split_dim) - node.split_value;
    const int near = delta < 0 ? node.left : node.right;
    const int far = delta < 0 ? node.right : node.left;
    stack.push_back({far, std::max(p.bound, delta * delta)});
    stack.push_back({near, p.bound});
  }
  return std::sqrt(best.top());
}

}  // namespace mfl::detail
