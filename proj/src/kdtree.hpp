#pragma once

#include <cstddef>
#include <vector>

namespace mfl::detail {

// Static kd-tree over row-major points for Euclidean k-nearest-neighbour
// distances. Points are referenced, not copied; they must outlive the tree.
class KdTree {
 public:
  KdTree(const double* points, std::size_t count, std::size_t dim);

  /// Distance from point i to its k-th nearest other point.
  double kth_neighbor_distance(std::size_t i, std::size_t k) const;

 private:
  struct Node {
    std::size_t begin;
    std::size_t end;
    std::size_t split_dim;
    double split_value;
    int left = -1;
    int right = -1;
  };

  int build(std::size_t begin, std::size_t end);
  double coord(std::size_t point, std::size_t d) const { return points_[point * dim_ + d]; }

  const double* points_;
  std::size_t count_;
  std::size_t dim_;
  std::vector<std::size_t> index_;
  std::vector<Node> nodes_;
};

}  // namespace mfl::detail
