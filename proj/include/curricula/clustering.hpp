#pragma once

#include <span>
#include <vector>

#include "curricula/matrix.hpp"

namespace curricula {

// Additive summary of a point set: count, componentwise linear sum, and the
// scalar sum of squared norms. Exact under merge.
struct ClusteringFeature {
  long count = 0;
  std::vector<double> linear_sum;
  double squared_sum = 0.0;

  static ClusteringFeature empty(int dim) {
    ClusteringFeature cf;
    cf.linear_sum.assign(dim, 0.0);
    return cf;
  }
  static ClusteringFeature from_point(std::span<const double> x);

  int dim() const { return static_cast<int>(linear_sum.size()); }
  std::vector<double> centroid() const;
  double radius() const;
  void validate() const;
};

ClusteringFeature cf_merge(const ClusteringFeature& a, const ClusteringFeature& b);

struct ClusterAssignment {
  int cluster_id = 0;
  std::vector<double> center;
};

struct CFTreeConfig {
  int branching_factor = 8;     // max leaves held at once
  double merge_threshold = 0.5; // max leaf radius for absorbing a point
  int max_clusters = 4;         // cap on published centers
  int rebuild_every = 50;       // insertions between global passes
};

// Flat clustering-feature tree: leaves absorb points within the radius
// threshold, the two closest leaves merge when the leaf list overflows, and
// a global agglomerative pass condenses leaves into at most max_clusters
// published centers. Cluster ids live in [0, max_clusters); when a global
// pass moves centers, each new center inherits the id of the nearest old
// center (greedy, closest pairs first) and leftover centers take the
// smallest free ids with a bumped generation so downstream per-cluster state
// can be reset.
class CFTree {
 public:
  struct Center {
    int id = 0;
    long generation = 0;
    std::vector<double> centroid;
  };

  CFTree(int dim, CFTreeConfig config);

  ClusterAssignment insert(std::span<const double> x);
  ClusterAssignment assign(std::span<const double> x) const;
  const std::vector<Center>& rebuild_global();

  const std::vector<Center>& centers() const { return centers_; }
  const std::vector<ClusteringFeature>& leaves() const { return leaves_; }
  int dim() const { return dim_; }
  const CFTreeConfig& config() const { return config_; }
  long insert_count() const { return insert_count_; }

  // Checkpoint restore.
  void restore(std::vector<ClusteringFeature> leaves, std::vector<Center> centers,
               long insert_count);

 private:
  int nearest_leaf(std::span<const double> x) const;
  void publish(std::vector<ClusteringFeature> groups);
  static double sq_dist(std::span<const double> a, std::span<const double> b);

  int dim_;
  CFTreeConfig config_;
  std::vector<ClusteringFeature> leaves_;
  std::vector<Center> centers_;
  long insert_count_ = 0;
  long generation_counter_ = 0;
};

// Per-coordinate running standardizer (Welford). Contexts are normalized to
// zero mean / unit variance before clustering so the merge threshold acts on
// a stable metric.
class RunningStandardizer {
 public:
  explicit RunningStandardizer(int dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

  void observe(std::span<const double> x);
  std::vector<double> normalize(std::span<const double> x) const;

  long count() const { return count_; }
  const std::vector<double>& mean() const { return mean_; }
  std::vector<double> variance() const;
  void restore(std::vector<double> mean, std::vector<double> m2, long count);
  const std::vector<double>& m2() const { return m2_; }

 private:
  std::vector<double> mean_, m2_;
  long count_ = 0;
};

}  // namespace curricula
