#include "curricula/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace curricula {

ClusteringFeature ClusteringFeature::from_point(std::span<const double> x) {
  ClusteringFeature cf;
  cf.count = 1;
  cf.linear_sum.assign(x.begin(), x.end());
  double ss = 0.0;
  for (double v : x) {
    if (!std::isfinite(v))
      throw std::invalid_argument("ClusteringFeature: non-finite coordinate");
    ss += v * v;
  }
  cf.squared_sum = ss;
  return cf;
}

std::vector<double> ClusteringFeature::centroid() const {
  if (count == 0) return linear_sum;
  std::vector<double> c(linear_sum);
  for (double& v : c) v /= static_cast<double>(count);
  return c;
}

double ClusteringFeature::radius() const {
  if (count == 0) return 0.0;
  double norm_sq = 0.0;
  for (double v : linear_sum) norm_sq += v * v;
  const double n = static_cast<double>(count);
  const double var = squared_sum / n - norm_sq / (n * n);
  return std::sqrt(std::max(0.0, var));
}

void ClusteringFeature::validate() const {
  if (count < 0) throw std::runtime_error("ClusteringFeature: negative count");
  if (count == 0) {
    for (double v : linear_sum)
      if (v != 0.0) throw std::runtime_error("ClusteringFeature: empty CF with nonzero sum");
    if (squared_sum != 0.0) throw std::runtime_error("ClusteringFeature: empty CF with nonzero SS");
  }
}

ClusteringFeature cf_merge(const ClusteringFeature& a, const ClusteringFeature& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("cf_merge: dimension mismatch");
  ClusteringFeature out;
  out.count = a.count + b.count;
  out.linear_sum.resize(a.dim());
  for (int i = 0; i < a.dim(); ++i) out.linear_sum[i] = a.linear_sum[i] + b.linear_sum[i];
  out.squared_sum = a.squared_sum + b.squared_sum;
  return out;
}

CFTree::CFTree(int dim, CFTreeConfig config) : dim_(dim), config_(config) {
  if (dim <= 0) throw std::invalid_argument("CFTree: dimension must be positive");
  if (config.branching_factor < 2 || config.max_clusters < 1 || config.rebuild_every < 1)
    throw std::invalid_argument("CFTree: bad configuration");
}

double CFTree::sq_dist(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

int CFTree::nearest_leaf(std::span<const double> x) const {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < leaves_.size(); ++i) {
    const double d = sq_dist(x, leaves_[i].centroid());
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

ClusterAssignment CFTree::insert(std::span<const double> x) {
  if (static_cast<int>(x.size()) != dim_)
    throw std::invalid_argument("CFTree::insert: dimension mismatch");
  const ClusteringFeature point = ClusteringFeature::from_point(x);

  int owner = -1;
  if (!leaves_.empty()) {
    const int near = nearest_leaf(x);
    const ClusteringFeature merged = cf_merge(leaves_[near], point);
    if (merged.radius() <= config_.merge_threshold) {
      leaves_[near] = merged;
      owner = near;
    }
  }
  if (owner < 0) {
    leaves_.push_back(point);
    owner = static_cast<int>(leaves_.size()) - 1;
    if (static_cast<int>(leaves_.size()) > config_.branching_factor) {
      // Fold the two closest leaves together to stay within capacity.
      int bi = 0, bj = 1;
      double best = std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < leaves_.size(); ++i) {
        const auto ci = leaves_[i].centroid();
        for (size_t j = i + 1; j < leaves_.size(); ++j) {
          const double d = sq_dist(ci, leaves_[j].centroid());
          if (d < best) {
            best = d;
            bi = static_cast<int>(i);
            bj = static_cast<int>(j);
          }
        }
      }
      leaves_[bi] = cf_merge(leaves_[bi], leaves_[bj]);
      leaves_.erase(leaves_.begin() + bj);
      if (owner == bj)
        owner = bi;
      else if (owner > bj)
        --owner;
    }
  }

  ++insert_count_;
  if (centers_.empty() || static_cast<int>(leaves_.size()) <= config_.max_clusters ||
      insert_count_ % config_.rebuild_every == 0) {
    rebuild_global();
  }

  ClusterAssignment out = assign(x);
  out.center = leaves_[owner].centroid();
  return out;
}

ClusterAssignment CFTree::assign(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_)
    throw std::invalid_argument("CFTree::assign: dimension mismatch");
  if (centers_.empty()) throw std::runtime_error("CFTree::assign: no published centers");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < centers_.size(); ++i) {
    const double d = sq_dist(x, centers_[i].centroid);
    if (d < best_d) {  // strict: ties stay with the lower cluster id
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return {centers_[best].id, centers_[best].centroid};
}

const std::vector<CFTree::Center>& CFTree::rebuild_global() {
  if (leaves_.empty()) throw std::runtime_error("CFTree::rebuild_global: tree is empty");
  std::vector<ClusteringFeature> groups = leaves_;
  while (static_cast<int>(groups.size()) > config_.max_clusters) {
    int bi = 0, bj = 1;
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < groups.size(); ++i) {
      const auto ci = groups[i].centroid();
      for (size_t j = i + 1; j < groups.size(); ++j) {
        const double d = sq_dist(ci, groups[j].centroid());
        if (d < best) {
          best = d;
          bi = static_cast<int>(i);
          bj = static_cast<int>(j);
        }
      }
    }
    groups[bi] = cf_merge(groups[bi], groups[bj]);
    groups.erase(groups.begin() + bj);
  }
  publish(std::move(groups));
  return centers_;
}

void CFTree::publish(std::vector<ClusteringFeature> groups) {
  const std::vector<Center> old = centers_;
  const int m = static_cast<int>(groups.size());

  std::vector<int> assigned_id(m, -1);
  std::vector<char> old_used(old.size(), 0);
  if (!old.empty()) {
    // Greedy id inheritance: closest (new, old) pairs first.
    std::vector<std::tuple<double, int, int>> pairs;
    for (int i = 0; i < m; ++i) {
      const auto c = groups[i].centroid();
      for (size_t j = 0; j < old.size(); ++j)
        pairs.emplace_back(sq_dist(c, old[j].centroid), i, static_cast<int>(j));
    }
    std::sort(pairs.begin(), pairs.end());
    for (const auto& [d, i, j] : pairs) {
      (void)d;
      if (assigned_id[i] >= 0 || old_used[j]) continue;
      assigned_id[i] = old[j].id;
      old_used[j] = 1;
    }
  }

  std::vector<char> id_taken(config_.max_clusters, 0);
  for (int i = 0; i < m; ++i)
    if (assigned_id[i] >= 0) id_taken[assigned_id[i]] = 1;

  std::vector<Center> fresh;
  fresh.reserve(m);
  for (int i = 0; i < m; ++i) {
    Center c;
    c.centroid = groups[i].centroid();
    if (assigned_id[i] >= 0) {
      c.id = assigned_id[i];
      for (const auto& o : old)
        if (o.id == c.id) c.generation = o.generation;
    } else {
      int id = 0;
      while (id_taken[id]) ++id;
      id_taken[id] = 1;
      c.id = id;
      c.generation = ++generation_counter_;
    }
    fresh.push_back(std::move(c));
  }
  std::sort(fresh.begin(), fresh.end(), [](const Center& a, const Center& b) { return a.id < b.id; });
  centers_ = std::move(fresh);
}

void CFTree::restore(std::vector<ClusteringFeature> leaves, std::vector<Center> centers,
                     long insert_count) {
  leaves_ = std::move(leaves);
  centers_ = std::move(centers);
  insert_count_ = insert_count;
  for (const auto& c : centers_) generation_counter_ = std::max(generation_counter_, c.generation);
}

void RunningStandardizer::observe(std::span<const double> x) {
  if (x.size() != mean_.size())
    throw std::invalid_argument("RunningStandardizer: dimension mismatch");
  ++count_;
  for (size_t i = 0; i < x.size(); ++i) {
    const double delta = x[i] - mean_[i];
    mean_[i] += delta / static_cast<double>(count_);
    m2_[i] += delta * (x[i] - mean_[i]);
  }
}

std::vector<double> RunningStandardizer::normalize(std::span<const double> x) const {
  if (x.size() != mean_.size())
    throw std::invalid_argument("RunningStandardizer: dimension mismatch");
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    double var = count_ > 0 ? m2_[i] / static_cast<double>(count_) : 0.0;
    out[i] = (x[i] - mean_[i]) / std::max(std::sqrt(var), 1e-8);
  }
  return out;
}

std::vector<double> RunningStandardizer::variance() const {
  std::vector<double> v(m2_.size());
  for (size_t i = 0; i < m2_.size(); ++i)
    v[i] = count_ > 0 ? m2_[i] / static_cast<double>(count_) : 0.0;
  return v;
}

void RunningStandardizer::restore(std::vector<double> mean, std::vector<double> m2, long count) {
  mean_ = std::move(mean);
  m2_ = std::move(m2);
  count_ = count;
}

}  // namespace curricula
