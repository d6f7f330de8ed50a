#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "curricula/clustering.hpp"
#include "curricula/rng.hpp"

using namespace curricula;

namespace {

// Dyadic coordinates (multiples of 1/1024) keep every partial sum exactly
// representable, so CF additivity can be checked with no tolerance.
std::vector<double> dyadic_point(Rng& rng, int dim, double extent = 4.0) {
  std::vector<double> p(dim);
  for (double& v : p) v = std::round(rng.uniform(-extent, extent) * 1024.0) / 1024.0;
  return p;
}

ClusteringFeature batch_cf(const std::vector<std::vector<double>>& points) {
  ClusteringFeature cf = ClusteringFeature::empty(static_cast<int>(points[0].size()));
  for (const auto& p : points) {
    cf.count += 1;
    for (size_t i = 0; i < p.size(); ++i) cf.linear_sum[i] += p[i];
    for (double v : p) cf.squared_sum += v * v;
  }
  return cf;
}

}  // namespace

TEST_CASE("clustering-feature additivity is exact") {
  SUBCASE("merge with the empty feature is the identity") {
    Rng rng(21);
    const auto p = dyadic_point(rng, 3);
    const auto cf = ClusteringFeature::from_point(p);
    const auto merged = cf_merge(cf, ClusteringFeature::empty(3));
    CHECK(merged.count == cf.count);
    CHECK(merged.linear_sum == cf.linear_sum);
    CHECK(merged.squared_sum == cf.squared_sum);
  }
  SUBCASE("two singletons merge to the two-point batch feature") {
    Rng rng(22);
    const auto p1 = dyadic_point(rng, 2), p2 = dyadic_point(rng, 2);
    const auto merged = cf_merge(ClusteringFeature::from_point(p1), ClusteringFeature::from_point(p2));
    const auto batch = batch_cf({p1, p2});
    CHECK(merged.count == 2);
    CHECK(merged.linear_sum == batch.linear_sum);
    CHECK(merged.squared_sum == batch.squared_sum);
  }
  SUBCASE("50 random points split arbitrarily: group merge equals batch, exactly") {
    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<std::vector<double>> all, group_a, group_b;
      for (int i = 0; i < 50; ++i) {
        all.push_back(dyadic_point(rng, 2));
        (rng.uniform() < 0.5 ? group_a : group_b).push_back(all.back());
      }
      if (group_a.empty() || group_b.empty()) continue;
      const auto merged = cf_merge(batch_cf(group_a), batch_cf(group_b));
      const auto whole = batch_cf(all);
      CHECK(merged.count == whole.count);
      CHECK(merged.linear_sum == whole.linear_sum);
      CHECK(merged.squared_sum == whole.squared_sum);
    }
  }
  SUBCASE("dimension mismatch is a contract violation") {
    CHECK_THROWS_AS(cf_merge(ClusteringFeature::empty(2), ClusteringFeature::empty(3)),
                    std::invalid_argument);
  }
}

TEST_CASE("centroid identity: LS/N equals the arithmetic mean") {
  Rng rng(24);
  std::vector<std::vector<double>> points;
  ClusteringFeature cf = ClusteringFeature::empty(4);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> p(4);
    for (double& v : p) v = rng.uniform(-3.0, 3.0);
    points.push_back(p);
    cf = cf_merge(cf, ClusteringFeature::from_point(p));
  }
  const auto centroid = cf.centroid();
  for (int d = 0; d < 4; ++d) {
    double mean = 0.0;
    for (const auto& p : points) mean += p[d];
    mean /= points.size();
    CHECK(std::abs(centroid[d] - mean) <= 1e-9 * std::max(1.0, std::abs(mean)));
  }
  CHECK(cf.radius() >= 0.0);
}

TEST_CASE("insertion") {
  CFTreeConfig cfg;
  cfg.merge_threshold = 0.5;
  cfg.max_clusters = 4;

  SUBCASE("first point becomes cluster 0 centered on itself") {
    CFTree tree(2, cfg);
    const auto a = tree.insert(std::vector<double>{0.25, -0.5});
    CHECK(a.cluster_id == 0);
    CHECK(a.center == std::vector<double>{0.25, -0.5});
    CHECK(tree.centers().size() == 1);
  }
  SUBCASE("second point within the threshold joins and the center is the midpoint") {
    CFTree tree(2, cfg);
    tree.insert(std::vector<double>{0.0, 0.0});
    const auto a = tree.insert(std::vector<double>{0.5, 0.0});
    CHECK(a.cluster_id == 0);
    CHECK(a.center[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(a.center[1] == 0.0);
    CHECK(tree.leaves().size() == 1);
  }
  SUBCASE("two separated blobs recover both means") {
    Rng rng(25);
    CFTree tree(2, cfg);
    // Blob centers are 10 apart; threshold 1; 100 points each, interleaved.
    const std::vector<std::vector<double>> centers = {{-5.0, 0.0}, {5.0, 0.0}};
    std::vector<std::vector<double>> sums(2, std::vector<double>(2, 0.0));
    for (int i = 0; i < 200; ++i) {
      const int blob = i % 2;
      std::vector<double> p = {centers[blob][0] + rng.uniform(-0.5, 0.5),
                               centers[blob][1] + rng.uniform(-0.5, 0.5)};
      sums[blob][0] += p[0];
      sums[blob][1] += p[1];
      tree.insert(p);
    }
    REQUIRE(tree.centers().size() == 2);
    // Compare each published center against the true blob mean (brute force).
    for (int blob = 0; blob < 2; ++blob) {
      const std::vector<double> mean = {sums[blob][0] / 100, sums[blob][1] / 100};
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : tree.centers()) {
        const double d = std::hypot(c.centroid[0] - mean[0], c.centroid[1] - mean[1]);
        best = std::min(best, d);
      }
      CHECK(best < 0.3);
    }
  }
  SUBCASE("non-finite coordinates are contract violations") {
    CFTree tree(2, cfg);
    CHECK_THROWS_AS(tree.insert(std::vector<double>{0.0, std::nan("")}), std::invalid_argument);
  }
  SUBCASE("published center count never exceeds the cap") {
    Rng rng(26);
    CFTreeConfig tight = cfg;
    tight.max_clusters = 3;
    tight.merge_threshold = 0.05;
    CFTree tree(2, tight);
    for (int i = 0; i < 500; ++i) {
      tree.insert(dyadic_point(rng, 2, 8.0));
      CHECK(static_cast<int>(tree.centers().size()) <= 3);
      CHECK(static_cast<int>(tree.leaves().size()) <= tight.branching_factor);
    }
  }
}

TEST_CASE("assign") {
  CFTreeConfig cfg;
  CFTree tree(2, cfg);
  tree.insert(std::vector<double>{0.0, 0.0});
  tree.insert(std::vector<double>{4.0, 0.0});
  REQUIRE(tree.centers().size() == 2);

  SUBCASE("a stored center maps to its own id with zero distance") {
    const auto a = tree.assign(std::vector<double>{0.0, 0.0});
    CHECK(a.cluster_id == 0);
    const auto b = tree.assign(std::vector<double>{4.0, 0.0});
    CHECK(b.cluster_id == 1);
  }
  SUBCASE("equidistant points go to the lower id") {
    CHECK(tree.assign(std::vector<double>{2.0, 0.0}).cluster_id == 0);
  }
  SUBCASE("assign does not mutate the tree") {
    const auto leaves_before = tree.leaves().size();
    const auto count_before = tree.insert_count();
    tree.assign(std::vector<double>{1.0, 1.0});
    CHECK(tree.leaves().size() == leaves_before);
    CHECK(tree.insert_count() == count_before);
  }
  SUBCASE("agreement with a linear-scan nearest-center oracle on 1000 points") {
    Rng rng(27);
    for (int t = 0; t < 1000; ++t) {
      std::vector<double> p = {rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0)};
      int oracle = 0;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : tree.centers()) {
        const double dx = p[0] - c.centroid[0], dy = p[1] - c.centroid[1];
        const double d = dx * dx + dy * dy;
        if (d < best) {
          best = d;
          oracle = c.id;
        }
      }
      CHECK(tree.assign(p).cluster_id == oracle);
    }
  }
  SUBCASE("empty tree has no centers to assign") {
    CFTree fresh(2, cfg);
    CHECK_THROWS_AS(fresh.assign(std::vector<double>{0.0, 0.0}), std::runtime_error);
  }
}

TEST_CASE("global rebuild") {
  SUBCASE("leaf count at or below the cap publishes leaf centroids unchanged") {
    CFTreeConfig cfg;
    cfg.max_clusters = 4;
    CFTree tree(1, cfg);
    tree.insert(std::vector<double>{0.0});
    tree.insert(std::vector<double>{5.0});
    tree.insert(std::vector<double>{10.0});
    REQUIRE(tree.leaves().size() == 3);
    const auto& centers = tree.rebuild_global();
    REQUIRE(centers.size() == 3);
    CHECK(centers[0].centroid[0] == 0.0);
    CHECK(centers[1].centroid[0] == 5.0);
    CHECK(centers[2].centroid[0] == 10.0);
  }
  SUBCASE("hand-checkable 1-D merge: the two near leaves fold together") {
    CFTreeConfig cfg;
    cfg.max_clusters = 2;
    cfg.merge_threshold = 0.1;
    CFTree tree(1, cfg);
    tree.insert(std::vector<double>{0.0});   // leaf A
    tree.insert(std::vector<double>{1.0});   // leaf B (near A)
    tree.insert(std::vector<double>{20.0});  // leaf C (far)
    const auto& centers = tree.rebuild_global();
    REQUIRE(centers.size() == 2);
    CHECK(centers[0].centroid[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(centers[1].centroid[0] == doctest::Approx(20.0).epsilon(1e-12));
  }
  SUBCASE("agglomeration matches a brute-force oracle on 10 random leaves") {
    Rng rng(28);
    for (int trial = 0; trial < 20; ++trial) {
      CFTreeConfig cfg;
      cfg.branching_factor = 16;
      cfg.merge_threshold = 1e-6;  // every point its own leaf
      cfg.max_clusters = 3;
      cfg.rebuild_every = 1000000;
      CFTree tree(2, cfg);
      std::vector<ClusteringFeature> oracle;
      for (int i = 0; i < 10; ++i) {
        const auto p = dyadic_point(rng, 2, 5.0);
        oracle.push_back(ClusteringFeature::from_point(p));
        tree.insert(p);
      }
      REQUIRE(tree.leaves().size() == 10);
      // Independent agglomerative oracle: repeatedly merge the closest pair.
      while (oracle.size() > 3) {
        size_t bi = 0, bj = 1;
        double best = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < oracle.size(); ++i)
          for (size_t j = i + 1; j < oracle.size(); ++j) {
            const auto ci = oracle[i].centroid(), cj = oracle[j].centroid();
            const double d = std::hypot(ci[0] - cj[0], ci[1] - cj[1]);
            if (d < best) {
              best = d;
              bi = i;
              bj = j;
            }
          }
        oracle[bi] = cf_merge(oracle[bi], oracle[bj]);
        oracle.erase(oracle.begin() + bj);
      }
      const auto& centers = tree.rebuild_global();
      REQUIRE(centers.size() == 3);
      for (size_t i = 0; i < 3; ++i) {
        bool matched = false;
        for (const auto& cf : oracle) {
          const auto c = cf.centroid();
          if (std::abs(c[0] - centers[i].centroid[0]) < 1e-12 &&
              std::abs(c[1] - centers[i].centroid[1]) < 1e-12)
            matched = true;
        }
        CHECK(matched);
      }
    }
  }
  SUBCASE("center movement keeps ids stable via nearest-inheritance") {
    CFTreeConfig cfg;
    cfg.max_clusters = 2;
    cfg.merge_threshold = 0.6;
    CFTree tree(1, cfg);
    tree.insert(std::vector<double>{0.0});
    tree.insert(std::vector<double>{8.0});
    const int id_left = tree.assign(std::vector<double>{0.0}).cluster_id;
    const int id_right = tree.assign(std::vector<double>{8.0}).cluster_id;
    // Drift both groups; ids must follow the nearby mass.
    for (int i = 1; i <= 3; ++i) {
      tree.insert(std::vector<double>{0.0 + 0.3 * i});
      tree.insert(std::vector<double>{8.0 + 0.3 * i});
    }
    CHECK(tree.assign(std::vector<double>{0.5}).cluster_id == id_left);
    CHECK(tree.assign(std::vector<double>{8.5}).cluster_id == id_right);
  }
}

TEST_CASE("running standardizer") {
  RunningStandardizer std3(3);
  Rng rng(29);
  std::vector<std::vector<double>> seen;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x = {rng.uniform(0, 10), rng.uniform(-5, 5), 42.0};
    std3.observe(x);
    seen.push_back(x);
  }
  // Mean/variance match the batch statistics.
  for (int d = 0; d < 3; ++d) {
    double mean = 0.0;
    for (const auto& x : seen) mean += x[d];
    mean /= seen.size();
    double var = 0.0;
    for (const auto& x : seen) var += (x[d] - mean) * (x[d] - mean);
    var /= seen.size();
    CHECK(std3.mean()[d] == doctest::Approx(mean).epsilon(1e-9));
    CHECK(std3.variance()[d] == doctest::Approx(var).epsilon(1e-9));
  }
  // A constant coordinate normalizes to zero, not NaN.
  const auto norm = std3.normalize(seen.back());
  CHECK(norm[2] == 0.0);
  CHECK(std::isfinite(norm[0]));
}
