// SPDX-License-Identifier: Apache-2.0
#include "layerpano/layering.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace layerpano;

namespace {

Mask rect_mask(int w, int h, int x0, int y0, int x1, int y1) {
  Mask m = Mask::Constant(h, w, false);
  m.block(y0, x0, y1 - y0, x1 - x0).setConstant(true);
  return m;
}

Mask random_mask(std::mt19937_64& rng, int w, int h, double p) {
  Mask m(h, w);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = oracle::uniform(rng, 0, 1) < p;
  return m;
}

}  // namespace

TEST(Percentile, SpecExamples) {
  EXPECT_EQ(nearest_rank_percentile({5, 5, 5, 5}, 0.75), 5.0);
  EXPECT_EQ(nearest_rank_percentile({1, 2, 3, 4}, 0.75), 3.0);
  EXPECT_EQ(nearest_rank_percentile({4, 1, 3, 2}, 0.75), 3.0);
  EXPECT_EQ(nearest_rank_percentile({10}, 0.75), 10.0);
  EXPECT_THROW(nearest_rank_percentile({}, 0.75), DomainError);
}

TEST(Percentile, MatchesSortOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> v(1 + rng() % 10000);
    for (double& x : v) x = std::round(oracle::uniform(rng, 0, 50));  // ties are common
    const double q = trial % 3 == 0 ? 0.75 : oracle::uniform(rng, 0.01, 1.0);
    ASSERT_EQ(nearest_rank_percentile(v, q), oracle::sorted_percentile(v, q));
  }
}

TEST(AssetDepthStatistic, MaskedDepthsAndEmptyMask) {
  DepthMap d(2, 4);
  d << 1, 2, 3, 4, 9, 9, 9, 9;
  Mask m = Mask::Constant(2, 4, false);
  m.row(0).setConstant(true);
  EXPECT_EQ(asset_depth_statistic(m, d), 3.0);
  EXPECT_THROW(asset_depth_statistic(Mask::Constant(2, 4, false), d), DomainError);
}

TEST(KMeans, SpecExample) {
  const std::vector<double> v = {1.0, 1.1, 5.0, 5.2, 9.9};
  const auto r = kmeans_cluster_assets(v, 3);
  ASSERT_EQ(r.cluster_count, 3);
  EXPECT_EQ(r.labels, (std::vector<int>{2, 2, 1, 1, 0}));
  EXPECT_NEAR(r.sse, oracle::exhaustive_kmeans_sse(v, 3), 1e-12);
  EXPECT_GT(r.cluster_means[0], r.cluster_means[1]);
  EXPECT_GT(r.cluster_means[1], r.cluster_means[2]);
}

TEST(KMeans, SingleClusterAndReduction) {
  const std::vector<double> v = {3.0, 1.0, 2.0};
  auto r = kmeans_cluster_assets(v, 1);
  EXPECT_EQ(r.labels, (std::vector<int>{0, 0, 0}));
  r = kmeans_cluster_assets(v, 5);
  EXPECT_EQ(r.cluster_count, 3);
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_EQ(r.labels, (std::vector<int>{0, 2, 1}));
  EXPECT_THROW(kmeans_cluster_assets(v, 0), DomainError);
}

TEST(KMeans, MatchesExhaustivePartitions) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng() % 10);
    for (double& x : v) x = oracle::uniform(rng, 0.5, 12.0);
    const int k = 1 + static_cast<int>(rng() % 4);
    const auto r = kmeans_cluster_assets(v, k);
    const double best = oracle::exhaustive_kmeans_sse(v, k);
    ASSERT_NEAR(oracle::labelling_sse(v, r.labels, r.cluster_count), best, 1e-9 * (1 + best));
    ASSERT_NEAR(within_cluster_sse(v, r.labels), best, 1e-9 * (1 + best));
    for (int c = 1; c < r.cluster_count; ++c) ASSERT_GT(r.cluster_means[c - 1], r.cluster_means[c]);
  }
}

TEST(MergeLayerMasks, UnionPartitionAndBackground) {
  const int w = 8, h = 4;
  std::vector<AssetMask> assets = {{2, rect_mask(w, h, 0, 0, 2, 2), "a", false},
                                   {3, rect_mask(w, h, 4, 0, 6, 2), "b", false},
                                   {4, rect_mask(w, h, 1, 2, 3, 4), "c", false},
                                   {1, rect_mask(w, h, 0, 0, 8, 4), "wall", true}};
  auto layers = merge_layer_masks(assets, std::vector<int>{0, 0, 1, 0});
  ASSERT_EQ(layers.size(), 2u);
  EXPECT_TRUE((layers[0].mask == (assets[0].mask || assets[1].mask)).all());
  EXPECT_TRUE((layers[1].mask == assets[2].mask).all());
  EXPECT_FALSE((layers[0].mask && layers[1].mask).any());
  layers = merge_layer_masks(assets, std::vector<int>{0, 1, 2, 5});
  ASSERT_EQ(layers.size(), 3u);
  for (const auto& l : layers) EXPECT_FALSE((l.mask && !(assets[0].mask || assets[1].mask || assets[2].mask)).any());
}

TEST(ExtendLayerMask, RadiusZeroAndUnitDisk) {
  std::mt19937_64 rng(3);
  const Mask m = random_mask(rng, 16, 8, 0.2);
  EXPECT_TRUE((extend_layer_mask(m, 0) == m).all());
  Mask dot = Mask::Constant(8, 16, false);
  dot(4, 7) = true;
  const Mask e = extend_layer_mask(dot, 1);
  EXPECT_EQ(e.count(), 5);
  EXPECT_TRUE(e(3, 7) && e(5, 7) && e(4, 6) && e(4, 8) && e(4, 7));
  EXPECT_THROW(extend_layer_mask(dot, -1), DomainError);
}

TEST(ExtendLayerMask, MatchesDirectDiskDilationWithWrap) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 24, h = 12, r = 1 + static_cast<int>(rng() % 4);
    const Mask m = random_mask(rng, w, h, 0.03);
    Mask ref = Mask::Constant(h, w, false);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!m(y, x)) continue;
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            if (dx * dx + dy * dy > r * r || y + dy < 0 || y + dy >= h) continue;
            ref(y + dy, ((x + dx) % w + w) % w) = true;
          }
        }
      }
    }
    ASSERT_TRUE((extend_layer_mask(m, r) == ref).all());
  }
}

TEST(CompleteLayer, EmptyMaskConstantAndExternal) {
  std::mt19937_64 rng(5);
  const Image pano = oracle::random_image(rng, 32, 16);
  const Mask none = Mask::Constant(16, 32, false);
  const Image a = complete_layer(pano, none);
  for (int k = 0; k < 3; ++k) EXPECT_TRUE((a.channel[k] == pano.channel[k]).all());

  const Image flat = Image::constant(32, 16, Eigen::Vector3d(0.3, 0.5, 0.7));
  const Mask m = random_mask(rng, 32, 16, 0.4);
  const Image b = complete_layer(flat, m);
  for (int k = 0; k < 3; ++k) EXPECT_LE((b.channel[k] - flat.channel[k]).abs().maxCoeff(), 1e-12);

  const Image ext = oracle::random_image(rng, 32, 16);
  const Image c = complete_layer(pano, m, &ext);
  for (int k = 0; k < 3; ++k) {
    EXPECT_TRUE((m.select(c.channel[k] == ext.channel[k], c.channel[k] == pano.channel[k])).all());
  }
  const Image wrong(8, 4);
  EXPECT_THROW(complete_layer(pano, m, &wrong), DomainError);
}

TEST(CompleteLayer, UnmaskedPixelsBitExactAndFillIdempotent) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Image pano = oracle::random_image(rng, 40, 20);
    const Mask m = extend_layer_mask(random_mask(rng, 40, 20, 0.02), 2);
    const Image once = complete_layer(pano, m);
    for (int k = 0; k < 3; ++k) ASSERT_TRUE((m || (once.channel[k] == pano.channel[k])).all());
    const Image none = complete_layer(once, Mask::Constant(20, 40, false));
    for (int k = 0; k < 3; ++k) ASSERT_TRUE((none.channel[k] == once.channel[k]).all());
    const Image twice = complete_layer(once, m);
    for (int k = 0; k < 3; ++k) ASSERT_LE((twice.channel[k] - once.channel[k]).abs().maxCoeff(), 1e-9);
  }
}

TEST(HarmonicFill, DiscreteLaplacianVanishesInsideMask) {
  std::mt19937_64 rng(7);
  const int w = 30, h = 14;
  Plane<double> p(h, w);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = oracle::uniform(rng, 0, 1);
  const Mask m = extend_layer_mask(random_mask(rng, w, h, 0.03), 2);
  std::array<Plane<double>*, 1> planes = {&p};
  harmonic_fill(planes, m);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m(y, x)) continue;
      double sum = 0.0;
      int count = 0;
      for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
        if (y + dy < 0 || y + dy >= h) continue;
        sum += p(y + dy, (x + dx + w) % w);
        ++count;
      }
      ASSERT_NEAR(p(y, x), sum / count, 1e-9);
    }
  }
}

TEST(AlignLayerDepth, ConstantBoundaryClampAndEmpty) {
  const int w = 32, h = 16;
  const Image rgb(w, h);
  const Mask m = rect_mask(w, h, 10, 5, 16, 10);
  DepthMap five = DepthMap::Constant(h, w, 5.0);
  DepthMap out = align_layer_depth(rgb, m, five, 3.0);
  EXPECT_LE((out - 5.0).abs().maxCoeff(), 1e-12);
  DepthMap two = DepthMap::Constant(h, w, 2.0);
  out = align_layer_depth(rgb, m, two, 3.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) EXPECT_EQ(out(y, x), m(y, x) ? 3.0 : 2.0);
  }
  out = align_layer_depth(rgb, Mask::Constant(h, w, false), two, 3.0);
  EXPECT_TRUE((out == two).all());
  EXPECT_THROW(align_layer_depth(rgb, Mask::Constant(h, w, true), two, 3.0), DomainError);
}

TEST(AlignLayerDepth, UnmaskedBitExactAndClampProperty) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const int w = 36, h = 18;
    DepthMap d(h, w);
    for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = oracle::uniform(rng, 1, 10);
    const Mask m = extend_layer_mask(random_mask(rng, w, h, 0.02), 2);
    const double occ = oracle::uniform(rng, 2, 8);
    const DepthMap out = align_layer_depth(Image(w, h), m, d, occ);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (m(y, x)) {
          ASSERT_GE(out(y, x), occ);
        } else {
          ASSERT_EQ(out(y, x), d(y, x));
        }
      }
    }
  }
}

namespace {

struct Fixture {
  Panorama pano;
  std::vector<AssetMask> assets;
};

Fixture three_asset_fixture(int w = 64, int h = 32) {
  Image rgb(w, h);
  DepthMap depth = DepthMap::Constant(h, w, 10.0);
  std::mt19937_64 rng(9);
  rgb = oracle::smooth_image(rng, w, h);
  std::vector<AssetMask> assets;
  const double depths[] = {8.0, 5.0, 2.0};
  for (int i = 0; i < 3; ++i) {
    const Mask m = rect_mask(w, h, 4 + 20 * i, 10, 12 + 20 * i, 20);
    depth = m.select(depths[i], depth);
    for (int k = 0; k < 3; ++k) rgb.channel[k] = m.select(0.1 * (i + 1) + 0.2 * k, rgb.channel[k]);
    assets.push_back({i + 2, m, "thing", false});
  }
  assets.push_back({1, Mask::Constant(h, w, true), "wall", true});
  return {Panorama(rgb, depth), assets};
}

}  // namespace

TEST(LayerStack, ZeroAssetsIsSingleLayer) {
  auto f = three_asset_fixture();
  const std::vector<AssetMask> none;
  const LayerStack s = build_layer_stack(f.pano, none);
  EXPECT_EQ(s.layer_count, 0);
  ASSERT_EQ(s.panoramas.size(), 1u);
  for (int k = 0; k < 3; ++k) EXPECT_TRUE((s.panoramas[0].channel[k] == f.pano.rgb().channel[k]).all());
}

TEST(LayerStack, ZeroLayersKeepsOnlyTheReference) {
  auto f = three_asset_fixture();
  const LayerStack s = build_layer_stack(f.pano, f.assets, {0, 1});
  EXPECT_EQ(s.layer_count, 0);
  ASSERT_EQ(s.panoramas.size(), 1u);
  EXPECT_TRUE((s.depths[0].array() == f.pano.depth().array()).all());
  EXPECT_THROW(build_layer_stack(f.pano, f.assets, {-1, 1}), DomainError);
}

TEST(LayerStack, ThreeLayersFarToNear) {
  auto f = three_asset_fixture();
  const LayerStack s = build_layer_stack(f.pano, f.assets, {3, 1});
  ASSERT_EQ(s.layer_count, 3);
  EXPECT_EQ(s.panoramas.size(), 4u);
  EXPECT_EQ(s.depths.size(), 4u);
  EXPECT_TRUE((s.depths[3] == f.pano.depth()).all());
  EXPECT_EQ(s.members[0], std::vector<int>{2});
  EXPECT_EQ(s.members[2], std::vector<int>{4});
  for (int l = 1; l < 3; ++l) EXPECT_GT(s.cluster_depths[l - 1], s.cluster_depths[l]);
  for (int l = 0; l < 3; ++l) {
    const Mask& m = s.completion_masks[l];
    EXPECT_TRUE((m.select(s.depths[l] >= s.occluder_depths[l], s.depths[l] == s.depths[l + 1])).all());
    for (int k = 0; k < 3; ++k) {
      EXPECT_TRUE((m || (s.panoramas[l].channel[k] == s.panoramas[l + 1].channel[k])).all());
    }
  }
  // The bare background has every asset removed: depth 10 everywhere.
  EXPECT_LE((s.depths[0] - 10.0).abs().maxCoeff(), 1e-9);
}

TEST(LayerStack, ExternalCompletionsPassThrough) {
  auto f = three_asset_fixture();
  std::mt19937_64 rng(10);
  ExternalLayers ext;
  for (int l = 0; l < 3; ++l) ext.completions[l] = oracle::random_image(rng, 64, 32);
  const LayerStack s = build_layer_stack(f.pano, f.assets, {3, 0}, ext);
  for (int l = 0; l < 3; ++l) {
    for (int k = 0; k < 3; ++k) {
      EXPECT_TRUE((s.masks[l].select(s.panoramas[l].channel[k] == ext.completions[l].channel[k], true)).all());
    }
  }
}

TEST(LayerStack, FewerAssetsThanLayersWarns) {
  auto f = three_asset_fixture();
  const LayerStack s = build_layer_stack(f.pano, f.assets, {5, 1});
  EXPECT_EQ(s.layer_count, 3);
  EXPECT_FALSE(s.warnings.empty());
}

TEST(LayerStack, RequiresDepthAndNonEmptyMasks) {
  auto f = three_asset_fixture();
  EXPECT_THROW(build_layer_stack(Panorama(f.pano.rgb()), f.assets), DomainError);
  f.assets[0].mask.setConstant(false);
  EXPECT_THROW(build_layer_stack(f.pano, f.assets), DomainError);
}

TEST(LayerStack, SaveLoadRoundTrip) {
  auto f = three_asset_fixture();
  const LayerStack s = build_layer_stack(f.pano, f.assets, {2, 1});
  const auto dir = std::filesystem::temp_directory_path() / "layerpano_stack_rt";
  std::filesystem::remove_all(dir);
  save_layer_stack(dir, s);
  const LayerStack r = load_layer_stack(dir);
  ASSERT_EQ(r.layer_count, s.layer_count);
  for (int l = 0; l <= s.layer_count; ++l) {
    EXPECT_LE((r.depths[l] - s.depths[l]).abs().maxCoeff(), 1e-5 * 10);
    for (int k = 0; k < 3; ++k) EXPECT_LE((r.panoramas[l].channel[k] - s.panoramas[l].channel[k]).abs().maxCoeff(), 0.5 / 255 + 1e-12);
  }
  for (int l = 0; l < s.layer_count; ++l) {
    EXPECT_TRUE((r.masks[l] == s.masks[l]).all());
    EXPECT_TRUE((r.completion_masks[l] == s.completion_masks[l]).all());
    EXPECT_EQ(r.members[l], s.members[l]);
  }
  std::filesystem::remove_all(dir);
}

TEST(AssetMasks, FromLabelsAndSidecar) {
  LabelMap labels = LabelMap::Zero(4, 8);
  labels.block(0, 0, 2, 2).setConstant(2);
  labels.block(2, 4, 2, 4).setConstant(1);
  const auto assets = asset_masks_from_labels(
      labels, R"({"labels":[{"id":1,"category":"wall","background":true},{"id":2,"category":"lamp","background":false}]})");
  ASSERT_EQ(assets.size(), 2u);
  for (const auto& a : assets) {
    EXPECT_EQ(a.mask.count(), a.id == 1 ? 8 : 4);
    EXPECT_EQ(a.background, a.id == 1);
  }
  EXPECT_THROW(asset_masks_from_labels(labels, R"({"nolabels":[]})"), DomainError);
}
