#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "fixtures.hpp"
#include "hyba/datasets.hpp"
#include "hyba/error.hpp"
#include "hyba/idx.hpp"
#include "hyba/results.hpp"
#include "hyba/rng.hpp"

using namespace hyba;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("hyba_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

IdxImages tiny_images() {
  IdxImages im;
  im.count = 3;
  im.rows = 2;
  im.cols = 2;
  im.pixels = {0, 255, 128, 7, 1, 2, 3, 4, 250, 251, 252, 253};
  return im;
}

}  // namespace

TEST(Idx, RoundTripAndScaling) {
  auto dir = scratch("idx");
  write_bytes(dir / "img", encode_idx_images(tiny_images()));
  write_bytes(dir / "lbl", encode_idx_labels(std::vector<std::uint8_t>{7, 0, 9}));
  auto data = load_idx(dir / "img", dir / "lbl");
  ASSERT_EQ(data.size(), 3u);
  EXPECT_EQ(data[0].label, 7);
  EXPECT_EQ(data[0].image.shape(), (Shape{2, 2, 1}));
  EXPECT_DOUBLE_EQ(data[0].image[1], 1.0);
  EXPECT_DOUBLE_EQ(data[0].image[2], 128.0 / 255.0);
  fs::remove_all(dir);
}

TEST(Idx, HeaderIsBigEndian) {
  auto bytes = encode_idx_images(tiny_images());
  EXPECT_EQ(bytes[0], 0);
  EXPECT_EQ(bytes[1], 0);
  EXPECT_EQ(bytes[2], 8);
  EXPECT_EQ(bytes[3], 3);
  EXPECT_EQ(bytes[7], 3);
  EXPECT_EQ(bytes.size(), 16u + 12u);
}

TEST(Idx, RejectsSwappedMagicAndCountMismatch) {
  auto labels = encode_idx_labels(std::vector<std::uint8_t>{1, 2, 3});
  EXPECT_THROW(parse_idx_images(labels), ParseError);
  EXPECT_THROW(parse_idx_labels(encode_idx_images(tiny_images())), ParseError);
  auto dir = scratch("idx_count");
  write_bytes(dir / "img", encode_idx_images(tiny_images()));
  write_bytes(dir / "lbl", encode_idx_labels(std::vector<std::uint8_t>{1, 2}));
  EXPECT_THROW(load_idx(dir / "img", dir / "lbl"), ParseError);
  EXPECT_THROW(load_idx(dir / "missing", dir / "lbl"), ArtifactError);
  fs::remove_all(dir);
}

TEST(Idx, TruncationAndGarbageAlwaysGiveStructuredErrors) {
  const auto good = encode_idx_images(tiny_images());
  for (std::size_t n = 0; n < good.size(); ++n) {
    std::vector<std::uint8_t> cut(good.begin(), good.begin() + static_cast<long>(n));
    EXPECT_THROW(parse_idx_images(cut), ParseError) << "length " << n;
  }
  auto trailing = good;
  trailing.push_back(0);
  EXPECT_THROW(parse_idx_images(trailing), ParseError);
  hyba::Rng rng = make_rng(3);
  std::uniform_int_distribution<int> byte(0, 255), len(0, 64);
  for (int t = 0; t < 5000; ++t) {
    std::vector<std::uint8_t> junk(static_cast<std::size_t>(len(rng)));
    for (auto& b : junk) b = static_cast<std::uint8_t>(byte(rng));
    if (t % 2 == 0 && junk.size() >= 4) {
      junk[0] = junk[1] = 0;
      junk[2] = 8;
      junk[3] = 3;
    }
    try {
      parse_idx_images(junk);
    } catch (const ParseError&) {
    }
    try {
      parse_idx_labels(junk);
    } catch (const ParseError&) {
    }
  }
}

TEST(Idx, BundledMnistSubset) {
  const std::string dir = std::string(HYBA_TEST_DATA_DIR) + "/mnist5k/";
  auto data = load_idx(dir + "images-idx3-ubyte", dir + "labels-idx1-ubyte");
  ASSERT_EQ(data.size(), 5000u);
  std::map<int, int> per_class;
  for (const auto& ex : data) {
    EXPECT_EQ(ex.image.size(), 784u);
    ++per_class[ex.label];
  }
  EXPECT_EQ(per_class.size(), 10u);
  auto small = downsample_2x2(std::span(data).first(10));
  EXPECT_EQ(small[0].image.size(), 196u);
  EXPECT_EQ(small[0].image.shape(), (Shape{14, 14, 1}));
}

TEST(Downsample, MeanOfEachBlock) {
  std::vector<double> px{0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 0.1, 0.3, 0.5};
  LabeledExample ex{Image(px, Shape{3, 3, 1}), 1};
  auto out = downsample_2x2(std::vector{ex});
  ASSERT_EQ(out[0].image.size(), 1u);
  EXPECT_NEAR(out[0].image[0], (0.0 + 0.2 + 0.6 + 0.8) / 4, 1e-15);
}

TEST(Synthetic, SeparableAndDeterministic) {
  auto a = make_synthetic(400, 4, 8, 5.0, 3);
  auto b = make_synthetic(400, 4, 8, 5.0, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_EQ(a[i].label, b[i].label);
  }
  auto one_each = make_synthetic(4, 4, 8, 5.0, 3);
  for (int c = 0; c < 4; ++c) EXPECT_EQ(one_each[c].label, c);
  const std::size_t widths[] = {8, 4};
  TrainConfig tc;
  tc.epochs = 30;
  tc.learning_rate = 0.5;
  auto r = train_sgd(MlpModel::glorot(widths, 1), a, tc);
  EXPECT_GE(r.train_accuracy, 0.99);
  EXPECT_THROW(make_synthetic(3, 4, 8, 5.0, 1), ConfigError);
  EXPECT_THROW(make_synthetic(10, 2, 8, 0.0, 1), ConfigError);
}

TEST(LeastLikely, TwoClassesAndModeRule) {
  auto toy = hyba::testing::toy_problem(100, 2, 4, 6, 1);
  auto t = least_likely_targets(toy.model, toy.data);
  EXPECT_EQ(t.at(0), 1);
  EXPECT_EQ(t.at(1), 0);

  auto model = hyba::testing::random_mlp({6, 8, 5}, 12);
  auto data = make_synthetic(300, 5, 6, 2.0, 4);
  auto got = least_likely_targets(model, data);
  for (int c = 0; c < 5; ++c) {
    std::vector<int> votes(5, 0);
    for (const auto& ex : data) {
      if (ex.label != c) continue;
      auto p = probs(model, ex.image);
      ++votes[std::min_element(p.begin(), p.end()) - p.begin()];
    }
    EXPECT_EQ(got.at(c), std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  std::vector<LabeledExample> missing(data.begin(), data.begin() + 4);
  EXPECT_THROW(least_likely_targets(model, missing), ConfigError);
}

TEST(SeedPool, CorrectlyClassifiedAndDeterministic) {
  auto toy = hyba::testing::toy_problem(300, 3, 6, 8, 9);
  SeedPoolConfig cfg;
  cfg.per_class = 30;
  cfg.sampling_seed = 5;
  cfg.targeted = true;
  auto a = build_seed_pool(toy.data, {}, toy.model, cfg);
  auto b = build_seed_pool(toy.data, {}, toy.model, cfg);
  ASSERT_EQ(a.seeds.size(), b.seeds.size());
  for (std::size_t i = 0; i < a.seeds.size(); ++i) {
    EXPECT_EQ(a.seeds[i].id, b.seeds[i].id);
    EXPECT_EQ(predict(toy.model, a.seeds[i].image), a.seeds[i].label);
    ASSERT_TRUE(a.seeds[i].target.has_value());
    EXPECT_NE(*a.seeds[i].target, a.seeds[i].label);
  }
  for (const auto& [c, n] : a.class_counts) EXPECT_LE(n, 30u);
  cfg.per_class = 1000;
  auto all = build_seed_pool(toy.data, {}, toy.model, cfg);
  EXPECT_EQ(all.short_classes.size(), 3u);

  auto other = hyba::testing::random_mlp({6, 5, 3}, 2);
  auto screened = build_seed_pool(toy.data, {}, toy.model, cfg, std::vector{other});
  for (const auto& s : screened.seeds) EXPECT_EQ(predict(other, s.image), s.label);
  EXPECT_LT(screened.seeds.size(), all.seeds.size());
}

TEST(Split, CoversEveryIndexOnce) {
  auto s = split_indices(101, 0.7, 3);
  EXPECT_EQ(s.train.size(), 71u);
  std::vector<std::size_t> all(s.train);
  all.insert(all.end(), s.heldout.begin(), s.heldout.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
}

TEST(Csv, EscapeAndSplit) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_split("a,\"b,c\",\"d\"\"e\""), (std::vector<std::string>{"a", "b,c", "d\"e"}));
  EXPECT_EQ(csv_split(""), (std::vector<std::string>{""}));
}

TEST(Doubles, ShortestRoundTrip) {
  hyba::Rng rng = make_rng(8);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 30 - 15);
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.3), "0.3");
  EXPECT_THROW(parse_double("0.3x"), ParseError);
}

TEST(Results, ThousandRowRoundTripIntoFreshDirectory) {
  auto root = scratch("results");
  auto dir = root / "nested" / "run";
  RunResults r;
  hyba::Rng rng = make_rng(2);
  std::uniform_real_distribution<double> eps(0.0, 1.0);
  for (std::uint64_t i = 0; i < 1000; ++i) {
    OutcomeRecord rec;
    rec.seed_id = i * 13;
    rec.found_by = static_cast<FoundBy>(i % 3);
    rec.success = rec.found_by != FoundBy::failed;
    rec.queries_used = rng() % 5000;
    rec.strategy = i % 7 == 0 ? "two,phase \"quoted\"" : "hybrid";
    rec.estimator = i % 2 ? "nes" : "autozoom";
    rec.epsilon = eps(rng);
    rec.run_seed = rng();
    r.outcomes.push_back(rec);
  }
  r.config = {{"epsilon", 0.3}, {"estimator", "nes"}};
  write_results(dir, r);
  auto back = read_results(dir);
  EXPECT_EQ(back.outcomes, r.outcomes);
  EXPECT_EQ(back.config, r.config);
  fs::remove_all(root);
}

TEST(Results, MalformedRowNamesTheLine) {
  auto dir = scratch("malformed");
  std::ofstream(dir / "outcomes.csv")
      << "seed_id,found_by,success,queries_used,strategy,estimator,epsilon,run_seed\n"
      << "1,direct_transfer,true,1,hybrid,nes,0.3,7\n"
      << "2,gradient_attack,true,notanumber,hybrid,nes,0.3,7\n";
  try {
    read_outcomes_csv(dir / "outcomes.csv");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  std::ofstream(dir / "short.csv")
      << "seed_id,found_by,success,queries_used,strategy,estimator,epsilon,run_seed\n"
      << "1,failed,false\n";
  EXPECT_THROW(read_outcomes_csv(dir / "short.csv"), ParseError);
  std::ofstream(dir / "header.csv") << "id,what\n";
  EXPECT_THROW(read_outcomes_csv(dir / "header.csv"), ParseError);
  EXPECT_THROW(read_outcomes_csv(dir / "absent.csv"), ArtifactError);
  fs::remove_all(dir);
}

TEST(Summary, MetricsFollowTheirDefinitions) {
  std::vector<OutcomeRecord> rows{
      {1, FoundBy::direct_transfer, true, 1, "", "", 0.3, 0},
      {2, FoundBy::gradient_attack, true, 101, "", "", 0.3, 0},
      {3, FoundBy::failed, false, 400, "", "", 0.3, 0},
      {4, FoundBy::gradient_attack, true, 51, "", "", 0.3, 0}};
  auto s = summarize(rows);
  EXPECT_EQ(s.aes, 3u);
  EXPECT_EQ(s.total_queries, 553u);
  EXPECT_DOUBLE_EQ(s.queries_per_ae, 553.0 / 3);
  EXPECT_DOUBLE_EQ(s.queries_per_seed, 553.0 / 4);
  EXPECT_DOUBLE_EQ(s.queries_per_search, 552.0 / 2);
  EXPECT_DOUBLE_EQ(s.transfer_rate, 0.25);
  EXPECT_DOUBLE_EQ(s.success_rate, 0.75);
  auto none = summarize({{1, FoundBy::failed, false, 10, "", "", 0.3, 0}});
  EXPECT_TRUE(to_json(none)["queries_per_ae"].is_null());
}
