#include "hlb/load_model.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <vector>

using namespace hlb;

TEST_CASE("node classification at the paper's example thresholds") {
  Thresholds const t{5, 10};
  CHECK(classify_node_load(15, t) == LoadClass::High);
  CHECK(classify_node_load(10, t) == LoadClass::Medium);
  CHECK(classify_node_load(0, t) == LoadClass::Low);
  CHECK(classify_node_load(5, t) == LoadClass::Low);
  CHECK(classify_node_load(6, t) == LoadClass::Medium);
  CHECK(classify_node_load(11, t) == LoadClass::High);
}

TEST_CASE("classification matches the comparison oracle, partitions and is monotone") {
  for (LoadValue lo = 1; lo < 8; ++lo) {
    for (LoadValue mm = lo + 1; mm < 16; ++mm) {
      Thresholds const t{lo, mm};
      auto prev = LoadClass::Low;
      for (LoadValue l = 0; l <= 40; ++l) {
        auto const c = classify_node_load(l, t);
        CHECK(static_cast<int>(c) == oracle::classify(l, lo, mm));
        CHECK(c >= prev);
        prev = c;
      }
      CHECK(classify_node_load(mm, t) == LoadClass::Medium);
      CHECK(classify_node_load(mm + 1, t) == LoadClass::High);
    }
  }
}

TEST_CASE("cluster classification against capacity") {
  Thresholds const t{5, 10};
  auto const cap = ClusterCapacity::of(6, t);
  CHECK(cap.cluster_medium_max == 60);
  CHECK(cap.cluster_low_max == 30);
  CHECK(classify_cluster_load(68, cap) == LoadClass::High);
  CHECK(classify_cluster_load(60, cap) == LoadClass::Medium);
  CHECK(classify_cluster_load(0, cap) == LoadClass::Low);
  CHECK(classify_cluster_load(30, cap) == LoadClass::Low);
  CHECK(classify_cluster_load(31, cap) == LoadClass::Medium);
}

TEST_CASE("cluster totals") {
  std::vector<LoadValue> const a{15, 7, 10};
  CHECK(cluster_total(a) == 32);
  CHECK(cluster_total(std::vector<LoadValue>{}) == 0);
  CHECK(cluster_total(std::vector<LoadValue>(6, 10)) == 60);
}

TEST_CASE("threshold validation") {
  CHECK_NOTHROW((Thresholds{5, 10}.validate()));
  CHECK_THROWS_AS((Thresholds{0, 10}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((Thresholds{10, 10}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((Thresholds{11, 10}.validate()), std::invalid_argument);
}
