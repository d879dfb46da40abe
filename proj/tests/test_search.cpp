#include <set>

#include <gtest/gtest.h>

#include "brute_force_search.hpp"
#include "ghzdd/io.hpp"
#include "ghzdd/search.hpp"

using namespace ghzdd;

namespace {

const Register& table3() {
  static const Register r = load_register(std::string(GHZDD_DATA_DIR) + "/table3.csv");
  return r;
}

Register toy() {
  Register r;
  for (const char* l : {"C5", "C12", "C18", "C19"}) r.spins.push_back(table3().at(l));
  return r;
}

SearchTolerances toy_tolerances(int M) {
  SearchTolerances t = sequential_tolerances(M);
  t.k_max = 3;
  return t;
}

SearchOptions uncapped() {
  SearchOptions o;
  o.candidates_per_spin = 0;
  o.exact_combination_limit = 0;
  o.subset_beam = 0;
  return o;
}

std::set<std::vector<std::size_t>> subsets_of(const std::vector<Case>& cases) {
  std::set<std::vector<std::size_t>> s;
  for (const auto& c : cases) s.insert(c.spins);
  return s;
}

}  // namespace

TEST(Tolerances, SequentialTableRows) {
  const auto r3 = sequential_tolerances(3);
  EXPECT_DOUBLE_EQ(r3.gate_time_tol, 2000 * microsecond);
  EXPECT_DOUBLE_EQ(r3.gate_error_tol, 0.1);
  EXPECT_DOUBLE_EQ(r3.target_one_tangle_tol, 0.99);
  EXPECT_DOUBLE_EQ(r3.unwanted_one_tangle_tol, 0.1);
  const auto r10 = sequential_tolerances(10);
  EXPECT_DOUBLE_EQ(r10.gate_time_tol, 4000 * microsecond);
  EXPECT_DOUBLE_EQ(r10.gate_error_tol, 0.19);
  EXPECT_DOUBLE_EQ(r10.target_one_tangle_tol, 0.87);
  EXPECT_DOUBLE_EQ(r10.unwanted_one_tangle_tol, 0.22);
  EXPECT_THROW(sequential_tolerances(11), config_error);
}

TEST(Tolerances, MultispinTableRows) {
  const auto r3 = multispin_tolerances(3);
  EXPECT_DOUBLE_EQ(r3.target_one_tangle_tol, 0.9);
  const auto r9 = multispin_tolerances(9);
  EXPECT_DOUBLE_EQ(r9.gate_time_tol, 3000 * microsecond);
  EXPECT_DOUBLE_EQ(r9.gate_error_tol, 0.15);
  EXPECT_DOUBLE_EQ(r9.target_one_tangle_tol, 0.82);
  EXPECT_DOUBLE_EQ(r9.unwanted_one_tangle_tol, 0.15);
  EXPECT_THROW(multispin_tolerances(10), config_error);
}

TEST(Tolerances, ValidationRejectsOutOfRange) {
  auto t = sequential_tolerances(3);
  t.gate_error_tol = 0.0;
  EXPECT_THROW(t.validate(), config_error);
  t = sequential_tolerances(3);
  t.target_one_tangle_tol = 1.2;
  EXPECT_THROW(t.validate(), config_error);
  t = sequential_tolerances(3);
  t.t_step = 1.0;
  EXPECT_THROW(t.validate(), config_error);
  t = sequential_tolerances(3);
  t.ghz_size = 2;
  EXPECT_THROW(t.validate(), config_error);
}

TEST(Scheme, NamesRoundTrip) {
  EXPECT_EQ(parse_scheme(scheme_name(Scheme::multispin)), Scheme::multispin);
  EXPECT_THROW(parse_scheme("parallel"), config_error);
}

TEST(Helpers, PowerInvariantMatchesMatrixPower) {
  const Register& reg = table3();
  for (std::size_t s : {4u, 11u, 17u}) {
    const auto [v0, v1] = unit_propagators(reg.spins[s], reg, SequenceUnit::cpmg(), 2.71 * microsecond);
    const auto u = detail::unit_quat(v0, v1);
    for (long N : {1L, 7L, 123L, 700L})
      EXPECT_NEAR(detail::g1_power(u, N), g1_of(su2_power(v0, N), su2_power(v1, N)), 1e-10);
  }
}

TEST(Helpers, MaxIterationsRespectsBudget) {
  EXPECT_EQ(detail::max_iterations(2e-6, 2000e-6), 1000);
  EXPECT_EQ(detail::max_iterations(3e-6, 2000e-6), 666);
  EXPECT_EQ(detail::max_iterations(3e-3, 2e-3), 0);
}

TEST(Helpers, FirstMaximaTruncates) {
  const std::vector<double> ot{0, 0.1, 0.5, 0.2, 0.7, 0.7, 0.3, 0.9};
  EXPECT_EQ(detail::first_maxima(ot, 7, 10), (std::vector<long>{2, 4, 7}));
  EXPECT_EQ(detail::first_maxima(ot, 7, 2), (std::vector<long>{2, 4}));
}

TEST(Helpers, SubsetEnumerationCount) {
  int n = 0;
  detail::for_each_subset(7, 3, [&](const std::vector<std::size_t>&) { ++n; });
  EXPECT_EQ(n, 35);
}

TEST(Shortlist, KeepsShortestAndStrongest) {
  std::vector<Candidate> c;
  for (int i = 0; i < 10; ++i) c.push_back({0, 1, 1e-6 * (10 - i), 10, 0.9 + 0.01 * i});
  c[0].one_tangle = 0.999;
  const auto s = shortlist(c, 4);
  ASSERT_EQ(s.size(), 4u);
  std::set<long> us;
  for (const auto& x : s) us.insert(std::lround(x.t * 1e6));
  EXPECT_TRUE(us.count(1) && us.count(2));
  EXPECT_TRUE(us.count(10));
  EXPECT_EQ(shortlist(c, 0).size(), 10u);
}

TEST(Candidates, MeetSingleBlockTolerances) {
  const Register reg = toy();
  const auto tol = toy_tolerances(3);
  const auto cands = per_spin_candidates(reg, SequenceUnit::cpmg(), tol);
  std::size_t total = 0;
  for (std::size_t s = 0; s < cands.size(); ++s)
    for (const auto& c : cands[s]) {
      ++total;
      EXPECT_EQ(c.spin, s);
      EXPECT_LE(c.duration(), tol.gate_time_tol);
      EXPECT_NEAR(c.one_tangle, bf::single_block_ot(reg, s, SequenceUnit::cpmg(), c.t, c.N), 1e-9);
      EXPECT_GE(c.one_tangle, tol.target_one_tangle_tol);
    }
  EXPECT_GT(total, 0u);
}

TEST(Candidates, MonotoneInUnwantedTolerance) {
  const Register reg = toy();
  auto tight = toy_tolerances(3);
  tight.unwanted_one_tangle_tol = 0.05;
  auto loose = tight;
  loose.unwanted_one_tangle_tol = 0.2;
  const auto a = per_spin_candidates(reg, SequenceUnit::cpmg(), tight);
  const auto b = per_spin_candidates(reg, SequenceUnit::cpmg(), loose);
  for (std::size_t s = 0; s < a.size(); ++s) {
    std::set<std::pair<double, long>> bs;
    for (const auto& c : b[s]) bs.insert({c.t, c.N});
    for (const auto& c : a[s]) EXPECT_TRUE(bs.count({c.t, c.N}));
  }
}

TEST(Subsets, BeamIsSubsetOfExact) {
  std::vector<std::vector<Candidate>> cands(8);
  for (std::size_t s = 0; s < 8; ++s)
    if (s != 3) cands[s].push_back({s, 1, 1e-6, 1, 0.9 + 0.01 * static_cast<double>(s)});
  SearchOptions exact;
  exact.exact_subset_max = 10;
  SearchOptions beam;
  beam.exact_subset_max = 1;
  beam.subset_beam = 5;
  const auto all = candidate_subsets(cands, 3, exact);
  const auto some = candidate_subsets(cands, 3, beam);
  EXPECT_EQ(all.size(), 35u);
  ASSERT_EQ(some.size(), 5u);
  const std::set<std::vector<std::size_t>> all_set(all.begin(), all.end());
  for (const auto& s : some) EXPECT_TRUE(all_set.count(s));
  EXPECT_TRUE(std::find(some.begin(), some.end(), std::vector<std::size_t>{5, 6, 7}) != some.end());
}

TEST(Sequential, MatchesBruteForceOnToyRegister) {
  const Register reg = toy();
  const auto tol = toy_tolerances(3);
  const auto staged = search_sequential(reg, SequenceUnit::cpmg(), tol, uncapped());
  const auto brute = bf::sequential(reg, SequenceUnit::cpmg(), tol);
  ASSERT_EQ(staged.size(), brute.size());
  ASSERT_GT(staged.size(), 0u);
  for (const auto& b : brute) {
    const auto it = std::find_if(staged.begin(), staged.end(), [&](const Case& c) { return c.spins == b.spins; });
    ASSERT_NE(it, staged.end());
    ASSERT_EQ(it->plan.blocks.size(), b.plan.blocks.size());
    for (std::size_t i = 0; i < b.plan.blocks.size(); ++i) {
      EXPECT_EQ(it->plan.blocks[i].t, b.plan.blocks[i].t);
      EXPECT_EQ(it->plan.blocks[i].N, b.plan.blocks[i].N);
    }
    EXPECT_NEAR(it->metrics.ep_unitary, b.ep, 1e-12);
  }
}

TEST(Multispin, MatchesBruteForceOnToyRegister) {
  const Register reg = toy();
  auto tol = multispin_tolerances(3);
  tol.k_max = 3;
  const auto staged = search_multispin(reg, SequenceUnit::cpmg(), tol, uncapped());
  const auto brute = bf::multispin(reg, SequenceUnit::cpmg(), tol);
  ASSERT_EQ(staged.size(), brute.size());
  for (const auto& b : brute) {
    const auto it = std::find_if(staged.begin(), staged.end(), [&](const Case& c) { return c.spins == b.spins; });
    ASSERT_NE(it, staged.end());
    EXPECT_EQ(it->plan.blocks[0].t, b.plan.blocks[0].t);
    EXPECT_EQ(it->plan.blocks[0].N, b.plan.blocks[0].N);
  }
}

TEST(Sequential, CasesSatisfyTolerancesAndAreSorted) {
  const Register reg = toy();
  const auto tol = toy_tolerances(3);
  const auto cases = search_sequential(reg, SequenceUnit::cpmg(), tol);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    EXPECT_TRUE(case_satisfies(c.metrics, c.spins, tol));
    EXPECT_EQ(c.plan.blocks.size(), 2u);
    EXPECT_EQ(c.scheme, Scheme::sequential);
    if (i > 0) EXPECT_GE(cases[i - 1].metrics.ep_scaled, c.metrics.ep_scaled);
  }
}

TEST(Sequential, RelaxingTolerancesNeverRemovesSubsets) {
  const Register reg = toy();
  const auto tight = toy_tolerances(3);
  auto loose = tight;
  loose.target_one_tangle_tol = 0.95;
  loose.unwanted_one_tangle_tol = 0.15;
  loose.gate_error_tol = 0.15;
  const auto a = subsets_of(search_sequential(reg, SequenceUnit::cpmg(), tight, uncapped()));
  const auto b = subsets_of(search_sequential(reg, SequenceUnit::cpmg(), loose, uncapped()));
  for (const auto& s : a) EXPECT_TRUE(b.count(s));
}

TEST(Multispin, ExactlyMMinusOneTargets) {
  const Register reg = toy();
  auto tol = multispin_tolerances(3);
  tol.k_max = 3;
  for (const auto& c : search_multispin(reg, SequenceUnit::cpmg(), tol)) {
    EXPECT_EQ(c.spins.size(), 2u);
    EXPECT_EQ(c.plan.blocks.size(), 1u);
    int above = 0;
    for (double ot : c.metrics.one_tangles_scaled) above += ot >= tol.target_one_tangle_tol;
    EXPECT_EQ(above, 2);
  }
}

TEST(Search, DeterministicAcrossThreads) {
  const Register reg = toy();
  const auto tol = toy_tolerances(3);
  SearchOptions one, many;
  many.threads = 3;
  const auto a = search_sequential(reg, SequenceUnit::cpmg(), tol, one);
  const auto b = search_sequential(reg, SequenceUnit::cpmg(), tol, many);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].spins, b[i].spins);
    EXPECT_EQ(a[i].metrics.ep_unitary, b[i].metrics.ep_unitary);
  }
  auto mt = multispin_tolerances(3);
  const auto c = search_multispin(reg, SequenceUnit::cpmg(), mt, one);
  const auto d = search_multispin(reg, SequenceUnit::cpmg(), mt, many);
  ASSERT_EQ(c.size(), d.size());
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(c[i].plan.blocks[0].t, d[i].plan.blocks[0].t);
}

TEST(Search, EmptyWhenRegisterTooSmall) {
  Register reg;
  reg.spins.push_back(table3().at("C5"));
  EXPECT_TRUE(search_sequential(reg, SequenceUnit::cpmg(), sequential_tolerances(3)).empty());
  EXPECT_TRUE(search_multispin(reg, SequenceUnit::cpmg(), multispin_tolerances(3)).empty());
}

TEST(Ranking, WeightsReorder) {
  std::vector<Case> cases(3);
  const double eps[] = {0.99, 0.95, 0.97}, Ts[] = {1.5e-3, 0.5e-3, 1.0e-3};
  for (int i = 0; i < 3; ++i) {
    cases[i].metrics.ep_scaled = eps[i];
    cases[i].metrics.total_time = Ts[i];
    cases[i].spin_labels = {std::to_string(i)};
  }
  const auto tol = sequential_tolerances(3);
  const auto by_ep = rank_cases(cases, {1.0, 0.0, 0.0}, tol);
  EXPECT_EQ(by_ep[0].spin_labels[0], "0");
  const auto by_time = rank_cases(cases, {0.0, 1.0, 0.0}, tol);
  EXPECT_EQ(by_time[0].spin_labels[0], "1");
  EXPECT_NEAR(by_time[0].rank_score, 0.75, 1e-12);
  EXPECT_THROW(rank_cases(cases, {0.5, 0.2, 0.2}, tol), config_error);
  EXPECT_THROW(rank_cases(cases, {1.5, -0.5, 0.0}, tol), config_error);
}
