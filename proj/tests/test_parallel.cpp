#include <gtest/gtest.h>

#include <cstdlib>

#include "helpers.hpp"
#include "opkrr/experiments.hpp"
#include "opkrr/parallel.hpp"

namespace opkrr {
namespace {

class ThreadsGuard {
 public:
  ThreadsGuard() : saved_(thread_count()) {}
  ~ThreadsGuard() { set_thread_count(saved_); }

 private:
  int saved_;
};

TEST(ForEachIndex, CoversEveryIndexOnce) {
  ThreadsGuard guard;
  set_thread_count(4);
  std::vector<int> hits(1000, 0);
  for_each_index(1000, Execution::parallel, [&](std::ptrdiff_t i) { hits[static_cast<std::size_t>(i)] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(ForEachIndex, RethrowsException) {
  ThreadsGuard guard;
  set_thread_count(3);
  EXPECT_THROW(for_each_index(100, Execution::parallel,
                              [](std::ptrdiff_t i) {
                                if (i == 57) throw std::runtime_error("boom");
                              }),
               std::runtime_error);
}

TEST(Threads, EnvironmentVariable) {
  ThreadsGuard guard;
  setenv("OPKRR_THREADS", "3", 1);
  EXPECT_EQ(configure_threads_from_env(), 3);
  EXPECT_EQ(thread_count(), 3);
  setenv("OPKRR_THREADS", "zero", 1);
  EXPECT_THROW(configure_threads_from_env(), std::invalid_argument);
  setenv("OPKRR_THREADS", "0", 1);
  EXPECT_THROW(configure_threads_from_env(), std::invalid_argument);
  unsetenv("OPKRR_THREADS");
}

// The serial path is the reference; the OpenMP path must match it bit for bit.
class SerialParallel : public ::testing::TestWithParam<int> {
 protected:
  ThreadsGuard guard_;
  void SetUp() override { set_thread_count(GetParam()); }
};

TEST_P(SerialParallel, GramBlocks) {
  Rng rng = make_stream(91);
  const auto kernel = testing::random_kernel(3, rng);
  const Points xs = testing::random_matrix(4, 57, rng);
  EXPECT_EQ(gram_blocks(*kernel, xs, Execution::serial).flattened(),
            gram_blocks(*kernel, xs, Execution::parallel).flattened());
}

TEST_P(SerialParallel, EvaluateAndInner) {
  Rng rng = make_stream(92);
  const auto kernel = testing::random_kernel(2, rng);
  const auto f = testing::random_expansion(kernel, 3, 150, rng);
  const auto g = testing::random_expansion(kernel, 3, 97, rng);
  const Points xs = testing::random_matrix(3, 61, rng);
  EXPECT_EQ(f.evaluate(xs, Execution::serial), f.evaluate(xs, Execution::parallel));
  EXPECT_EQ(h_inner(f, g, Execution::serial), h_inner(f, g, Execution::parallel));
}

TEST_P(SerialParallel, FitAndTrials) {
  Rng rng = make_stream(93);
  const auto kernel = testing::random_kernel(2, rng);
  const TrainingSet data(testing::random_matrix(2, 40, rng), testing::random_matrix(2, 40, rng));
  FitOptions serial;
  serial.execution = Execution::serial;
  EXPECT_EQ(fit(data, kernel, 0.1, serial).alphas(), fit(data, kernel, 0.1).alphas());

  const auto member = random_well_specified(kernel, 4, 2, NoiseLaw::isotropic_gaussian(0.3), rng);
  EXPECT_EQ(excess_risk_trials(member.population, kernel, 50, 0.2, 17, 3, 1, Execution::serial),
            excess_risk_trials(member.population, kernel, 50, 0.2, 17, 3, 1, Execution::parallel));
}

INSTANTIATE_TEST_SUITE_P(Threads, SerialParallel, ::testing::Values(1, 2, 4, 7));

}  // namespace
}  // namespace opkrr
