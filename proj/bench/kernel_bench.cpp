// Times the parallel kernels against the serial reference versions, then one
// DIRT training step at default sizes. Usage: dirt_bench [repeats]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "dirt/dirt_model.hpp"
#include "dirt/kernels.hpp"
#include "dirt/random.hpp"
#include "dirt/synthetic.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_per_call(const std::function<void()>& body, int repeats) {
  body();  // warm-up
  const auto start = Clock::now();
  for (int i = 0; i < repeats; ++i) body();
  return std::chrono::duration<double>(Clock::now() - start).count() / repeats;
}

std::vector<double> random_values(std::size_t n, dirt::Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = dirt::uniform(rng, -1.0, 1.0);
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::max(1, std::atoi(argv[1])) : 20;
  std::printf("threads\t%d\n", dirt::kernels::max_threads());
  std::printf("kernel\tm\tk\tn\treference_ms\tparallel_ms\tspeedup\tmax_abs_diff\n");

  dirt::Rng rng(1);
  const std::size_t shapes[][3] = {{32, 50, 200}, {960, 50, 200}, {256, 256, 256}, {1024, 512, 512}};
  for (const auto& s : shapes) {
    const std::size_t m = s[0], k = s[1], n = s[2];
    const auto a = random_values(m * k, rng);
    const auto b = random_values(k * n, rng);
    const auto bt = random_values(n * k, rng);
    const auto g = random_values(m * n, rng);

    struct Case {
      const char* name;
      std::function<void(std::vector<double>&)> fast, slow;
      std::size_t out;
    };
    const Case cases[] = {
        {"matmul", [&](auto& c) { dirt::kernels::matmul(a, b, c, m, k, n); },
         [&](auto& c) { dirt::kernels::reference::matmul(a, b, c, m, k, n); }, m * n},
        {"matmul_add_bt", [&](auto& c) { dirt::kernels::matmul_add_bt(g, bt, c, m, n, k); },
         [&](auto& c) { dirt::kernels::reference::matmul_add_bt(g, bt, c, m, n, k); }, m * k},
        {"matmul_add_at", [&](auto& c) { dirt::kernels::matmul_add_at(a, g, c, m, k, n); },
         [&](auto& c) { dirt::kernels::reference::matmul_add_at(a, g, c, m, k, n); }, k * n},
    };
    for (const auto& c : cases) {
      std::vector<double> fast(c.out), slow(c.out);
      const double ref = seconds_per_call([&] { std::fill(slow.begin(), slow.end(), 0.0); c.slow(slow); }, repeats);
      const double par = seconds_per_call([&] { std::fill(fast.begin(), fast.end(), 0.0); c.fast(fast); }, repeats);
      std::printf("%s\t%zu\t%zu\t%zu\t%.4f\t%.4f\t%.2f\t%.3g\n", c.name, m, k, n, ref * 1e3, par * 1e3, ref / par,
                  max_abs_diff(fast, slow));
    }
  }

  // One optimizer-free training step (forward + backward) on a batch of 32.
  dirt::GenConfig gen;
  gen.students = 100;
  gen.questions = 400;
  gen.seed = 3;
  const auto data = dirt::generate(gen);
  dirt::DirtModel model(data.corpus, dirt::DirtConfig{});
  std::vector<dirt::ResponseRecord> batch(data.corpus.records().begin(), data.corpus.records().begin() + 32);
  dirt::Rng drop(5);
  const dirt::ForwardContext context{dirt::Mode::Train, 0.2, &drop};
  const double step = seconds_per_call(
      [&] {
        model.parameters().zero_grad();
        dirt::Graph graph;
        dirt::Var loss = model.batch_loss(graph, batch, context);
        graph.backward(loss);
      },
      repeats);
  std::printf("dirt_batch_step_ms\t%.3f\n", step * 1e3);
  return 0;
}
