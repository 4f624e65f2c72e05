#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "evotrend/brain.hpp"

using namespace evotrend;

namespace {

// Two processing groups big enough to host the outputs, no input rays
// beyond a single energy cell unless asked for.
NeuralArchitecture two_group_arch(int rays = 0) {
  NeuralArchitecture arch;
  arch.input_group_sizes = {rays, rays, rays, 1};
  arch.groups = {GroupSpec{10, 0}, GroupSpec{10, 0}};
  arch.pairs.assign(6, std::vector<PairParams>(2));
  arch.weight_max = 8.0;
  arch.init_weight_fraction = 0.1;
  return arch;
}

}  // namespace

TEST_CASE("build_brain wiring densities") {
  RandomStream rng(17);

  SECTION("zero density everywhere yields zero synapses") {
    auto arch = two_group_arch();
    const Brain b = build_brain(arch, rng);
    REQUIRE(b.synapse_count() == 0);
  }
  SECTION("density one on a 3->4 pair yields the complete bipartite graph") {
    NeuralArchitecture arch;
    arch.input_group_sizes = {0, 0, 0, 1};
    arch.groups = {GroupSpec{3, 0}, GroupSpec{4, 0}, GroupSpec{5, 0}};
    arch.pairs.assign(7, std::vector<PairParams>(3));
    arch.pairs[4][1].density = 1.0;  // p0 (3 neurons) -> p1 (4 neurons)
    arch.weight_max = 8.0;
    arch.init_weight_fraction = 0.1;
    Brain b = build_brain(arch, rng);
    REQUIRE(b.synapse_count() == 12);
    for (const auto& s : b.synapses) {
      REQUIRE(s.pre >= 1);
      REQUIRE(s.pre <= 3);
      REQUIRE(s.post >= 4);
      REQUIRE(s.post <= 7);
      REQUIRE(s.weight >= 0.0);
    }
  }
  SECTION("a last group too small for the outputs is a build error") {
    NeuralArchitecture arch;
    arch.input_group_sizes = {0, 0, 0, 1};
    arch.groups = {GroupSpec{4, 1}};
    arch.pairs.assign(5, std::vector<PairParams>(1));
    REQUIRE_THROWS_AS(build_brain(arch, rng), BrainBuildError);
  }
  SECTION("density .5 on a 10->10 pair averages 50 synapses") {
    auto arch = two_group_arch();
    arch.pairs[4][1].density = 0.5;
    double total = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const Brain b = build_brain(arch, rng);
      total += static_cast<double>(b.synapse_count());
    }
    REQUIRE(total / 1000.0 == Catch::Approx(50.0).margin(3.0));
  }
  SECTION("distortion zero is topographic, one is scattered") {
    auto arch = two_group_arch();
    arch.pairs[4][1].density = 0.2;
    arch.pairs[4][1].distortion = 0.0;
    double aligned_dist = 0.0, scattered_dist = 0.0;
    int n_aligned = 0, n_scattered = 0;
    for (int t = 0; t < 200; ++t) {
      const Brain ba = build_brain(arch, rng);
      for (const auto& s : ba.synapses) {
        aligned_dist += std::abs((s.pre - 1) - (s.post - 11));
        ++n_aligned;
      }
    }
    arch.pairs[4][1].distortion = 1.0;
    for (int t = 0; t < 200; ++t) {
      const Brain bs = build_brain(arch, rng);
      for (const auto& s : bs.synapses) {
        scattered_dist += std::abs((s.pre - 1) - (s.post - 11));
        ++n_scattered;
      }
    }
    REQUIRE(aligned_dist / n_aligned < scattered_dist / n_scattered);
  }
  SECTION("no synapse ever targets an input neuron, no autapses") {
    auto arch = two_group_arch(4);
    for (auto& row : arch.pairs)
      for (auto& p : row) {
        p.density = 0.7;
        p.distortion = 0.5;
      }
    const Brain b = build_brain(arch, rng);
    for (const auto& s : b.synapses) {
      REQUIRE(s.post >= b.input_count);
      REQUIRE(s.pre != s.post);
    }
  }
  SECTION("identical architecture and stream give identical brains") {
    auto arch = two_group_arch(4);
    arch.pairs[4][1].density = 0.4;
    arch.bias_magnitude = 0.5;
    RandomStream r1(5), r2(5);
    const Brain b1 = build_brain(arch, r1);
    const Brain b2 = build_brain(arch, r2);
    REQUIRE(b1.synapse_count() == b2.synapse_count());
    for (std::size_t i = 0; i < b1.synapses.size(); ++i) {
      REQUIRE(b1.synapses[i].pre == b2.synapses[i].pre);
      REQUIRE(b1.synapses[i].post == b2.synapses[i].post);
      REQUIRE(b1.synapses[i].weight == b2.synapses[i].weight);
    }
    REQUIRE(b1.bias == b2.bias);
  }
  SECTION("zero processing neurons is a build error") {
    NeuralArchitecture arch;
    arch.input_group_sizes = {1, 1, 1, 1};
    arch.groups = {};
    arch.pairs.assign(4, std::vector<PairParams>(0));
    REQUIRE_THROWS_AS(build_brain(arch, rng), BrainBuildError);
  }
}

TEST_CASE("brain_step computes the squashed weighted sum synchronously") {
  RandomStream rng(2);

  SECTION("no synapses, zero bias: every processing activation is one half") {
    auto arch = two_group_arch();
    Brain b = build_brain(arch, rng);
    std::vector<double> inputs(1, 0.3);
    brain_step(b, inputs);
    for (int i = b.input_count; i < b.neuron_count(); ++i)
      REQUIRE(b.activation[static_cast<std::size_t>(i)] == Catch::Approx(0.5));
  }
  SECTION("a single saturated synapse drives the logistic to sigma(8)") {
    auto arch = two_group_arch();
    Brain b = build_brain(arch, rng);
    Synapse s;
    s.pre = 0;  // the energy input
    s.post = static_cast<std::uint16_t>(b.input_count);
    s.weight = 8.0;
    b.synapses = {s};
    b.post_offsets.assign(static_cast<std::size_t>(b.neuron_count()) + 1, 0);
    for (std::size_t i = static_cast<std::size_t>(b.input_count) + 1;
         i < b.post_offsets.size(); ++i)
      b.post_offsets[i] = 1;
    std::vector<double> inputs(1, 1.0);
    brain_step(b, inputs);
    REQUIRE(b.activation[static_cast<std::size_t>(b.input_count)] ==
            Catch::Approx(0.99966464987).epsilon(1e-9));
  }
  SECTION("permuting synapse storage order leaves the step bit-identical") {
    auto arch = two_group_arch(4);
    for (auto& row : arch.pairs)
      for (auto& p : row) p.density = 0.5;
    arch.bias_magnitude = 0.3;
    Brain b1 = build_brain(arch, rng);
    Brain b2 = b1;
    // reverse each post's synapse span; offsets stay valid
    for (int post = 0; post < b2.neuron_count(); ++post) {
      auto begin = b2.synapses.begin() + b2.post_offsets[static_cast<std::size_t>(post)];
      auto end = b2.synapses.begin() + b2.post_offsets[static_cast<std::size_t>(post) + 1];
      std::reverse(begin, end);
    }
    std::vector<double> inputs(static_cast<std::size_t>(b1.input_count), 0.7);
    for (int t = 0; t < 5; ++t) {
      brain_step(b1, inputs);
      brain_step(b2, inputs);
    }
    for (int i = 0; i < b1.neuron_count(); ++i)
      REQUIRE(b1.activation[static_cast<std::size_t>(i)] ==
              b2.activation[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("hebbian_update follows the centered rule with sign clamps") {
  RandomStream rng(4);
  auto arch = two_group_arch();
  Brain b = build_brain(arch, rng);
  Synapse s;
  s.pre = static_cast<std::uint16_t>(b.input_count);
  s.post = static_cast<std::uint16_t>(b.input_count + 1);
  s.weight = 0.5;
  s.learning_rate = 0.1;
  b.synapses = {s};

  SECTION("centered activations leave weights unchanged") {
    b.activation[s.pre] = 0.5;
    b.activation[s.post] = 0.5;
    hebbian_update(b);
    REQUIRE(b.synapses[0].weight == 0.5);
  }
  SECTION("full co-activation adds eta/4") {
    b.activation[s.pre] = 1.0;
    b.activation[s.post] = 1.0;
    hebbian_update(b);
    REQUIRE(b.synapses[0].weight == Catch::Approx(0.525));
  }
  SECTION("an excitatory weight at zero cannot go negative") {
    b.synapses[0].weight = 0.0;
    b.activation[s.pre] = 1.0;
    b.activation[s.post] = 0.0;  // anti-correlated: dw < 0
    hebbian_update(b);
    REQUIRE(b.synapses[0].weight == 0.0);
  }
  SECTION("an inhibitory weight stays in [-w_max, 0]") {
    b.signs[s.pre] = -1;
    b.synapses[0].weight = -7.99;
    b.activation[s.pre] = 0.0;
    b.activation[s.post] = 1.0;
    for (int i = 0; i < 100; ++i) hebbian_update(b);
    REQUIRE(b.synapses[0].weight >= -8.0);
    REQUIRE(b.synapses[0].weight <= 0.0);
  }
}

TEST_CASE("fuzz: bounds hold over many random steps") {
  RandomStream rng(31);
  auto arch = two_group_arch(4);
  for (auto& row : arch.pairs)
    for (auto& p : row) {
      p.density = 0.6;
      p.distortion = 0.3;
      p.learning_rate = 0.15;
    }
  arch.bias_magnitude = 1.0;
  arch.weight_max = 6.0;
  Brain b = build_brain(arch, rng);
  std::vector<double> inputs(static_cast<std::size_t>(b.input_count));
  for (int t = 0; t < 10000; ++t) {
    for (auto& v : inputs) v = rng.uniform();
    brain_step(b, inputs);
    hebbian_update(b);
  }
  for (const auto& s : b.synapses) {
    if (b.signs[s.pre] > 0) {
      REQUIRE(s.weight >= 0.0);
      REQUIRE(s.weight <= arch.weight_max);
    } else {
      REQUIRE(s.weight <= 0.0);
      REQUIRE(s.weight >= -arch.weight_max);
    }
  }
  for (int i = b.input_count; i < b.neuron_count(); ++i) {
    REQUIRE(b.activation[static_cast<std::size_t>(i)] > 0.0);
    REQUIRE(b.activation[static_cast<std::size_t>(i)] < 1.0);
  }
}
