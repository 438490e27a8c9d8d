#include "mecsched/ga.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

#include "mecsched/parallel.hpp"
#include "mecsched/random.hpp"

namespace mecsched {

namespace {

using Chromosome = std::vector<std::uint8_t>;

struct Individual {
  Chromosome genes;
  double utility;
};

class FitnessCache {
 public:
  FitnessCache(const Instance& instance, const SystemParams& params, const OracleConfig& oracle)
      : instance_(instance), params_(params), oracle_(oracle) {}

  double operator()(const Chromosome& genes) {
    std::string key(genes.begin(), genes.end());
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    double utility;
    try {
      utility = solve_resources_given_m(instance_, genes, params_, oracle_).utility;
    } catch (const InfeasibleError&) {
      utility = std::numeric_limits<double>::infinity();
    }
    cache_.emplace(std::move(key), utility);
    return utility;
  }

  std::size_t size() const { return cache_.size(); }

 private:
  const Instance& instance_;
  const SystemParams& params_;
  const OracleConfig& oracle_;
  std::unordered_map<std::string, double> cache_;
};

const Individual& tournament(const std::vector<Individual>& pop, std::size_t size, Rng& rng) {
  const Individual* best = &pop[uniform_index(rng, pop.size())];
  for (std::size_t k = 1; k < size; ++k) {
    const Individual& other = pop[uniform_index(rng, pop.size())];
    if (other.utility < best->utility) best = &other;
  }
  return *best;
}

}  // namespace

BatchError::BatchError(std::size_t index, const std::string& what)
    : std::runtime_error("instance " + std::to_string(index) + ": " + what), index_(index) {}

void GaConfig::validate() const {
  if (population_size < elitism_count + 2) {
    throw std::invalid_argument("population_size must be at least elitism_count + 2");
  }
  if (tournament_size < 1) throw std::invalid_argument("tournament_size must be >= 1");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) {
    throw std::invalid_argument("crossover_rate must lie in [0, 1]");
  }
  if (mutation_rate && !(*mutation_rate >= 0.0 && *mutation_rate <= 1.0)) {
    throw std::invalid_argument("mutation_rate must lie in [0, 1]");
  }
}

double GaConfig::mutation_rate_for(std::size_t n) const {
  return mutation_rate.value_or(1.0 / static_cast<double>(std::max<std::size_t>(n, 1)));
}

LabeledInstance ga_solve(const Instance& instance, const SystemParams& params,
                         const GaConfig& cfg, GaTrace* trace, const OracleConfig& oracle) {
  cfg.validate();
  instance.validate(params);
  const std::size_t n = instance.size();
  const double mutation = cfg.mutation_rate_for(n);
  Rng rng = make_rng(cfg.seed);
  FitnessCache fitness(instance, params, oracle);

  Individual incumbent{{}, std::numeric_limits<double>::infinity()};
  auto consider = [&](const Individual& ind) {
    if (ind.utility < incumbent.utility) incumbent = ind;
  };

  std::vector<Individual> population;
  population.reserve(cfg.population_size);
  for (std::size_t i = 0; i < cfg.population_size; ++i) {
    Chromosome genes(n);
    if (!cfg.initial_population.empty()) {
      genes = cfg.initial_population[i % cfg.initial_population.size()];
      if (genes.size() != n) {
        throw std::invalid_argument("seeded chromosome length does not match instance");
      }
    } else {
      for (auto& g : genes) g = static_cast<std::uint8_t>(rng() & 1u);
    }
    const double u = fitness(genes);
    population.push_back({std::move(genes), u});
    consider(population.back());
  }
  if (trace) trace->best_utility.assign(1, incumbent.utility);

  std::vector<std::size_t> order(cfg.population_size);
  std::vector<Individual> next;
  next.reserve(cfg.population_size);
  for (std::size_t gen = 0; gen < cfg.generations; ++gen) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return population[a].utility < population[b].utility;
    });
    next.clear();
    for (std::size_t e = 0; e < cfg.elitism_count; ++e) next.push_back(population[order[e]]);

    while (next.size() < cfg.population_size) {
      const Individual& a = tournament(population, cfg.tournament_size, rng);
      const Individual& b = tournament(population, cfg.tournament_size, rng);
      Chromosome child = a.genes;
      if (uniform01(rng) < cfg.crossover_rate) {
        for (std::size_t i = 0; i < n; ++i) {
          if (rng() & 1u) child[i] = b.genes[i];
        }
      }
      if (mutation > 0.0) {
        for (auto& g : child) {
          if (uniform01(rng) < mutation) g ^= 1u;
        }
      }
      const double u = fitness(child);
      next.push_back({std::move(child), u});
      consider(next.back());
    }
    population.swap(next);
    if (trace) trace->best_utility.push_back(incumbent.utility);
  }
  if (trace) trace->distinct_evaluations = fitness.size();

  if (incumbent.genes.empty() || !(incumbent.utility < std::numeric_limits<double>::infinity())) {
    throw InfeasibleError("genetic search found no budget-feasible offload vector");
  }
  ResourceSolution best = solve_resources_given_m(instance, incumbent.genes, params, oracle);
  return LabeledInstance{instance, std::move(best.schedule), best.utility, "ga"};
}

std::vector<LabeledInstance> ga_solve_batch(std::span<const Instance> instances,
                                            const SystemParams& params, const GaConfig& cfg,
                                            std::size_t worker_count) {
  std::vector<LabeledInstance> out(instances.size());
  parallel_for(instances.size(), worker_count, [&](std::size_t i) {
    GaConfig local = cfg;
    local.seed = cfg.seed ^ static_cast<std::uint64_t>(i);
    try {
      out[i] = ga_solve(instances[i], params, local);
    } catch (const std::exception& e) {
      throw BatchError(i, e.what());
    }
  });
  return out;
}

}  // namespace mecsched
