#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "nlmc/kernel.hpp"
#include "nlmc/measure.hpp"
#include "nlmc/rng.hpp"
#include "nlmc/transport.hpp"

namespace nlmc {

/// State of the N-particle system at step n. Particle i at step n always draws from the
/// stream keyed by (master_seed, cell, trial, i, n), so trajectories do not depend on
/// how the work is split across threads.
struct ParticleEnsemble {
  PointCloud particles;
  std::size_t step = 0;
  std::uint64_t master_seed = 0;
  std::uint64_t trial = 0;
  /// Experiment cell (for example the value of N); keeps streams of different cells apart.
  std::uint64_t cell = 0;

  std::size_t size() const { return particles.size(); }
  int dim() const { return particles.dim(); }
  DiscreteMeasure empirical() const { return DiscreteMeasure::uniform(particles); }
};

struct StepOptions {
  int threads = 1;
  /// Test hook: replaces the per-particle stream for particle i.
  std::function<std::unique_ptr<RandomStream>(std::size_t particle)> stream_override;
};

/// Draws N i.i.d. initial particles from eta0.
ParticleEnsemble initialize_ensemble(const MeanFieldFlow& eta0, std::size_t n, std::uint64_t master_seed,
                                     std::uint64_t trial = 0, std::uint64_t cell = 0);

/// One step of the interacting system: eta^N = m(X_n) is built once, then every particle
/// draws X^i_{n+1} ~ K^{(n+1)}_{eta^N}(X^i_n, .) from its own stream.
ParticleEnsemble ips_step(const ParticleEnsemble& ens, const NonlinearKernel& kernel, const StepOptions& options = {});

struct MeanFieldOptions {
  bool allow_surrogate = true;
  int threads = 1;
};

/// eta_{n+1} = eta_n K^{(n+1)}_{eta_n}: exact when the kernel supports the
/// representation, otherwise (if allowed) by advancing a surrogate cloud.
MeanFieldFlow mean_field_step(const MeanFieldFlow& flow, const NonlinearKernel& kernel,
                              const MeanFieldOptions& options = {});

/// Surrogate representation of eta0 with M i.i.d. particles.
MeanFieldFlow make_surrogate(const MeanFieldFlow& eta0, std::size_t m, std::uint64_t seed);

/// i.i.d. draws from the represented law (grid flows by inverse CDF over the atoms,
/// surrogate clouds by uniform choice of a particle).
PointCloud sample_flow(const MeanFieldFlow& flow, std::size_t count, RandomStream& rng);

struct ReferenceDistance {
  double distance = 0.0;
  /// Atoms in the reference measure used (0 when the law itself was used exactly).
  std::size_t reference_size = 0;
  bool exact = false;
  std::string note;
};

/// W(m(particles), eta_n). Exact for 1D grid flows (CDF integral), purely atomic
/// mixtures and surrogate clouds; otherwise against ref_size i.i.d. reference draws,
/// which biases the estimate upward at order ref_size^{-1/d}.
ReferenceDistance estimate_w1_to_reference(const ParticleEnsemble& ens, const MeanFieldFlow& flow,
                                           std::size_t ref_size, const CostSpec& cost, RandomStream& rng,
                                           const TransportOptions& transport = {});

/// Transport options sized for a solve between clouds of n1 and n2 atoms.
TransportOptions transport_for(std::size_t n1, std::size_t n2);

}  // namespace nlmc
