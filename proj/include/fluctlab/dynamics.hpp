#pragma once

#include <memory>
#include <mutex>
#include <unordered_map>

#include "fluctlab/fit.hpp"
#include "fluctlab/interaction.hpp"
#include "fluctlab/local_operator.hpp"

namespace fluctlab {

/// Default window dimension guard: keeps dense eigendecompositions at desk
/// scale (d^14 for qubits).
constexpr std::int64_t kDefaultWindowCap = std::int64_t{1} << 14;

/// H_Lambda = sum over translates of the anchored terms fitting in `window`.
LocalOperator local_hamiltonian(const Interaction& psi, const Interval& window);

/// Shared cache of Hamiltonian eigendecompositions keyed by
/// (interaction, window). Read-safe under concurrent access.
class HamiltonianCache {
 public:
  std::shared_ptr<const HermitianEig> get(const Interaction& psi,
                                          const Interval& window);
  static HamiltonianCache& instance();

 private:
  std::mutex mu_;
  std::unordered_map<std::string, std::shared_ptr<const HermitianEig>> map_;
};

/// Heisenberg evolution on a finite window: e^{itH} Q e^{-itH}.
LocalOperator evolve(const LocalOperator& q, double t, const Interaction& psi,
                     const Interval& window);

/// Complex-time evolution e^{izH} Q e^{-izH} via spectral decomposition.
/// Warns (via return flag in `conditioning_warning`) when
/// |Im z| * spec-width(H) exceeds `overflow_threshold`.
LocalOperator complex_evolve(const LocalOperator& q, cplx z,
                             const Interaction& psi, const Interval& window,
                             double overflow_threshold = 700.0,
                             bool* conditioning_warning = nullptr);

struct EvolutionResult {
  LocalOperator op;
  Interval window;
  double truncation_error = 0.0;
};

/// Approximates the thermodynamic-limit evolution by growing the window
/// symmetrically until the increment between successive windows drops below
/// `tol`; the certificate adds a geometric extrapolation of the remainder.
EvolutionResult evolve_infinite_approx(
    const LocalOperator& q, double t, const Interaction& psi, double tol,
    std::int64_t max_window_dim = kDefaultWindowCap);

struct LiebRobinsonRow {
  int buffer;
  double deviation;
};

struct LiebRobinsonTable {
  std::vector<LiebRobinsonRow> rows;
  LinearFit decay_fit;  // log(deviation) vs buffer
};

/// deviation(b) = || alpha_t^{Lambda_0+b}(q) - alpha_t^{Lambda_0+b_max}(q) ||.
LiebRobinsonTable lieb_robinson_probe(const LocalOperator& q, double t,
                                      const Interaction& psi,
                                      const std::vector<int>& buffers);

}  // namespace fluctlab
