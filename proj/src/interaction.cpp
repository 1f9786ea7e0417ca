#include "fluctlab/interaction.hpp"

#include "fluctlab/errors.hpp"

namespace fluctlab {

Interaction::Interaction(std::vector<LocalOperator> terms, int site_dim)
    : terms_(std::move(terms)), site_dim_(site_dim), range_(1) {
  for (auto& t : terms_) {
    if (t.support().lo != 0)
      throw std::invalid_argument("Interaction: terms must be anchored at 0");
    if (!t.self_adjoint(1e-12))
      throw std::invalid_argument("Interaction: term not self-adjoint");
    range_ = std::max(range_, t.support().length());
  }
}

bool Interaction::spin_flip_symmetric() const {
  if (site_dim_ != 2) return false;
  for (const auto& t : terms_) {
    MatrixXcd flip = MatrixXcd::Identity(1, 1);
    for (int i = 0; i < t.support().length(); ++i) flip = kron(flip, pauli::sx());
    if ((flip * t.matrix() * flip - t.matrix()).cwiseAbs().maxCoeff() > 1e-12)
      return false;
  }
  return true;
}

std::uint64_t Interaction::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  mix(static_cast<std::uint64_t>(site_dim_));
  for (const auto& t : terms_) {
    mix(static_cast<std::uint64_t>(t.support().length()));
    const auto* data = reinterpret_cast<const std::uint64_t*>(t.matrix().data());
    for (Eigen::Index i = 0; i < t.matrix().size() * 2; ++i) mix(data[i]);
  }
  return h;
}

Interaction Interaction::transverse_field_ising(double coupling, double field) {
  std::vector<LocalOperator> terms;
  terms.emplace_back(Interval(0, 1), -coupling * kron(pauli::sz(), pauli::sz()));
  terms.emplace_back(Interval(0, 0), -field * pauli::sx());
  return Interaction(std::move(terms));
}

Interaction Interaction::xy(double coupling) {
  std::vector<LocalOperator> terms;
  terms.emplace_back(Interval(0, 1),
                     -coupling * (kron(pauli::sx(), pauli::sx()) +
                                  kron(pauli::sy(), pauli::sy())));
  return Interaction(std::move(terms));
}

Interaction Interaction::heisenberg(double coupling) {
  std::vector<LocalOperator> terms;
  terms.emplace_back(Interval(0, 1),
                     coupling * (kron(pauli::sx(), pauli::sx()) +
                                 kron(pauli::sy(), pauli::sy()) +
                                 kron(pauli::sz(), pauli::sz())));
  return Interaction(std::move(terms));
}

Interaction Interaction::by_name(const std::string& preset, double coupling,
                                 double field) {
  if (preset == "tfi" || preset == "transverse_field_ising")
    return transverse_field_ising(coupling, field);
  if (preset == "ising") return transverse_field_ising(coupling, 0.0);
  if (preset == "xy") return xy(coupling);
  if (preset == "heisenberg") return heisenberg(coupling);
  throw ConfigError("unknown interaction preset: " + preset);
}

}  // namespace fluctlab
