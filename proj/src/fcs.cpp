#include "fluctlab/fcs.hpp"

#include <algorithm>
#include <cmath>

#include "fluctlab/errors.hpp"
#include "json.hpp"

namespace fluctlab {

namespace {

MatrixXcd unvec(const VectorXcd& v, int k) {
  return Eigen::Map<const MatrixXcd>(v.data(), k, k);
}

VectorXcd vec(const MatrixXcd& m) {
  return Eigen::Map<const VectorXcd>(m.data(), m.size());
}

// Schroedinger map rho -> sum_i V_i rho V_i^dagger as a k^2 x k^2 matrix
// (column-major vectorization).
MatrixXcd schroedinger_matrix(const std::vector<MatrixXcd>& kraus) {
  const int k = static_cast<int>(kraus[0].rows());
  MatrixXcd s = MatrixXcd::Zero(k * k, k * k);
  for (const auto& v : kraus) s += kron(v.conjugate(), v);
  return s;
}

// Fixed-point density: spectral projection of the Schroedinger map at
// eigenvalue 1 applied to the maximally mixed input, then hermitized and
// normalized. The projection of a positive input is positive.
MatrixXcd fixed_point_density(const std::vector<MatrixXcd>& kraus,
                              double tol) {
  const int k = static_cast<int>(kraus[0].rows());
  MatrixXcd s = schroedinger_matrix(kraus);
  Eigen::ComplexEigenSolver<MatrixXcd> es(s);
  VectorXcd seed = vec(MatrixXcd::Identity(k, k) / static_cast<double>(k));
  VectorXcd coeffs = es.eigenvectors().partialPivLu().solve(seed);
  VectorXcd projected = VectorXcd::Zero(k * k);
  for (Eigen::Index i = 0; i < coeffs.size(); ++i)
    if (std::abs(es.eigenvalues()[i] - 1.0) <= 1e-9)
      projected += coeffs[i] * es.eigenvectors().col(i);
  MatrixXcd rho = unvec(projected, k);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  const double tr = rho.trace().real();
  if (std::abs(tr) < 1e-12)
    throw InvariantViolationError("FCSState: no usable transfer fixed point");
  rho /= tr;
  MatrixXcd mapped = MatrixXcd::Zero(k, k);
  for (const auto& v : kraus) mapped += v * rho * v.adjoint();
  if ((mapped - rho).cwiseAbs().maxCoeff() > std::max(tol, 1e-10))
    throw InvariantViolationError("FCSState: fixed point residual too large");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> rs(rho);
  if (rs.eigenvalues().minCoeff() < -std::max(tol, 1e-10))
    throw InvariantViolationError("FCSState: fixed point not positive");
  return rho;
}

// Products V_{i_w} ... V_{i_1} for every length-w word, indexed with the
// leftmost site as the most significant digit.
std::vector<MatrixXcd> word_products(const std::vector<MatrixXcd>& kraus,
                                     int w) {
  const int k = static_cast<int>(kraus[0].rows());
  std::vector<MatrixXcd> words = {MatrixXcd::Identity(k, k)};
  for (int step = 0; step < w; ++step) {
    std::vector<MatrixXcd> next;
    next.reserve(words.size() * kraus.size());
    for (std::size_t i = 0; i < kraus.size(); ++i)
      for (const auto& word : words) next.push_back(word * kraus[i]);
    words = std::move(next);
  }
  return words;
}

}  // namespace

FCSState::FCSState(std::vector<MatrixXcd> kraus, double tol)
    : kraus_(std::move(kraus)) {
  if (kraus_.empty()) throw std::invalid_argument("FCSState: no Kraus data");
  const Eigen::Index k = kraus_[0].rows();
  MatrixXcd gram = MatrixXcd::Zero(k, k);
  for (const auto& v : kraus_) {
    if (v.rows() != k || v.cols() != k)
      throw std::invalid_argument("FCSState: Kraus shapes differ");
    gram += v.adjoint() * v;
  }
  if ((gram - MatrixXcd::Identity(k, k)).cwiseAbs().maxCoeff() > tol)
    throw InvariantViolationError("FCSState: Kraus family not unital");
  rho_ = fixed_point_density(kraus_, tol);
}

FCSState FCSState::from_spec(const FCSSpec& spec) {
  if (static_cast<int>(spec.kraus.size()) != spec.site_dim)
    throw ConfigError("FCSSpec: kraus count differs from site_dim");
  for (const auto& v : spec.kraus)
    if (v.rows() != spec.bond_dim || v.cols() != spec.bond_dim)
      throw ConfigError("FCSSpec: Kraus shape differs from bond_dim");
  return FCSState(spec.kraus, spec.tol);
}

FCSState FCSState::classical_markov(const MatrixXd& transition) {
  const Eigen::Index n = transition.rows();
  if (transition.cols() != n)
    throw std::invalid_argument("classical_markov: transition not square");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(transition.col(i).sum() - 1.0) > 1e-12)
      throw std::invalid_argument("classical_markov: column " +
                                  std::to_string(i) + " not stochastic");
    if (transition.col(i).minCoeff() < 0)
      throw std::invalid_argument("classical_markov: negative probability");
  }
  std::vector<MatrixXcd> kraus;
  for (Eigen::Index i = 0; i < n; ++i) {
    MatrixXcd v = MatrixXcd::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
      v(a, i) = std::sqrt(transition(a, i));
    kraus.push_back(std::move(v));
  }
  return FCSState(std::move(kraus));
}

MatrixXcd FCSState::contract(const MatrixXcd& q, int sites,
                             const MatrixXcd& b) const {
  if (sites == 0) return q(0, 0) * b;
  const int d = site_dim();
  const Eigen::Index sub = q.rows() / d;
  MatrixXcd out = MatrixXcd::Zero(b.rows(), b.cols());
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const auto block = q.block(i * sub, j * sub, sub, sub);
      if (block.cwiseAbs().maxCoeff() == 0.0) continue;
      out += kraus_[i].adjoint() * contract(block, sites - 1, b) * kraus_[j];
    }
  }
  return out;
}

MatrixXcd FCSState::transfer_apply(const MatrixXcd& b) const {
  MatrixXcd out = MatrixXcd::Zero(b.rows(), b.cols());
  for (const auto& v : kraus_) out += v.adjoint() * b * v;
  return out;
}

cplx FCSState::expect(const LocalOperator& q) const {
  const int k = bond_dim();
  MatrixXcd x = contract(q.matrix(), q.support().length(),
                         MatrixXcd::Identity(k, k));
  return (rho_ * x).trace();
}

cplx FCSState::expect_pair(const LocalOperator& a, const LocalOperator& b,
                           int k) const {
  LocalOperator ta = translate(a, k);
  if (!ta.support().disjoint(b.support()))
    return expect(multiply(ta, b));
  const LocalOperator& left = ta.support().hi < b.support().lo ? ta : b;
  const LocalOperator& right = ta.support().hi < b.support().lo ? b : ta;
  const int gap = right.support().lo - left.support().hi - 1;
  const int kb = bond_dim();
  MatrixXcd x = contract(right.matrix(), right.support().length(),
                         MatrixXcd::Identity(kb, kb));
  for (int g = 0; g < gap; ++g) x = transfer_apply(x);
  MatrixXcd y = contract(left.matrix(), left.support().length(), x);
  return (rho_ * y).trace();
}

MatrixXcd FCSState::window_density(const Interval& window) const {
  const int w = window.length();
  const std::int64_t dim = pow_dim(site_dim(), w);
  if (dim > (std::int64_t{1} << 12))
    throw WindowCapError("window_density: window " + window.str() +
                         " too large for a dense density");
  const int k = bond_dim();
  Eigen::SelfAdjointEigenSolver<MatrixXcd> rs(rho_);
  MatrixXcd c = rs.eigenvectors() *
                rs.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  auto words = word_products(kraus_, w);
  MatrixXcd a(k * k, dim);
  for (std::int64_t i = 0; i < dim; ++i)
    a.col(i) = vec(words[static_cast<std::size_t>(i)] * c);
  // Entry (J, I) of the density is phi(|I><J|) = <a_I, a_J>.
  MatrixXcd gram = a.adjoint() * a;
  return gram.transpose();
}

std::optional<DecayCertificate> FCSState::mixing_certificate() const {
  MixingCertificate cert = mixing_analysis(*this);
  if (!cert.is_mixing) return std::nullopt;
  // |phi(a tau(b)) - phi(a) phi(b)| <= prefactor e^{-rate gap} ||a|| 2||b||.
  return DecayCertificate{2.0 * cert.prefactor, cert.rate};
}

TransferOperator dual_transfer(const FCSState& state) {
  TransferOperator out;
  const int k = state.bond_dim();
  out.matrix = MatrixXcd::Zero(k * k, k * k);
  for (const auto& v : state.kraus())
    out.matrix += kron(v.transpose(), v.adjoint());
  Eigen::ComplexEigenSolver<MatrixXcd> es(out.matrix);
  out.eigenvalues = es.eigenvalues();
  std::sort(out.eigenvalues.data(),
            out.eigenvalues.data() + out.eigenvalues.size(),
            [](cplx a, cplx b) { return std::abs(a) > std::abs(b); });
  return out;
}

MixingCertificate mixing_analysis(const FCSState& state,
                                  double peripheral_tol) {
  MixingCertificate cert;
  const int k = state.bond_dim();
  TransferOperator t = dual_transfer(state);
  int peripheral = 0;
  for (Eigen::Index i = 0; i < t.eigenvalues.size(); ++i)
    if (std::abs(t.eigenvalues[i]) >= 1.0 - peripheral_tol) ++peripheral;
  cert.is_mixing = peripheral == 1;
  cert.slem =
      t.eigenvalues.size() > 1 ? std::abs(t.eigenvalues[1]) : 0.0;
  if (!cert.is_mixing) {
    cert.rate = 0.0;
    return cert;
  }
  // D = L minus the rank-one projection onto the fixed-point pair
  // (right eigenvector vec(1), left eigenvector vec(rho)).
  VectorXcd one = vec(MatrixXcd::Identity(k, k));
  VectorXcd rho = vec(state.fixed_point());
  MatrixXcd d = t.matrix - one * rho.adjoint();
  const double sqrt_k = std::sqrt(static_cast<double>(k));
  std::vector<double> norms;
  // Start from I - P: the n = 0 deviation A - psi(A) 1 applies the oblique
  // spectral projection, whose norm exceeds 1 unless rho is maximally mixed.
  // For n >= 1 the recursion reproduces D^n exactly since D P = 0.
  MatrixXcd power =
      MatrixXcd::Identity(k * k, k * k) - one * rho.adjoint();
  double peak = 0.0;
  for (int n = 0; n <= cert.horizon; ++n) {
    norms.push_back(operator_norm(power));
    peak = std::max(peak, norms.back());
    power = d * power;
  }
  if (peak <= 1.0 + 1e-12 && cert.slem < 1e-14) {
    cert.slem = 0.0;
    cert.rate = std::numeric_limits<double>::infinity();
    cert.prefactor = sqrt_k;
    return cert;
  }
  cert.rate = -std::log(cert.slem);
  double ratio = 0.0;
  for (int n = 0; n <= cert.horizon; ++n)
    ratio = std::max(ratio, norms[n] / std::pow(cert.slem, n));
  cert.prefactor = sqrt_k * ratio;
  return cert;
}

int fcs_rank_probe(const StateFunctional& state, int k_left, int k_right,
                   double rel_threshold) {
  if (k_left < 1 || k_right < 1)
    throw std::invalid_argument("fcs_rank_probe: window sizes must be >= 1");
  const int d = state.site_dim();
  const std::int64_t nl = pow_dim(d, k_left) * pow_dim(d, k_left);
  const std::int64_t nr = pow_dim(d, k_right) * pow_dim(d, k_right);
  if (nl > 4096 || nr > 4096)
    throw WindowCapError("fcs_rank_probe: window too large for a dense basis");
  auto units = [d](int sites, std::int64_t index, const Interval& support) {
    const std::int64_t dim = pow_dim(d, sites);
    MatrixXcd m = MatrixXcd::Zero(dim, dim);
    m(index / dim, index % dim) = 1.0;
    return LocalOperator(support, std::move(m), d);
  };
  const Interval left(0, k_left - 1);
  const Interval right(k_left, k_left + k_right - 1);
  // Cross-correlation matrix phi(a_i b_j) over matrix units of the two
  // adjacent windows; its rank is the dimension of the functional span.
  MatrixXcd gram(nl, nr);
  for (std::int64_t i = 0; i < nl; ++i) {
    LocalOperator a = units(k_left, i, left);
    for (std::int64_t j = 0; j < nr; ++j)
      gram(i, j) = state.expect(multiply(a, units(k_right, j, right)));
  }
  Eigen::JacobiSVD<MatrixXcd> svd(gram);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] <= 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] >= rel_threshold * sv[0]) ++rank;
  return rank;
}

cplx fcs_connected_sum(const FCSState& state, const LocalOperator& fixed,
                       const LocalOperator& moving, bool moving_first) {
  const cplx mf = state.expect(fixed);
  const cplx mm = state.expect(moving);
  cplx total = 0.0;
  const int k_sep = fixed.support().hi - moving.support().lo + 1;
  for (int k = 1; k < k_sep; ++k) {
    LocalOperator shifted = translate(moving, k);
    LocalOperator prod =
        moving_first ? multiply(shifted, fixed) : multiply(fixed, shifted);
    total += state.expect(prod) - mf * mm;
  }
  MixingCertificate cert = mixing_analysis(state);
  if (!cert.is_mixing)
    throw NoMixingCertificateError(
        "fcs_connected_sum: transfer map is not mixing");
  const int kb = state.bond_dim();
  const int k_start = std::max(1, k_sep);
  const int gap0 = moving.support().lo + k_start - fixed.support().hi - 1;
  MatrixXcd x = state.contract(moving.matrix(), moving.support().length(),
                               MatrixXcd::Identity(kb, kb));
  x -= mm * MatrixXcd::Identity(kb, kb);
  VectorXcd xv = Eigen::Map<const VectorXcd>(x.data(), x.size());
  VectorXcd one = vec(MatrixXcd::Identity(kb, kb));
  VectorXcd rho = vec(state.fixed_point());
  MatrixXcd d = dual_transfer(state).matrix - one * rho.adjoint();
  for (int g = 0; g < gap0; ++g) xv = d * xv;
  // Geometric tail: sum over gaps >= gap0 of D^gap applied to the
  // mean-subtracted boundary operator.
  VectorXcd summed =
      (MatrixXcd::Identity(kb * kb, kb * kb) - d).partialPivLu().solve(xv);
  MatrixXcd b = unvec(summed, kb);
  MatrixXcd y = state.contract(fixed.matrix(), fixed.support().length(), b);
  total += (state.fixed_point() * y).trace();
  return total;
}

FCSSpec FCSSpec::from_json_text(const std::string& text) {
  FCSSpec spec;
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    spec.bond_dim = j.at("bond_dim").get<int>();
    spec.site_dim = j.at("site_dim").get<int>();
    spec.tol = j.value("tol", 1e-12);
    if (spec.bond_dim <= 0 || spec.site_dim <= 0)
      throw ConfigError("FCSSpec: dimensions must be positive");
    const auto& arrays = j.at("kraus");
    for (const auto& flat : arrays) {
      const int k = spec.bond_dim;
      if (static_cast<int>(flat.size()) != 2 * k * k)
        throw ConfigError("FCSSpec: Kraus entry has wrong length");
      MatrixXcd v(k, k);
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) {
          const int base = 2 * (r * k + c);  // row-major re/im pairs
          v(r, c) = cplx(flat[base].get<double>(),
                         flat[base + 1].get<double>());
        }
      spec.kraus.push_back(std::move(v));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("FCSSpec: ") + e.what());
  }
  return spec;
}

std::string FCSSpec::to_json_text() const {
  nlohmann::json j;
  j["bond_dim"] = bond_dim;
  j["site_dim"] = site_dim;
  j["tol"] = tol;
  j["kraus"] = nlohmann::json::array();
  for (const auto& v : kraus) {
    std::vector<double> flat;
    for (int r = 0; r < bond_dim; ++r)
      for (int c = 0; c < bond_dim; ++c) {
        flat.push_back(v(r, c).real());
        flat.push_back(v(r, c).imag());
      }
    j["kraus"].push_back(flat);
  }
  return j.dump(2);
}

}  // namespace fluctlab
