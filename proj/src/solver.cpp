#include "qpd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "qpd/errors.hpp"

namespace qpd {

std::string to_string(EigenMethod m) {
  switch (m) {
    case EigenMethod::Dense:
      return "dense";
    case EigenMethod::Lanczos:
      return "lanczos";
    case EigenMethod::Davidson:
      return "davidson";
    case EigenMethod::Auto:
      break;
  }
  return "auto";
}

std::optional<EigenMethod> parse_eigen_method(std::string_view name) {
  for (auto m : {EigenMethod::Auto, EigenMethod::Dense, EigenMethod::Lanczos, EigenMethod::Davidson}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

void canonicalize_sign(Eigen::VectorXd& v) {
  if (v.size() == 0) return;
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v[arg] < 0.0) v = -v;
}

std::vector<EigenPair> dense_lowest_eigenpairs(const SparseOperator& h, int count) {
  const auto n = static_cast<Eigen::Index>(h.dim());
  const Eigen::Index m = std::min<Eigen::Index>(count, n);
  std::vector<EigenPair> out;
  if (m <= 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.to_dense());
  if (es.info() != Eigen::Success) {
    throw SolverError("dense eigensolver failed", std::numeric_limits<double>::infinity());
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    EigenPair p{es.eigenvalues()[i], es.eigenvectors().col(i)};
    canonicalize_sign(p.vector);
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

void orthogonalize(Eigen::VectorXd& w, const std::vector<Eigen::VectorXd>& against) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& q : against) w -= q.dot(w) * q;
  }
}

struct RitzResult {
  double value = 0.0;
  Eigen::VectorXd vector;
  double residual = std::numeric_limits<double>::infinity();
};

/// Lowest eigenpair of h restricted to the complement of `locked`, by
/// Lanczos with full reorthogonalization and explicit restarts. Ritz pairs
/// come from the full projected matrix, so breakdowns (degenerate spectra)
/// are handled by continuing with a random direction.
RitzResult lanczos_one(const SpMat& h, const std::vector<Eigen::VectorXd>& locked, Eigen::VectorXd start,
                       const EigensolverOptions& opt, std::mt19937_64& rng) {
  const Eigen::Index n = h.rows();
  const int kmax = static_cast<int>(std::min<Eigen::Index>(opt.krylov_dim, n - locked.size()));
  RitzResult best;
  if (kmax <= 0) return best;
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);

  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    orthogonalize(start, locked);
    const double norm = start.norm();
    if (norm == 0.0) return best;
    Eigen::MatrixXd q(n, kmax);
    Eigen::MatrixXd hq(n, kmax);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(kmax, kmax);
    q.col(0) = start / norm;
    double scale = 0.0;

    RitzResult ritz;
    for (int j = 0; j < kmax; ++j) {
      hq.col(j) = h * q.col(j);
      g.block(0, j, j + 1, 1) = q.leftCols(j + 1).transpose() * hq.col(j);
      g.block(j, 0, 1, j + 1) = g.block(0, j, j + 1, 1).transpose();
      scale = std::max(scale, std::abs(g(j, j)));
      const int k = j + 1;
      const bool last = k == kmax;
      Eigen::VectorXd w;
      bool exhausted = false;
      if (!last) {
        w = hq.col(j);
        for (int pass = 0; pass < 2; ++pass) {
          orthogonalize(w, locked);
          w -= q.leftCols(k) * (q.leftCols(k).transpose() * w);
        }
        if (w.norm() <= 1e-10 * std::max(1.0, scale)) {
          // Invariant subspace reached; continue in a fresh direction.
          for (Eigen::Index i = 0; i < n; ++i) w[i] = uniform(rng);
          for (int pass = 0; pass < 2; ++pass) {
            orthogonalize(w, locked);
            w -= q.leftCols(k) * (q.leftCols(k).transpose() * w);
          }
          exhausted = !(w.norm() > 1e-8);
        }
      }
      if (last || exhausted || k % 5 == 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> proj(g.topLeftCorner(k, k));
        const double theta = proj.eigenvalues()[0];
        const Eigen::VectorXd s = proj.eigenvectors().col(0);
        Eigen::VectorXd y = q.leftCols(k) * s;
        const double res = (hq.leftCols(k) * s - theta * y).norm();
        if (res <= opt.tolerance * std::max(1.0, std::abs(theta)) || last || exhausted) {
          ritz.value = theta;
          ritz.vector = std::move(y);
          break;
        }
      }
      q.col(j + 1) = w.normalized();
    }

    orthogonalize(ritz.vector, locked);
    ritz.vector.normalize();
    ritz.value = ritz.vector.dot(h * ritz.vector);
    ritz.residual = (h * ritz.vector - ritz.value * ritz.vector).norm();
    if (ritz.residual < best.residual) best = ritz;
    if (ritz.residual <= opt.tolerance * std::max(1.0, std::abs(ritz.value))) return ritz;
    start = ritz.vector;
  }
  return best;
}

}  // namespace

std::vector<EigenPair> lanczos_lowest_eigenpairs(const SparseOperator& h, int count,
                                                 const EigensolverOptions& options,
                                                 const Eigen::VectorXd* guess) {
  const auto n = static_cast<Eigen::Index>(h.dim());
  const int m = static_cast<int>(std::min<Eigen::Index>(count, n));
  std::vector<EigenPair> out;
  if (m <= 0) return out;
  const SpMat mat = h.to_sparse();
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  auto random_vector = [&] {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(rng);
    return v;
  };

  std::vector<Eigen::VectorXd> locked;
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd start = random_vector();
    if (i == 0 && guess != nullptr && guess->size() == n && guess->norm() > 0.0) {
      start = guess->normalized() + 1e-3 * start.normalized();
    }
    RitzResult r = lanczos_one(mat, locked, std::move(start), options, rng);
    if (!(r.residual <= options.tolerance * std::max(1.0, std::abs(r.value)))) {
      throw SolverError(fmt::format("Lanczos did not converge for eigenpair {} (dimension {})", i, n),
                        r.residual);
    }
    locked.push_back(r.vector);
    out.push_back({r.value, std::move(r.vector)});
  }
  // Locking finds eigenvalues in order up to the tolerance; enforce it.
  std::stable_sort(out.begin(), out.end(),
                   [](const EigenPair& a, const EigenPair& b) { return a.value < b.value; });
  for (auto& p : out) canonicalize_sign(p.vector);
  return out;
}

namespace {

Eigen::VectorXd operator_diagonal(const SparseOperator& h) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(h.dim()));
  for (const auto& e : h.entries()) {
    if (e.row == e.col) d[static_cast<Eigen::Index>(e.row)] = e.value;
  }
  return d;
}

/// Orthonormalizes column `k` of v against its first k columns and `locked`.
/// Returns false when nothing is left.
bool append_orthonormal(Eigen::MatrixXd& v, Eigen::Index k, const Eigen::MatrixXd& locked) {
  auto col = v.col(k);
  const double before = col.norm();
  for (int pass = 0; pass < 2; ++pass) {
    if (locked.cols() > 0) col -= locked * (locked.transpose() * col);
    if (k > 0) col -= v.leftCols(k) * (v.leftCols(k).transpose() * col);
  }
  const double after = col.norm();
  if (!(after > 1e-10 * before) || after == 0.0) return false;
  col /= after;
  return true;
}

struct DavidsonResult {
  double value = 0.0;
  Eigen::VectorXd vector;
  double residual = std::numeric_limits<double>::infinity();
};

DavidsonResult davidson_one(const SpMat& h, const Eigen::VectorXd& diag, const Eigen::MatrixXd& locked,
                            Eigen::VectorXd start, const EigensolverOptions& opt, std::mt19937_64& rng) {
  const Eigen::Index n = h.rows();
  const Eigen::Index free_dim = n - locked.cols();
  const Eigen::Index max_sub = std::max<Eigen::Index>(3, std::min<Eigen::Index>(opt.subspace, free_dim));
  Eigen::MatrixXd v(n, max_sub);
  Eigen::MatrixXd hv(n, max_sub);
  Eigen::MatrixXd t(max_sub, max_sub);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  DavidsonResult best;

  Eigen::Index k = 0;
  auto push = [&](const Eigen::VectorXd& x) {
    v.col(k) = x;
    if (!append_orthonormal(v, k, locked)) {
      for (Eigen::Index i = 0; i < n; ++i) v(i, k) = uniform(rng);
      if (!append_orthonormal(v, k, locked)) return false;
    }
    hv.col(k) = h * v.col(k);
    const auto proj = v.leftCols(k + 1).transpose() * hv.col(k);
    t.block(0, k, k + 1, 1) = proj;
    t.block(k, 0, 1, k + 1) = proj.transpose();
    ++k;
    return true;
  };
  if (!push(start)) return best;

  Eigen::VectorXd previous;
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(t.topLeftCorner(k, k));
    const double theta = small.eigenvalues()[0];
    const Eigen::VectorXd s = small.eigenvectors().col(0);
    Eigen::VectorXd u = v.leftCols(k) * s;
    Eigen::VectorXd r = hv.leftCols(k) * s - theta * u;
    const double rnorm = r.norm();
    if (rnorm < best.residual) best = {theta, u, rnorm};
    if (rnorm <= opt.tolerance * std::max(1.0, std::abs(theta))) break;
    if (k == free_dim) break;  // the search space is the whole complement

    // Olsen correction: t = M^-1 (r - eps u) with M = diag(H) - theta.
    Eigen::VectorXd minv(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double d = diag[i] - theta;
      if (std::abs(d) < 1e-8) d = d < 0 ? -1e-8 : 1e-8;
      minv[i] = 1.0 / d;
    }
    const Eigen::VectorXd mr = minv.cwiseProduct(r);
    const Eigen::VectorXd mu = minv.cwiseProduct(u);
    const double denom = u.dot(mu);
    Eigen::VectorXd corr = std::abs(denom) > 1e-300 ? Eigen::VectorXd(mr - (u.dot(mr) / denom) * mu) : mr;

    if (k == max_sub) {
      // Thick restart on the current and previous Ritz vectors.
      Eigen::MatrixXd keep(n, 2);
      keep.col(0) = u;
      keep.col(1) = previous.size() == n ? previous : Eigen::VectorXd::Zero(n);
      k = 0;
      push(keep.col(0));
      if (keep.col(1).squaredNorm() > 0.0) {
        v.col(k) = keep.col(1);
        if (append_orthonormal(v, k, locked)) {
          hv.col(k) = h * v.col(k);
          const auto proj = v.leftCols(k + 1).transpose() * hv.col(k);
          t.block(0, k, k + 1, 1) = proj;
          t.block(k, 0, 1, k + 1) = proj.transpose();
          ++k;
        }
      }
    }
    previous = u;
    if (!push(corr)) break;
  }
  if (best.vector.size() == n) {
    best.vector.normalize();
    best.value = best.vector.dot(h * best.vector);
    best.residual = (h * best.vector - best.value * best.vector).norm();
  }
  return best;
}

}  // namespace

std::vector<EigenPair> davidson_lowest_eigenpairs(const SparseOperator& h, int count,
                                                  const EigensolverOptions& options,
                                                  const Eigen::VectorXd* guess) {
  const auto n = static_cast<Eigen::Index>(h.dim());
  const int m = static_cast<int>(std::min<Eigen::Index>(count, n));
  std::vector<EigenPair> out;
  if (m <= 0) return out;
  const SpMat mat = h.to_sparse();
  const Eigen::VectorXd diag = operator_diagonal(h);
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);

  // Diagonal entries in ascending order seed the states without a guess.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return diag[a] < diag[b]; });

  Eigen::MatrixXd locked(n, 0);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd noise(n);
    for (Eigen::Index j = 0; j < n; ++j) noise[j] = uniform(rng);
    Eigen::VectorXd start;
    if (i == 0 && guess != nullptr && guess->size() == n && guess->norm() > 0.0) {
      start = guess->normalized() + 1e-3 * noise.normalized();
    } else {
      start = Eigen::VectorXd::Zero(n);
      start[order[static_cast<std::size_t>(i)]] = 1.0;
      start += 1e-3 * noise.normalized();
    }
    DavidsonResult r = davidson_one(mat, diag, locked, std::move(start), options, rng);
    if (!(r.residual <= options.tolerance * std::max(1.0, std::abs(r.value)))) {
      throw SolverError(fmt::format("Davidson did not converge for eigenpair {} (dimension {})", i, n),
                        r.residual);
    }
    locked.conservativeResize(n, locked.cols() + 1);
    locked.col(locked.cols() - 1) = r.vector;
    out.push_back({r.value, std::move(r.vector)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const EigenPair& a, const EigenPair& b) { return a.value < b.value; });
  for (auto& p : out) canonicalize_sign(p.vector);
  return out;
}

std::vector<EigenPair> lowest_eigenpairs(const SparseOperator& h, int count,
                                         const EigensolverOptions& options,
                                         const Eigen::VectorXd* guess) {
  if (count < 1) throw DomainError("eigenpair count must be positive");
  if (static_cast<std::size_t>(count) > h.dim()) throw DomainError("more eigenpairs requested than the dimension");
  switch (options.method) {
    case EigenMethod::Dense:
      return dense_lowest_eigenpairs(h, count);
    case EigenMethod::Lanczos:
      return lanczos_lowest_eigenpairs(h, count, options, guess);
    case EigenMethod::Davidson:
      return davidson_lowest_eigenpairs(h, count, options, guess);
    case EigenMethod::Auto:
      break;
  }
  if (h.dim() <= options.dense_threshold || static_cast<std::size_t>(count) * 4 >= h.dim()) {
    return dense_lowest_eigenpairs(h, count);
  }
  return davidson_lowest_eigenpairs(h, count, options, guess);
}

Eigen::VectorXd embed(const GroundSolution& from, const SectorBasis& into) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(into.size()));
  if (from.empty()) return out;
  if (from.basis.get() == &into) return from.vector;
  for (std::size_t i = 0; i < from.basis->size(); ++i) {
    auto t = into.find(from.basis->photons(i), from.basis->populations(i));
    if (t) out[static_cast<Eigen::Index>(*t)] = from.vector[static_cast<Eigen::Index>(i)];
  }
  return out;
}

double overlap(const GroundSolution& a, const GroundSolution& b) {
  if (a.empty() || b.empty()) return 0.0;
  if (a.basis == b.basis) return a.vector.dot(b.vector);
  const GroundSolution& small = a.basis->size() <= b.basis->size() ? a : b;
  const GroundSolution& large = &small == &a ? b : a;
  double sum = 0.0;
  for (std::size_t i = 0; i < small.basis->size(); ++i) {
    auto t = large.basis->find(small.basis->photons(i), small.basis->populations(i));
    if (t) {
      sum += small.vector[static_cast<Eigen::Index>(i)] * large.vector[static_cast<Eigen::Index>(*t)];
    }
  }
  return sum;
}

GroundStateSolver::GroundStateSolver(ModelSpec spec, SolverOptions options)
    : spec_(std::move(spec)),
      symmetry_(symmetry_generators(spec_.topology(), spec_.num_levels(), spec_.num_modes())),
      options_(options) {
  if (options_.convergence.step < 1) throw DomainError("cutoff step must be positive");
  if (options_.start_cutoff < 0) throw DomainError("start cutoff must be non-negative");
}

std::shared_ptr<const SectorBasis> GroundStateSolver::basis(const BlockLabel& label,
                                                            const Cutoff& cutoff) const {
  if (static_cast<int>(cutoff.size()) != spec_.num_modes()) {
    throw DomainError("cutoff size does not match the number of modes");
  }
  Cutoff effective = cutoff;
  if (const auto* key = std::get_if<SectorKey>(&label)) {
    effective = sector_photon_bound(symmetry_.generators, *key, cutoff);
  }
  auto cache_key = std::make_pair(label, effective);
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(cache_key); it != cache_.end()) return it->second;
  }
  std::shared_ptr<const SectorBasis> made;
  if (const auto* key = std::get_if<SectorKey>(&label)) {
    made = std::make_shared<const SectorBasis>(
        enumerate_rwa_sector(spec_, symmetry_.generators, *key, effective));
  } else if (const auto* sigma = std::get_if<ParityKey>(&label)) {
    made = std::make_shared<const SectorBasis>(
        enumerate_parity_basis(spec_, symmetry_.generators, *sigma, std::nullopt, effective));
  } else {
    made = std::make_shared<const SectorBasis>(
        enumerate_truncated_basis(spec_, symmetry_.generators, effective));
  }
  std::lock_guard lock(cache_mutex_);
  auto [it, inserted] = cache_.emplace(cache_key, made);
  if (inserted) {
    cache_order_.push_back(cache_key);
    while (cache_order_.size() > std::max<std::size_t>(options_.basis_cache_size, 1)) {
      cache_.erase(cache_order_.front());
      cache_order_.erase(cache_order_.begin());
    }
  }
  return it->second;
}

GroundSolution GroundStateSolver::solve_block(const CouplingPoint& point, Model model,
                                              const BlockLabel& label, const Cutoff& cutoff,
                                              int count, const Eigen::VectorXd* guess) const {
  GroundSolution sol;
  sol.label = label;
  sol.model = model;
  sol.cutoff = cutoff;
  sol.basis = basis(label, cutoff);
  if (sol.basis->empty()) {
    sol.converged = true;
    return sol;
  }
  const SparseOperator h = build_hamiltonian(*sol.basis, spec_, point, model);
  const int m = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(count), sol.basis->size()));
  auto pairs = lowest_eigenpairs(h, m, options_.eigen, guess);
  sol.energy = pairs.front().value;
  sol.vector = std::move(pairs.front().vector);
  for (std::size_t i = 1; i < pairs.size(); ++i) sol.excited.push_back(pairs[i].value);
  return sol;
}

namespace {

/// Modes whose two highest allowed photon numbers carry weight above `tol`.
std::vector<bool> modes_to_grow(const GroundSolution& sol, double tol) {
  const int modes = sol.basis->modes();
  std::vector<double> tail(modes, 0.0);
  for (std::size_t i = 0; i < sol.basis->size(); ++i) {
    const double w = sol.vector[static_cast<Eigen::Index>(i)] * sol.vector[static_cast<Eigen::Index>(i)];
    const auto nu = sol.basis->photons(i);
    for (int s = 0; s < modes; ++s) {
      if (nu[s] >= sol.cutoff[s] - 1) tail[s] += w;
    }
  }
  std::vector<bool> grow(modes);
  bool any = false;
  for (int s = 0; s < modes; ++s) {
    grow[s] = tail[s] > tol;
    any = any || grow[s];
  }
  if (!any) std::fill(grow.begin(), grow.end(), true);
  return grow;
}

}  // namespace

GroundSolution GroundStateSolver::converge_cutoff(const CouplingPoint& point, Model model,
                                                  const BlockLabel& label, const Cutoff& start,
                                                  int count, const GroundSolution* warm) const {
  const auto& crit = options_.convergence;
  Cutoff cut = start;
  for (int& c : cut) c = std::min(c, crit.max_cutoff);
  GroundSolution sol;
  if (warm != nullptr && !warm->empty()) {
    const Eigen::VectorXd guess = embed(*warm, *basis(label, cut));
    sol = solve_block(point, model, label, cut, count, &guess);
  } else {
    sol = solve_block(point, model, label, cut, count);
  }
  if (sol.empty()) return sol;

  while (true) {
    const auto grow = modes_to_grow(sol, crit.tail_tolerance);
    Cutoff next = cut;
    bool over = false;
    for (std::size_t s = 0; s < next.size(); ++s) {
      if (grow[s]) next[s] += crit.step;
      over = over || next[s] > crit.max_cutoff;
    }
    if (over) {
      throw SolverError(fmt::format("photon cutoff exceeded {} in block {}", crit.max_cutoff,
                                    to_string(label)),
                        std::abs(sol.energy));
    }
    auto larger = basis(label, next);
    if (larger->size() == sol.basis->size()) {
      sol.converged = true;
      return sol;
    }
    const Eigen::VectorXd guess = embed(sol, *larger);
    GroundSolution grown = solve_block(point, model, label, next, count, &guess);
    const double f = overlap(sol, grown);
    const double infidelity = 1.0 - f * f;
    const double de = std::abs(grown.energy - sol.energy);
    if (infidelity <= crit.fidelity_tolerance && de <= crit.energy_tolerance) {
      grown.converged = true;
      return grown;
    }
    cut = std::move(next);
    sol = std::move(grown);
  }
}

Cutoff GroundStateSolver::start_cutoff(const BlockLabel& label) const {
  const auto& crit = options_.convergence;
  Cutoff start(spec_.num_modes(), std::min(options_.start_cutoff, crit.max_cutoff));
  if (const auto* key = std::get_if<SectorKey>(&label)) {
    // Sectors bounded by their own constants of motion need no truncation.
    Cutoff bound = sector_photon_bound(symmetry_.generators, *key,
                                       Cutoff(spec_.num_modes(), crit.max_cutoff));
    for (int s = 0; s < spec_.num_modes(); ++s) {
      if (bound[s] < crit.max_cutoff) start[s] = bound[s];
    }
  }
  return start;
}

GroundResult GroundStateSolver::ground_over_blocks(const CouplingPoint& point, Model model,
                                                   std::span<const BlockLabel> labels,
                                                   const WarmStart* warm, int excited) const {
  if (labels.empty()) throw DomainError("no symmetry blocks given");
  if (excited < 0) throw DomainError("excited-state count must be non-negative");
  GroundResult result;
  std::vector<GroundSolution> solutions;
  for (const auto& label : labels) {
    Cutoff start = start_cutoff(label);
    const GroundSolution* seed = nullptr;
    if (warm != nullptr) {
      if (auto it = warm->find(label); it != warm->end() && !it->second.empty()) {
        seed = &it->second;
        if (!std::holds_alternative<SectorKey>(label)) {
          for (std::size_t s = 0; s < start.size(); ++s) {
            start[s] = std::max(start[s], seed->cutoff[s] - options_.convergence.step);
          }
        }
      }
    }
    GroundSolution sol = converge_cutoff(point, model, label, start, excited + 1, seed);
    if (sol.empty()) continue;
    solutions.push_back(std::move(sol));
  }
  if (solutions.empty()) {
    throw SolverError("every symmetry block is empty at this cutoff",
                      std::numeric_limits<double>::infinity());
  }
  refine_near_ties(point, model, solutions, excited + 1);
  double emin = solutions.front().energy;
  for (const auto& s : solutions) emin = std::min(emin, s.energy);
  result.blocks.clear();
  result.levels.clear();
  for (const auto& sol : solutions) {
    result.blocks.push_back({sol.label, sol.energy, sol.cutoff, sol.basis->size()});
    result.levels.push_back({sol.energy, sol.label});
    for (double e : sol.excited) result.levels.push_back({e, sol.label});
  }
  const double tol = options_.degeneracy_tolerance;
  std::size_t winner = solutions.size();
  for (std::size_t i = 0; i < solutions.size(); ++i) {
    if (solutions[i].energy - emin <= tol) {
      result.tied.push_back(solutions[i].label);
      if (winner == solutions.size() || solutions[i].label < solutions[winner].label) winner = i;
    }
  }
  std::sort(result.tied.begin(), result.tied.end());
  std::stable_sort(result.levels.begin(), result.levels.end(),
                   [](const SpectrumLevel& a, const SpectrumLevel& b) { return a.energy < b.energy; });
  result.degenerate = result.tied.size() > 1 ||
                      (result.levels.size() > 1 && result.levels[1].energy - result.levels[0].energy <= tol);
  result.ground = solutions[winner];
  result.states = std::move(solutions);
  return result;
}

void GroundStateSolver::refine_near_ties(const CouplingPoint& point, Model model,
                                         std::vector<GroundSolution>& solutions, int count) const {
  // Blocks converged at different cutoffs carry truncation errors up to the
  // energy tolerance; close contenders are compared at a common cutoff.
  double emin = std::numeric_limits<double>::infinity();
  for (const auto& s : solutions) emin = std::min(emin, s.energy);
  std::vector<std::size_t> close;
  for (std::size_t i = 0; i < solutions.size(); ++i) {
    if (solutions[i].energy - emin <= options_.convergence.energy_tolerance) close.push_back(i);
  }
  if (close.size() < 2) return;
  Cutoff common = solutions[close.front()].cutoff;
  bool differ = false;
  for (auto i : close) {
    if (std::holds_alternative<SectorKey>(solutions[i].label)) return;
    for (std::size_t s = 0; s < common.size(); ++s) {
      differ = differ || solutions[i].cutoff[s] != common[s];
      common[s] = std::max(common[s], solutions[i].cutoff[s]);
    }
  }
  if (!differ) return;
  for (auto i : close) {
    auto& sol = solutions[i];
    if (sol.cutoff == common) continue;
    const Eigen::VectorXd guess = embed(sol, *basis(sol.label, common));
    GroundSolution refined = solve_block(point, model, sol.label, common, count, &guess);
    refined.converged = sol.converged;
    sol = std::move(refined);
  }
}

WarmStart warm_start_from(const GroundResult& result) {
  WarmStart warm;
  for (const auto& s : result.states) warm.emplace(s.label, s);
  return warm;
}

std::vector<BlockLabel> GroundStateSolver::parity_labels() const {
  std::vector<BlockLabel> out;
  for (auto& p : all_parity_keys(symmetry_.zeta0)) out.emplace_back(std::move(p));
  return out;
}

std::vector<BlockLabel> GroundStateSolver::sector_labels(int k1max, int k2max, bool full_box) const {
  if (k1max < 0 || k2max < 0) throw DomainError("sector box bounds must be non-negative");
  std::vector<BlockLabel> out;
  const auto config = spec_.configuration();
  if (config && !full_box) {
    for (auto& k : gtcm_candidate_sectors(*config, k1max, k2max, spec_.atoms())) out.emplace_back(std::move(k));
    return out;
  }
  if (symmetry_.zeta0 != 2) {
    throw UnsupportedError("sector box scans need exactly two constants of motion");
  }
  for (int a = 0; a <= k1max; ++a) {
    for (int b = 0; b <= k2max; ++b) out.emplace_back(SectorKey{{a, b}});
  }
  return out;
}

}  // namespace qpd
