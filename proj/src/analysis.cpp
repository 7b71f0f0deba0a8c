#include "gsmp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gsmp {
namespace {

using Eigen::MatrixXd;
using Eigen::MatrixXcd;
using Eigen::VectorXd;
using Eigen::VectorXcd;
using cplx = std::complex<double>;

constexpr double kBreakdown = 1e-13;

// Three-term recurrence with full reorthogonalization (two Gram-Schmidt
// sweeps per step) on a dense symmetric matrix.  Produces n_alphas diagonal
// and n_betas off-diagonal coefficients, n_betas in {n_alphas-1, n_alphas}.
void lanczos_chain(const MatrixXd& A, const VectorXd& v0, int n_alphas, int n_betas,
                   VectorXd& alphas, VectorXd& betas) {
  const Eigen::Index dim = A.rows();
  alphas.resize(n_alphas);
  betas.resize(n_betas);
  MatrixXd basis(dim, n_alphas);
  basis.col(0) = v0;
  VectorXd work(dim);
  for (int k = 0; k < n_alphas; ++k) {
    work.noalias() = A * basis.col(k);
    alphas(k) = basis.col(k).dot(work);
    work -= alphas(k) * basis.col(k);
    if (k > 0) work -= betas(k - 1) * basis.col(k - 1);
    for (int pass = 0; pass < 2; ++pass) {
      const auto span = basis.leftCols(k + 1);
      work -= span * (span.transpose() * work);
    }
    if (k < n_betas) {
      const double beta = work.norm();
      if (beta < kBreakdown)
        throw std::runtime_error("lanczos_F: recurrence breakdown at step " +
                                 std::to_string(k + 1) +
                                 " (truncation is not cyclic to this depth)");
      betas(k) = beta;
      if (k + 1 < n_alphas) basis.col(k + 1) = work / beta;
    }
  }
}

// Plus-side dense restriction (blocks 0..t_hi) and its cyclic vector.
MatrixXd plus_restriction(const GsmpWindow& w, VectorXd& v0, double& a0) {
  const int bs = w.bs();
  MatrixXd Ap = assemble_window(w, 0, w.t_hi);
  const VectorXd& p0 = w.at(0).p;
  a0 = p0.norm();
  if (!(a0 > 0)) throw std::runtime_error("lanczos_F: ||p_0|| vanishes");
  v0 = VectorXd::Zero(Ap.rows());
  v0.segment(0, bs) = p0 / a0;
  return Ap;
}

double band_half(double lo, double hi) { return 0.5 * (hi - lo); }

// Shared spectral-side core: integrate |log sigma| * sqrt(edge distance)
// over the shrunk bands, and the 3/2-moment of the off-set eigenvalues.
KsSpectralTerms spectral_side_core(const std::function<double(double)>& sigma_eps,
                                   const VectorXd& eigenvalues, const IntervalSystem& E,
                                   double eps, double edge_delta, int nodes_per_band,
                                   Exec exec) {
  if (!(eps > 0)) throw std::invalid_argument("ks_spectral_side: eps must be positive");
  if (!(edge_delta > 0))
    throw std::invalid_argument("ks_spectral_side: edge_delta must be positive");
  if (nodes_per_band < 2)
    throw std::invalid_argument("ks_spectral_side: need at least two nodes per band");

  VectorXd t, wq;
  gauss_legendre(nodes_per_band, t, wq);

  struct Seg {
    double mid, half;
  };
  std::vector<Seg> segs;
  for (const auto& band : E.bands()) {
    const double lo = band[0] + edge_delta, hi = band[1] - edge_delta;
    if (hi - lo > 0) segs.push_back({0.5 * (lo + hi), band_half(lo, hi)});
  }

  const std::ptrdiff_t total =
      static_cast<std::ptrdiff_t>(segs.size()) * nodes_per_band;
  std::vector<double> vals(static_cast<size_t>(std::max<std::ptrdiff_t>(total, 0)));
  for_each_index(total, exec, [&](std::ptrdiff_t i) {
    const Seg& s = segs[static_cast<size_t>(i) / nodes_per_band];
    const int m = static_cast<int>(i % nodes_per_band);
    const double x = s.mid + s.half * t(m);
    const double dens = sigma_eps(x);
    vals[static_cast<size_t>(i)] =
        std::abs(std::log(dens)) * std::sqrt(E.dist_to_complement(x));
  });

  KsSpectralTerms out;
  out.eps = eps;
  out.edge_delta = edge_delta;
  for (std::ptrdiff_t i = 0; i < total; ++i) {
    const Seg& s = segs[static_cast<size_t>(i) / nodes_per_band];
    out.ac_term += s.half * wq(i % nodes_per_band) * vals[static_cast<size_t>(i)];
  }
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    const double d = E.dist_to_set(eigenvalues(i));
    if (d > 0) out.ev_term += std::pow(d, 1.5);
  }
  return out;
}

// Backward continued fraction for the (0,0) resolvent entry of the
// tridiagonal matrix with diagonal b[0..L-1] and couplings a[1..L-1].
cplx plus_fraction(const JacobiWindow& J, cplx z, long L) {
  const long off = -J.n_lo;  // array index of n = 0
  cplx m = 1.0 / (J.b[static_cast<size_t>(off + L - 1)] - z);
  for (long k = L - 2; k >= 0; --k) {
    const cplx den = J.b[static_cast<size_t>(off + k)] - z -
                     J.a[static_cast<size_t>(off + k + 1)] *
                         J.a[static_cast<size_t>(off + k + 1)] * m;
    if (std::abs(den) < 1e-290)
      throw std::runtime_error("resolvent_r: z hits the truncation spectrum");
    m = 1.0 / den;
  }
  return m;
}

cplx minus_fraction(const JacobiWindow& J, cplx z, long L) {
  const long off = -J.n_lo;
  const long start = -L;  // lowest index used
  cplx m = 1.0 / (J.b[static_cast<size_t>(off + start)] - z);
  for (long n = start + 1; n <= -1; ++n) {
    const cplx den = J.b[static_cast<size_t>(off + n)] - z -
                     J.a[static_cast<size_t>(off + n)] * J.a[static_cast<size_t>(off + n)] * m;
    if (std::abs(den) < 1e-290)
      throw std::runtime_error("resolvent_r: z hits the truncation spectrum");
    m = 1.0 / den;
  }
  return m;
}

cplx corner_resolvent(const MatrixXd& A, const VectorXd& e, cplx z) {
  MatrixXcd M = (-z) * MatrixXcd::Identity(A.rows(), A.cols());
  M += A.cast<cplx>();
  const VectorXcd x = Eigen::PartialPivLU<MatrixXcd>(M).solve(e.cast<cplx>());
  return e.cast<cplx>().dot(x);  // e is real: plain pairing
}

void require_pole_match(const GsmpWindow& w, const PotentialV& V, const char* who) {
  if (static_cast<int>(w.poles.size()) != V.genus())
    throw std::invalid_argument(std::string(who) + ": pole count mismatch");
  for (size_t k = 0; k < w.poles.size(); ++k)
    if (std::abs(w.poles[k] - V.c[k]) > 1e-12 * (1.0 + std::abs(V.c[k])))
      throw std::invalid_argument(std::string(who) + ": window poles differ from V");
}

}  // namespace

JacobiWindow lanczos_F(const GsmpWindow& w, int d_minus, int d_plus) {
  w.validate();
  if (w.t_lo > -1 || w.t_hi < 0)
    throw std::invalid_argument("lanczos_F: trusted range must cover blocks -1..0");
  if (d_plus < 1) throw std::invalid_argument("lanczos_F: need d_plus >= 1");
  if (d_minus < 0) throw std::invalid_argument("lanczos_F: need d_minus >= 0");
  const int bs = w.bs();
  const long pdim = (w.t_hi + 1) * bs;
  const long mdim = (-w.t_lo) * bs;
  if (2 * static_cast<long>(d_plus) > pdim)
    throw std::invalid_argument("lanczos_F: d_plus exceeds half the plus-side truncation");
  if (2 * static_cast<long>(d_minus) > mdim)
    throw std::invalid_argument("lanczos_F: d_minus exceeds half the minus-side truncation");

  VectorXd v0;
  double a0 = 0.0;
  const MatrixXd Ap = plus_restriction(w, v0, a0);
  VectorXd pa, pb;
  lanczos_chain(Ap, v0, d_plus, d_plus - 1, pa, pb);

  VectorXd ma, mb;
  if (d_minus > 0) {
    const MatrixXd Am = assemble_window(w, w.t_lo, -1);
    VectorXd u0 = VectorXd::Zero(Am.rows());
    u0(Am.rows() - 1) = 1.0;  // e_{-1}: last site of block -1
    lanczos_chain(Am, u0, d_minus, d_minus, ma, mb);
  }

  JacobiWindow J;
  J.n_lo = -static_cast<long>(d_minus);
  const size_t len = static_cast<size_t>(d_minus + d_plus);
  J.a.resize(len);
  J.b.resize(len);
  for (long n = -d_minus; n < d_plus; ++n) {
    const size_t i = static_cast<size_t>(n + d_minus);
    if (n >= 0) {
      J.b[i] = pa(n);
      J.a[i] = (n == 0) ? a0 : pb(n - 1);
    } else {
      J.b[i] = ma(-1 - n);
      J.a[i] = mb(-n - 1);  // beta_{-n} = a(n)
    }
  }
  return J;
}

JacobiWindow lanczos_F(const GsmpWindow& w, int depth) {
  if (depth < 1) throw std::invalid_argument("lanczos_F: depth must be positive");
  return lanczos_F(w, depth - 1, depth);
}

ResolventValue resolvent_r(const JacobiWindow& J, cplx z, int side) {
  if (J.a.size() != J.b.size() || J.a.empty())
    throw std::invalid_argument("resolvent_r: malformed coefficient window");
  ResolventValue out;
  if (side >= 0) {
    if (J.n_lo > 0) throw std::invalid_argument("resolvent_r: window misses n = 0");
    const long L = J.n_hi() + 1;
    if (L < 1) throw std::invalid_argument("resolvent_r: empty plus side");
    out.value = plus_fraction(J, z, L);
    out.trunc_err = std::abs(out.value - plus_fraction(J, z, std::max<long>(1, L / 2)));
  } else {
    if (J.n_lo > -1) throw std::invalid_argument("resolvent_r: window misses n = -1");
    const long L = -J.n_lo;
    out.value = minus_fraction(J, z, L);
    out.trunc_err = std::abs(out.value - minus_fraction(J, z, std::max<long>(1, L / 2)));
  }
  return out;
}

ResolventValue resolvent_r(const GsmpWindow& w, cplx z, int side) {
  w.validate();
  if (w.t_lo > -1 || w.t_hi < 0)
    throw std::invalid_argument("resolvent_r: trusted range must cover blocks -1..0");
  ResolventValue out;
  if (side >= 0) {
    VectorXd v0;
    double a0 = 0.0;
    const MatrixXd Ap = plus_restriction(w, v0, a0);
    out.value = corner_resolvent(Ap, v0, z);
    const long half_hi = w.t_hi / 2;
    GsmpWindow half = w;
    half.t_hi = std::max<long>(0, half_hi);
    VectorXd v0h;
    const MatrixXd Aph = plus_restriction(half, v0h, a0);
    out.trunc_err = std::abs(out.value - corner_resolvent(Aph, v0h, z));
  } else {
    const MatrixXd Am = assemble_window(w, w.t_lo, -1);
    VectorXd e = VectorXd::Zero(Am.rows());
    e(Am.rows() - 1) = 1.0;
    out.value = corner_resolvent(Am, e, z);
    const long half_lo = std::min<long>(-1, w.t_lo / 2);
    const MatrixXd Amh = assemble_window(w, half_lo, -1);
    VectorXd eh = VectorXd::Zero(Amh.rows());
    eh(Amh.rows() - 1) = 1.0;
    out.trunc_err = std::abs(out.value - corner_resolvent(Amh, eh, z));
  }
  return out;
}

double dist_eta(const JacobiWindow& J1, const JacobiWindow& J2, double eta) {
  if (!(eta > 0.0 && eta < 1.0))
    throw std::invalid_argument("dist_eta: eta must lie in (0,1)");
  if (J1.n_lo != J2.n_lo)
    throw std::invalid_argument("dist_eta: windows must share their first index");
  const size_t L = std::min(J1.a.size(), J2.a.size());
  double sum = 0.0, wgt = 1.0;
  const double step = eta * eta;
  for (size_t i = 0; i < L; ++i, wgt *= step) {
    const double da = J1.a[i] - J2.a[i];
    const double db = J1.b[i] - J2.b[i];
    sum += (da * da + db * db) * wgt;
  }
  return std::sqrt(sum);
}

double dist_to_isospectral(const JacobiWindow& J, const std::vector<IsoPoint>& samples,
                           double eta, int n_shifts) {
  if (samples.empty())
    throw std::invalid_argument("dist_to_isospectral: empty sample list");
  if (J.n_lo != 0)
    throw std::invalid_argument("dist_to_isospectral: expected a half-line window (n_lo = 0)");
  if (n_shifts < 1) throw std::invalid_argument("dist_to_isospectral: n_shifts must be >= 1");
  const int len = static_cast<int>(std::min<size_t>(J.a.size(), 48));
  if (len < 1) throw std::invalid_argument("dist_to_isospectral: empty window");

  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  std::string last_err;
  for (const IsoPoint& pt : samples) {
    const int bs = pt.pair.size();
    const long hw = (2 * len + bs - 1) / bs + n_shifts + 2;
    try {
      GsmpWindow w = build_periodic(pt, hw);
      for (int s = 0; s < n_shifts; ++s) {
        if (s > 0) w = flow_J_fast(w);
        const JacobiWindow Js = lanczos_F(w, 0, len);
        best = std::min(best, dist_eta(J, Js, eta));
        any = true;
      }
    } catch (const std::exception& e) {
      last_err = e.what();
    }
  }
  if (!any)
    throw std::runtime_error("dist_to_isospectral: every sample failed (" + last_err + ")");
  return best;
}

KsSummands ks_functional_H(const VBlocks& vb, long j_lo, long j_hi) {
  if (vb.w.empty()) throw std::invalid_argument("ks_functional_H: empty section");
  if (j_lo > j_hi) throw std::invalid_argument("ks_functional_H: empty range");
  if (j_lo < vb.j_lo + 1 || j_hi + 1 > vb.j_hi)
    throw std::invalid_argument("ks_functional_H: range needs couplings j_lo..j_hi+1");
  const int bs = static_cast<int>(vb.w.front().rows());

  auto coupling_terms = [&](long j, double& fro2, double& logdet) {
    const Eigen::MatrixXd& v = vb.vblock(j);
    fro2 = v.squaredNorm();
    logdet = 0.0;
    for (int l = 0; l < bs; ++l) {
      const double d = v(l, l);
      if (!(d > 0))
        throw std::domain_error("ks_functional_H: nonpositive coupling diagonal at block " +
                                std::to_string(j) + ", entry " + std::to_string(l));
      logdet += std::log(d);
    }
  };

  KsSummands out;
  out.j_lo = j_lo;
  out.summand.resize(static_cast<size_t>(j_hi - j_lo + 1));
  out.partial.resize(out.summand.size());

  double fro2_j = 0.0, logdet_j = 0.0;
  coupling_terms(j_lo, fro2_j, logdet_j);
  double run = 0.0;
  for (long j = j_lo; j <= j_hi; ++j) {
    double fro2_n = 0.0, logdet_n = 0.0;
    coupling_terms(j + 1, fro2_n, logdet_n);
    const double wfro2 = vb.wblock(j).squaredNorm();
    const double s =
        0.5 * (fro2_j + wfro2 + fro2_n - 2.0 * bs) - logdet_j - logdet_n;
    const size_t i = static_cast<size_t>(j - j_lo);
    out.summand[i] = s;
    run += s;
    out.partial[i] = run;
    fro2_j = fro2_n;
    logdet_j = logdet_n;
  }
  out.total = run;
  return out;
}

double ks_delta(const GsmpWindow& w, const PotentialV& V) {
  require_pole_match(w, V, "ks_delta");
  if (w.t_lo > -4 || w.t_hi < 2)
    throw std::invalid_argument("ks_delta: trusted range must cover blocks -4..2");
  const GsmpWindow jw = flow_J_fast(w);
  const VBlocks vb = assemble_v_blocks(jw, V, -2, 0);
  const int g = w.genus();
  const double normsq = vb.vblock(-1).col(g).squaredNorm() +
                        vb.wblock(-1).col(g).squaredNorm() +
                        vb.vblock(0).row(g).squaredNorm();
  const double prod = vb.vblock(-1)(g, g) * vb.vblock(0)(g, g);
  if (!(prod > 0))
    throw std::domain_error("ks_delta: nonpositive coupling diagonal after the flow step");
  return 0.5 * normsq - 1.0 - std::log(prod);
}

std::vector<double> ks_delta_series(const FlowTrace& trace, const PotentialV& V) {
  std::vector<double> out;
  for (const GsmpWindow& it : trace.iterates) {
    if (it.t_lo > -4 || it.t_hi < 2) break;
    out.push_back(ks_delta(it, V));
  }
  return out;
}

HsReport hs_residual_report(const VBlocks& vb) {
  const MagicResidual mr = magic_residual(vb);
  HsReport out;
  out.j_lo = mr.j_lo;
  out.per_block = mr.per_block;
  out.partial.resize(out.per_block.size());
  double run = 0.0;
  for (size_t i = 0; i < out.per_block.size(); ++i) {
    run += out.per_block[i];
    out.partial[i] = run;
  }
  out.total = mr.total;
  return out;
}

SpectralData spectral_data(const JacobiWindow& J, int N) {
  if (N < 1) throw std::invalid_argument("spectral_data: N must be positive");
  if (J.n_lo > 0 || J.n_hi() < N - 1)
    throw std::invalid_argument("spectral_data: window misses rows 0..N-1");
  const long off = -J.n_lo;
  VectorXd diag(N), sub(std::max(N - 1, 0));
  for (int n = 0; n < N; ++n) diag(n) = J.b[static_cast<size_t>(off + n)];
  for (int n = 1; n < N; ++n) sub(n - 1) = J.a[static_cast<size_t>(off + n)];
  Eigen::SelfAdjointEigenSolver<MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spectral_data: tridiagonal eigensolver failed");
  SpectralData sd;
  sd.N = N;
  sd.eigenvalues = es.eigenvalues();
  sd.weights = es.eigenvectors().row(0).transpose().cwiseAbs2();
  return sd;
}

SpectralData spectral_data(const GsmpWindow& w, int N) {
  w.validate();
  if (w.t_lo > -1 || w.t_hi < 0)
    throw std::invalid_argument("spectral_data: trusted range must cover blocks -1..0");
  VectorXd v0;
  double a0 = 0.0;
  const MatrixXd Ap = plus_restriction(w, v0, a0);
  if (N < w.bs() || N > Ap.rows())
    throw std::invalid_argument("spectral_data: N outside the assembled plus side");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Ap.topLeftCorner(N, N));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spectral_data: eigensolver failed");
  SpectralData sd;
  sd.N = N;
  sd.eigenvalues = es.eigenvalues();
  sd.weights = (es.eigenvectors().transpose() * v0.head(N)).cwiseAbs2();
  return sd;
}

KsSpectralTerms ks_spectral_side(const JacobiWindow& J, int N, const IntervalSystem& E,
                                 const KsSpectralOptions& opts) {
  if (N < 2) throw std::invalid_argument("ks_spectral_side: N must be >= 2");
  if (J.n_lo > 0 || J.n_hi() < N - 1)
    throw std::invalid_argument("ks_spectral_side: window misses rows 0..N-1");
  const double eps = opts.eps > 0 ? opts.eps : 5.0 / N;
  const double delta = opts.edge_delta > 0 ? opts.edge_delta : 1.0 / std::sqrt(double(N));

  JacobiWindow head;
  head.n_lo = 0;
  const long off = -J.n_lo;
  head.a.assign(J.a.begin() + off, J.a.begin() + off + N);
  head.b.assign(J.b.begin() + off, J.b.begin() + off + N);

  VectorXd diag(N), sub(N - 1);
  for (int n = 0; n < N; ++n) diag(n) = head.b[static_cast<size_t>(n)];
  for (int n = 1; n < N; ++n) sub(n - 1) = head.a[static_cast<size_t>(n)];
  Eigen::SelfAdjointEigenSolver<MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("ks_spectral_side: eigensolver failed");

  auto sigma = [&](double x) {
    return plus_fraction(head, cplx(x, eps), N).imag() / std::numbers::pi;
  };
  return spectral_side_core(sigma, es.eigenvalues(), E, eps, delta, opts.nodes_per_band,
                            opts.exec);
}

KsSpectralTerms ks_spectral_side(const SpectralData& sd, const IntervalSystem& E,
                                 const KsSpectralOptions& opts) {
  const int N = sd.N > 0 ? sd.N : static_cast<int>(sd.eigenvalues.size());
  if (N < 1) throw std::invalid_argument("ks_spectral_side: empty spectral data");
  const double eps = opts.eps > 0 ? opts.eps : 5.0 / N;
  const double delta = opts.edge_delta > 0 ? opts.edge_delta : 1.0 / std::sqrt(double(N));
  auto sigma = [&](double x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < sd.eigenvalues.size(); ++i) {
      const double dx = sd.eigenvalues(i) - x;
      s += sd.weights(i) * eps / (dx * dx + eps * eps);
    }
    return s / std::numbers::pi;
  };
  return spectral_side_core(sigma, sd.eigenvalues, E, eps, delta, opts.nodes_per_band,
                            opts.exec);
}

void gauss_legendre(int n, VectorXd& nodes, VectorXd& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  VectorXd diag = VectorXd::Zero(n), sub(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) sub(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("gauss_legendre: eigensolver failed");
  nodes = es.eigenvalues();
  weights = 2.0 * es.eigenvectors().row(0).transpose().cwiseAbs2();
}

double cauchy_determinant(const std::vector<double>& c, const std::vector<double>& x) {
  if (c.size() != x.size())
    throw std::invalid_argument("cauchy_determinant: size mismatch");
  const size_t n = c.size();
  double num = 1.0, den = 1.0;
  for (size_t j = 0; j < n; ++j)
    for (size_t jp = j + 1; jp < n; ++jp) num *= (c[j] - c[jp]) * (x[jp] - x[j]);
  for (size_t j = 0; j < n; ++j)
    for (size_t k = 0; k < n; ++k) den *= (c[j] - x[k]);
  if (den == 0.0) throw std::domain_error("cauchy_determinant: coincident point and pole");
  return num / den;
}

MatrixDensityResult matrix_density_check(const PotentialV& V, double y,
                                         const std::vector<double>& sigma_values) {
  V.validate();
  if (V.lambda0 != 0.0)
    throw std::invalid_argument("matrix_density_check: needs the pure-pole potential");
  const int g = V.genus();
  if (g < 1) throw std::invalid_argument("matrix_density_check: needs at least one pole");

  MatrixDensityResult out;
  out.preimages = potential_preimage(V, y);
  if (static_cast<int>(out.preimages.size()) != g)
    throw std::runtime_error("matrix_density_check: unexpected preimage count");
  if (static_cast<int>(sigma_values.size()) != g)
    throw std::invalid_argument("matrix_density_check: need one sigma' per preimage");

  for (double xi : out.preimages)
    for (double ck : V.c)
      if (std::abs(xi - ck) < 1e-9 * (1.0 + std::abs(ck)))
        throw std::domain_error("matrix_density_check: preimage at a pole");
  for (double s : sigma_values)
    if (!(s > 0)) throw std::invalid_argument("matrix_density_check: sigma' must be positive");

  MatrixXd M(g, g);
  VectorXd d(g);
  for (int i = 0; i < g; ++i) {
    const double xi = out.preimages[static_cast<size_t>(i)];
    d(i) = sigma_values[static_cast<size_t>(i)] / V.deriv(xi);
    for (int j = 0; j < g; ++j) M(j, i) = 1.0 / (V.c[static_cast<size_t>(j)] - xi);
  }
  const MatrixXd Sigma = M * d.asDiagonal() * M.transpose();
  out.det_sigma = Eigen::FullPivLU<MatrixXd>(Sigma).determinant();

  out.target = 1.0;
  for (double s : sigma_values) out.target *= s;
  for (double lk : V.lambda) out.target /= lk;
  out.residual = std::abs(out.det_sigma - out.target) /
                 std::max(std::abs(out.target), 1e-300);
  return out;
}

CoefficientDiagnostics ks_coefficient_diagnostics(const FlowTrace& trace,
                                                  const PotentialV& V) {
  if (trace.iterates.empty())
    throw std::invalid_argument("ks_coefficient_diagnostics: empty trace");
  require_pole_match(trace.iterates.front(), V, "ks_coefficient_diagnostics");
  const int g = V.genus();

  CoefficientDiagnostics out;
  std::array<double, CoefficientDiagnostics::n_families> run{};
  for (auto& v : out.partial) v.reserve(trace.iterates.size());

  for (const GsmpWindow& it : trace.iterates) {
    const BlockPair& prev = it.at(-1);
    const BlockPair& cur = it.at(0);
    double f0 = 0.0, f1 = 0.0;
    for (int j = 0; j < g; ++j) {
      const double dp = prev.p(j) - cur.p(j);
      const double dq = prev.q(j) - cur.q(j);
      f0 += dp * dp;
      f1 += dq * dq;
    }
    const double e2 = V.lambda0 * cur.p(g) - 1.0;
    const double e3 = V.lambda0 * cur.p.dot(cur.q) + V.c0;
    double f4 = 0.0;
    for (int k = 1; k <= g; ++k) {
      const double dl = lambda_iso(k, cur, it.poles) - V.lambda[static_cast<size_t>(k - 1)];
      f4 += dl * dl;
    }
    const double sq[CoefficientDiagnostics::n_families] = {f0, f1, e2 * e2, e3 * e3, f4};
    for (int f = 0; f < CoefficientDiagnostics::n_families; ++f) {
      run[static_cast<size_t>(f)] += sq[f];
      out.partial[static_cast<size_t>(f)].push_back(run[static_cast<size_t>(f)]);
    }
  }
  for (int f = 0; f < CoefficientDiagnostics::n_families; ++f)
    out.last50_growth[static_cast<size_t>(f)] = tail_growth(out.partial[static_cast<size_t>(f)]);
  return out;
}

double tail_growth(const std::vector<double>& partial, int k) {
  if (k < 1 || partial.size() < static_cast<size_t>(k) + 1) return 0.0;
  const double end = partial.back();
  if (!(end > 0)) return 0.0;
  const double before = partial[partial.size() - 1 - static_cast<size_t>(k)];
  return (end - before) / end;
}

}  // namespace gsmp
