#pragma once

// Slicing sequences, iteration constants and lifespan bounds of the blow-up
// argument on the characteristic line t - z = R.
//
// Everything that grows like (pq)^j is kept in logarithmic form. The
// constants C_j (subcritical) and K_j (critical) are stored normalised,
//
//   logC_scaled[j] = ln(C_j) / (pq)^j,
//
// which stays bounded as j -> infinity, so sequences remain finite for any j.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kglab/fd_sim.hpp"

namespace kglab {

enum class Criticality { Subcritical, Critical, OutsideRange };

struct CriticalityIndex {
  double theta = 0.0;
  Criticality kind = Criticality::Subcritical;
};

/// theta(n, p, q) = 1/(pq - 1) - (n - 1)/2; |theta| <= 1e-14 counts as critical.
CriticalityIndex theta(int n, double p, double q);

std::string to_string(Criticality kind);

/// Constants C, K of the iteration frame
///   U(R+z, z) >= C int_R^z e^{-b(z-y)/2} (R+y)^{-(n-1)(p-1)/2} |V(R+y, y)|^p dy
///   V(R+z, z) >= K int_R^z (R+y)^{-(n-1)(q-1)/2} |U(R+y, y)|^q dy
struct FrameConstants {
  double C = 0.0;
  double K = 0.0;

  /// n = 1 constants from Duhamel's 1/2, I0 >= 1, the bound
  /// e^{-b(t-tau)/2} >= e^{-bR} e^{-b(z-y)/2} on the strip tau in [y-R, y+R],
  /// and Jensen over that strip: C = e^{-bR} (2R)^{1-p} / 2, K = (2R)^{1-q} / 2.
  static FrameConstants one_dimensional(double p, double q, double b, double R);

  /// The same without the e^{-bR} factor: C = (2R)^{1-p} / 2, K = (2R)^{1-q} / 2.
  static FrameConstants one_dimensional_unweighted(double p, double q, double R);

  void validate() const;
};

struct SubcriticalSequences {
  int n = 1;
  double p = 0.0, q = 0.0, pq = 0.0, b = 0.0, R = 0.0, eps = 0.0, M = 0.0;
  double theta = 0.0;
  FrameConstants frame;

  std::vector<double> ell;          ///< l_0 = max{2/(bR), 1}, l_j = 1 + (pq)^{-j}
  std::vector<double> L;            ///< L_j = prod_{k<=j} l_k
  std::vector<double> log_alpha;    ///< ln alpha_j (-inf when alpha_j = 0)
  std::vector<double> log_beta;     ///< ln beta_j  (-inf for j = 0)
  std::vector<double> logC_scaled;  ///< ln(C_j) / (pq)^j
  double L_inf = 0.0;
  double N = 0.0;
  double log_D = 0.0;
  double log_E = 0.0;
  double log_E1 = 0.0;
  int j0 = 0;

  int j_max() const { return static_cast<int>(ell.size()) - 1; }
  double alpha(int j) const;
  double beta(int j) const;
  /// ln C_j; may overflow to -inf/+inf for very large j (use logC_scaled).
  double logC(int j) const;
};

struct CriticalSequences {
  int n = 1;
  double p = 0.0, q = 0.0, pq = 0.0, b = 0.0, R = 0.0, eps = 0.0, M = 0.0;
  FrameConstants frame;

  std::vector<double> Lambda;       ///< 1 + (4/(bR)) (2 - 2^{-j})
  std::vector<double> log_gamma;    ///< ln gamma_j (-inf for j = 0)
  std::vector<double> logK_scaled;  ///< ln(K_j) / (pq)^j
  double Lambda_inf = 0.0;
  double log_Dtilde = 0.0;
  /// Et with the per-step factor (2^{2q} pq)^{-j} produced by the K_j recursion.
  double log_Etilde = 0.0;
  int j1 = 0;
  /// Et and j1 written with (2^q pq) in place of (2^{2q} pq); kept for
  /// comparison only, the K_j recursion does not satisfy the resulting bound.
  double log_Etilde_printed = 0.0;
  int j1_printed = 0;

  int j_max() const { return static_cast<int>(Lambda.size()) - 1; }
  double gamma(int j) const;
  double logK(int j) const;
};

/// Requires b^2 >= 4 m2 and theta > 0 (theta = 0 is accepted as well so that
/// the subcritical machinery can be inspected on the critical curve).
SubcriticalSequences subcritical_sequences(const ModelParams& params, double M,
                                           const FrameConstants& frame, int j_max = 200);

/// Requires b^2 >= 4 m2 and theta = 0.
CriticalSequences critical_sequences(const ModelParams& params, double M,
                                     const FrameConstants& frame, int j_max = 200);

/// ln of C_j (R+z)^{-alpha_j} (z - L_j R)^{beta_j} for z >= L_j R (z >= R when
/// j = 0); -inf on the slice boundary.
double log_lower_bound_envelope(double z, int j, const SubcriticalSequences& seqs);
/// ln of K_j (ln(z / (Lambda_j R)))^{gamma_j}; -inf on the slice boundary.
double log_lower_bound_envelope(double z, int j, const CriticalSequences& seqs);

double lower_bound_envelope(double z, int j, const SubcriticalSequences& seqs);
double lower_bound_envelope(double z, int j, const CriticalSequences& seqs);

struct LifespanBound {
  double bound = 0.0;       ///< may be +inf when it overflows; see log_bound
  double log_bound = 0.0;
  double eps0 = 0.0;        ///< smallness threshold of the argument (+inf if none)
  bool hypotheses_met = true;
  /// Constant C of T <= C eps^{-1/theta} (subcritical) or
  /// T <= exp(C eps^{-(pq-1)}) (critical, derived for this eps and below).
  double C = 0.0;
  bool C_derived = false;
};

/// (E1 eps)^{-1/theta}; eps0 = E1^{-1} (2 (L+1) R)^{-theta}.
LifespanBound lifespan_bound(double eps, const SubcriticalSequences& seqs);
/// (2 Lambda R) exp((Et eps)^{-(pq-1)}).
LifespanBound lifespan_bound(double eps, const CriticalSequences& seqs);

struct CheckResult {
  std::string name;
  bool passed = true;
  double max_error = 0.0;
  std::string detail;
};

struct ClosedFormReport {
  std::vector<CheckResult> checks;
  bool passed() const;
};

/// Recursion versus closed form (log domain, 1e-12), both summation
/// identities by direct summation, and the ln C_j >= (pq)^j ln(E eps) bound
/// for j0 <= j <= j_max with the exact recursion.
ClosedFormReport verify_closed_forms(const SubcriticalSequences& seqs, int j_max);
/// Same for gamma_j and ln K_j >= (pq)^j ln(Et eps), j1 <= j <= j_max.
ClosedFormReport verify_closed_forms(const CriticalSequences& seqs, int j_max);

/// Exact rational arithmetic check of alpha_j, beta_j, gamma_j and the two
/// summation identities for rational pq = pq_num / pq_den.
ClosedFormReport verify_closed_forms_exact(int n, std::int64_t pq_num, std::int64_t pq_den,
                                           int j_max);

/// ln( l_j^{-beta_{j-1} pq} ) for j >= 1.
double log_slicing_factor(int j, double pq);

void write_sequences_csv(const SubcriticalSequences& seqs, std::ostream& out);
void write_sequences_csv(const CriticalSequences& seqs, std::ostream& out);

}  // namespace kglab
