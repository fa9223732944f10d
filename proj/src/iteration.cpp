#include "kglab/iteration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>

#include "kglab/errors.hpp"

namespace kglab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// ln((pq)^j - 1) without forming (pq)^j.
double log_pow_minus_one(int j, double log_pq) {
  if (j == 0) return kNegInf;
  const double jl = j * log_pq;
  return jl + std::log1p(-std::exp(-jl));
}

// ln(ln(1 + (pq)^{-j})) for j >= 1.
double log_log_ell(int j, double log_pq) {
  const double lx = -j * log_pq;
  if (lx < -40.0) return lx - 0.5 * std::exp(lx);
  return std::log(std::log1p(std::exp(lx)));
}

// ln(e^a + e^b), tolerant of -inf.
double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

void check_common(const ModelParams& params, double M, const FrameConstants& frame, int j_max) {
  params.validate();
  frame.validate();
  if (params.b * params.b < 4.0 * params.m2) {
    throw ConfigError("iteration: the argument requires b^2 >= 4 m2");
  }
  if (!(params.eps > 0.0)) throw ConfigError("iteration: eps must be > 0");
  if (!(M > 0.0)) throw ConfigError("iteration: M must be > 0 (v1 nontrivial)");
  if (j_max < 1) throw ConfigError("iteration: j_max must be >= 1");
}

}  // namespace

CriticalityIndex theta(int n, double p, double q) {
  if (n < 1) throw ConfigError("theta: n must be >= 1");
  if (!(p > 1.0) || !(q > 1.0)) throw ConfigError("theta: p, q must be > 1");
  CriticalityIndex idx;
  idx.theta = 1.0 / (p * q - 1.0) - 0.5 * (n - 1);
  if (std::abs(idx.theta) <= 1e-14) {
    idx.kind = Criticality::Critical;
  } else if (idx.theta > 0.0) {
    idx.kind = Criticality::Subcritical;
  } else {
    idx.kind = Criticality::OutsideRange;
  }
  return idx;
}

std::string to_string(Criticality kind) {
  switch (kind) {
    case Criticality::Subcritical: return "subcritical";
    case Criticality::Critical: return "critical";
    case Criticality::OutsideRange: return "outside-range";
  }
  return "unknown";
}

FrameConstants FrameConstants::one_dimensional(double p, double q, double b, double R) {
  FrameConstants f = one_dimensional_unweighted(p, q, R);
  f.C *= std::exp(-b * R);
  return f;
}

FrameConstants FrameConstants::one_dimensional_unweighted(double p, double q, double R) {
  return {0.5 * std::pow(2.0 * R, 1.0 - p), 0.5 * std::pow(2.0 * R, 1.0 - q)};
}

void FrameConstants::validate() const {
  if (!(C > 0.0) || !(K > 0.0) || !std::isfinite(C) || !std::isfinite(K)) {
    throw ConfigError("FrameConstants: C and K must be finite and > 0");
  }
}

double log_slicing_factor(int j, double pq) {
  if (j < 1) throw DomainError("log_slicing_factor: j must be >= 1");
  const double log_pq = std::log(pq);
  const double log_beta_prev = log_pow_minus_one(j - 1, log_pq) - std::log(pq - 1.0);
  if (log_beta_prev == kNegInf) return 0.0;
  return -std::exp(log_beta_prev + log_pq + log_log_ell(j, log_pq));
}

double SubcriticalSequences::alpha(int j) const { return std::exp(log_alpha.at(j)); }
double SubcriticalSequences::beta(int j) const { return std::exp(log_beta.at(j)); }
double SubcriticalSequences::logC(int j) const {
  return std::exp(j * std::log(pq)) * logC_scaled.at(j);
}
double CriticalSequences::gamma(int j) const { return std::exp(log_gamma.at(j)); }
double CriticalSequences::logK(int j) const {
  return std::exp(j * std::log(pq)) * logK_scaled.at(j);
}

SubcriticalSequences subcritical_sequences(const ModelParams& params, double M,
                                           const FrameConstants& frame, int j_max) {
  check_common(params, M, frame, j_max);
  const CriticalityIndex th = theta(params.n, params.p, params.q);
  if (th.kind == Criticality::OutsideRange) {
    throw ConfigError("subcritical_sequences: theta(n,p,q) < 0 is outside the blow-up range");
  }
  SubcriticalSequences s;
  s.n = params.n;
  s.p = params.p;
  s.q = params.q;
  s.pq = params.p * params.q;
  s.b = params.b;
  s.R = params.R;
  s.eps = params.eps;
  s.M = M;
  s.theta = th.theta;
  s.frame = frame;

  const double pq = s.pq;
  const double log_pq = std::log(pq);
  const double log_pq1 = std::log(pq - 1.0);
  const double q = params.q;
  const std::size_t count = static_cast<std::size_t>(j_max) + 1;

  s.ell.resize(count);
  s.L.resize(count);
  s.log_alpha.resize(count);
  s.log_beta.resize(count);
  s.logC_scaled.resize(count);

  s.ell[0] = std::max(2.0 / (params.b * params.R), 1.0);
  s.L[0] = s.ell[0];
  const double log_half_n1 = params.n > 1 ? std::log(0.5 * (params.n - 1)) : kNegInf;
  for (int j = 0; j <= j_max; ++j) {
    if (j > 0) {
      s.ell[j] = 1.0 + std::exp(-j * log_pq);
      s.L[j] = s.L[j - 1] * s.ell[j];
    }
    const double lpm1 = log_pow_minus_one(j, log_pq);
    s.log_alpha[j] = log_half_n1 == kNegInf ? kNegInf : log_half_n1 + lpm1;
    s.log_beta[j] = lpm1 - log_pq1;
  }

  double log_L = std::log(s.ell[0]);
  for (int k = 1; k < 100000; ++k) {
    const double term = std::log1p(std::exp(-k * log_pq));
    log_L += term;
    if (term < 1e-20) break;
  }
  s.L_inf = std::exp(log_L);

  // N: 0.99 times the smallest l_j^{-beta_{j-1} pq} seen, including the limit.
  double min_factor = -1.0 / (pq - 1.0);
  const int j_big = std::max(j_max, 1000);
  for (int j = 1; j <= j_big; ++j) min_factor = std::min(min_factor, log_slicing_factor(j, pq));
  s.N = 0.99 * std::exp(min_factor);

  const double log_C = std::log(frame.C);
  const double log_K = std::log(frame.K);
  const double log_b = std::log(params.b);
  s.log_D = log_K + q * log_C + std::log(s.N) + q * std::log(2.0 * pq - 1.0) + log_pq1 - q * log_b;
  s.log_E = std::log(M) - (2.0 * q + 1.0) * pq * log_pq / ((pq - 1.0) * (pq - 1.0)) +
            s.log_D / (pq - 1.0);
  s.log_E1 = s.log_E - std::numbers::ln2 / (pq - 1.0);
  const double j0_real = s.log_D / ((2.0 * q + 1.0) * log_pq) - pq / (pq - 1.0);
  s.j0 = j0_real <= 0.0 ? 0 : static_cast<int>(std::ceil(j0_real));

  // ln C_{j+1} = base + pq ln C_j + ln(l_{j+1}^{-beta_j pq}) - 2q(j+1) ln pq - ln(beta_j pq + 1)
  const double base = log_K + q * log_C + q * std::log(2.0 * pq - 1.0) - q * log_b;
  s.logC_scaled[0] = std::log(M) + std::log(params.eps);
  for (int j = 0; j < j_max; ++j) {
    const double step = base + log_slicing_factor(j + 1, pq) - 2.0 * q * (j + 1) * log_pq -
                        s.log_beta[j + 1];
    s.logC_scaled[j + 1] = s.logC_scaled[j] + std::exp(-(j + 1) * log_pq) * step;
  }
  return s;
}

CriticalSequences critical_sequences(const ModelParams& params, double M,
                                     const FrameConstants& frame, int j_max) {
  check_common(params, M, frame, j_max);
  const CriticalityIndex th = theta(params.n, params.p, params.q);
  if (th.kind != Criticality::Critical) {
    throw ConfigError("critical_sequences: requires theta(n,p,q) = 0, got " +
                      std::to_string(th.theta));
  }
  CriticalSequences s;
  s.n = params.n;
  s.p = params.p;
  s.q = params.q;
  s.pq = params.p * params.q;
  s.b = params.b;
  s.R = params.R;
  s.eps = params.eps;
  s.M = M;
  s.frame = frame;

  const double pq = s.pq;
  const double q = params.q;
  const double log_pq = std::log(pq);
  const double log_pq1 = std::log(pq - 1.0);
  const double bR = params.b * params.R;
  const std::size_t count = static_cast<std::size_t>(j_max) + 1;
  s.Lambda.resize(count);
  s.log_gamma.resize(count);
  s.logK_scaled.resize(count);
  for (int j = 0; j <= j_max; ++j) {
    s.Lambda[j] = 1.0 + (4.0 / bR) * (2.0 - std::exp2(-j));
    s.log_gamma[j] = log_pow_minus_one(j, log_pq) - log_pq1;
  }
  s.Lambda_inf = 1.0 + 8.0 / bR;

  const double log_C = std::log(frame.C);
  const double log_K = std::log(frame.K);
  const double log_b = std::log(params.b);
  s.log_Dtilde = 2.0 * q * std::numbers::ln2 + log_K - q * log_b + q * log_C + log_pq1;
  const double log_step = 2.0 * q * std::numbers::ln2 + log_pq;  // ln(2^{2q} pq)
  const double log_step_printed = q * std::numbers::ln2 + log_pq;  // ln(2^q pq)
  const double sq = (pq - 1.0) * (pq - 1.0);
  s.log_Etilde = std::log(M) - pq * log_step / sq + s.log_Dtilde / (pq - 1.0);
  s.log_Etilde_printed = std::log(M) - pq * log_step_printed / sq + s.log_Dtilde / (pq - 1.0);
  const double j1_real = s.log_Dtilde / log_step - pq / (pq - 1.0);
  s.j1 = j1_real <= 0.0 ? 0 : static_cast<int>(std::ceil(j1_real));
  const double j1p_real = s.log_Dtilde / log_step_printed - pq / (pq - 1.0);
  s.j1_printed = j1p_real <= 0.0 ? 0 : static_cast<int>(std::ceil(j1p_real));

  // ln K_{j+1} = base - 2qj ln 2 + pq ln K_j - ln(gamma_j pq + 1)
  const double base = log_K - q * log_b + q * log_C;
  s.logK_scaled[0] = std::log(M) + std::log(params.eps);
  for (int j = 0; j < j_max; ++j) {
    const double step = base - 2.0 * q * j * std::numbers::ln2 - s.log_gamma[j + 1];
    s.logK_scaled[j + 1] = s.logK_scaled[j] + std::exp(-(j + 1) * log_pq) * step;
  }
  return s;
}

double log_lower_bound_envelope(double z, int j, const SubcriticalSequences& seqs) {
  if (j < 0 || j > seqs.j_max()) throw DomainError("lower_bound_envelope: j out of range");
  // j = 0 is the first lower bound, valid on the whole ray z >= R.
  if (j == 0) {
    if (!(z >= seqs.R)) throw DomainError("lower_bound_envelope: z must be >= R");
    return seqs.logC_scaled[0];
  }
  const double edge = seqs.L[j] * seqs.R;
  if (!(z >= edge)) throw DomainError("lower_bound_envelope: z below the slice boundary L_j R");
  if (z == edge) return kNegInf;
  const double log_pq = std::log(seqs.pq);
  const double shrink = -std::expm1(-j * log_pq);  // 1 - (pq)^{-j}
  const double alpha_hat = 0.5 * (seqs.n - 1) * shrink;
  const double beta_hat = shrink / (seqs.pq - 1.0);
  const double bracket = seqs.logC_scaled[j] - alpha_hat * std::log(seqs.R + z) +
                         beta_hat * std::log(z - edge);
  return std::exp(j * log_pq) * bracket;
}

double log_lower_bound_envelope(double z, int j, const CriticalSequences& seqs) {
  if (j < 0 || j > seqs.j_max()) throw DomainError("lower_bound_envelope: j out of range");
  if (j == 0) {
    if (!(z >= seqs.R)) throw DomainError("lower_bound_envelope: z must be >= R");
    return seqs.logK_scaled[0];
  }
  const double edge = seqs.Lambda[j] * seqs.R;
  if (!(z >= edge)) throw DomainError("lower_bound_envelope: z below the slice boundary Lambda_j R");
  if (z == edge) return kNegInf;
  const double log_pq = std::log(seqs.pq);
  const double shrink = -std::expm1(-j * log_pq);
  const double bracket = seqs.logK_scaled[j] +
                         shrink / (seqs.pq - 1.0) * std::log(std::log(z / edge));
  return std::exp(j * log_pq) * bracket;
}

double lower_bound_envelope(double z, int j, const SubcriticalSequences& seqs) {
  return std::exp(log_lower_bound_envelope(z, j, seqs));
}

double lower_bound_envelope(double z, int j, const CriticalSequences& seqs) {
  return std::exp(log_lower_bound_envelope(z, j, seqs));
}

LifespanBound lifespan_bound(double eps, const SubcriticalSequences& seqs) {
  if (!(eps > 0.0)) throw DomainError("lifespan_bound: eps must be > 0");
  if (!(seqs.theta > 0.0)) throw ConfigError("lifespan_bound: subcritical bound needs theta > 0");
  LifespanBound out;
  out.log_bound = -(seqs.log_E1 + std::log(eps)) / seqs.theta;
  out.bound = std::exp(out.log_bound);
  out.eps0 = std::exp(-seqs.log_E1 - seqs.theta * std::log(2.0 * (seqs.L_inf + 1.0) * seqs.R));
  out.hypotheses_met = eps <= out.eps0;
  out.C = std::exp(-seqs.log_E1 / seqs.theta);
  out.C_derived = false;
  return out;
}

LifespanBound lifespan_bound(double eps, const CriticalSequences& seqs) {
  if (!(eps > 0.0)) throw DomainError("lifespan_bound: eps must be > 0");
  LifespanBound out;
  const double k = seqs.pq - 1.0;
  const double log_prefactor = std::log(2.0 * seqs.Lambda_inf * seqs.R);
  const double growth = std::exp(-k * (seqs.log_Etilde + std::log(eps)));
  out.log_bound = log_prefactor + growth;
  out.bound = std::exp(out.log_bound);
  // The smallness condition eps0^{-(pq-1)} >= Et^{pq-1} ln((Lambda+1)/(2 Lambda))
  // has a negative right-hand side, so every eps qualifies.
  out.eps0 = std::numeric_limits<double>::infinity();
  out.hypotheses_met = true;
  // exp(C eps^{-(pq-1)}) dominates the constructive bound for all eps' <= eps.
  out.C = std::exp(-k * seqs.log_Etilde) + std::max(0.0, log_prefactor) * std::pow(eps, k);
  out.C_derived = true;
  return out;
}

bool ClosedFormReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

namespace {

// Float recursion x_{j+1} = c + pq x_j in log form, compared to closed forms.
CheckResult check_affine_recursion(const std::string& name, double log_c, double pq,
                                   const std::vector<double>& closed_logs, int j_max) {
  CheckResult r;
  r.name = name;
  const double log_pq = std::log(pq);
  double rec = kNegInf;  // x_0 = 0
  for (int j = 0; j <= j_max; ++j) {
    if (j > 0) rec = log_add(log_c, log_pq + rec);
    const double closed = closed_logs.at(j);
    double err = 0.0;
    if (closed == kNegInf || rec == kNegInf) {
      err = (closed == rec) ? 0.0 : 1.0;
    } else {
      err = std::abs(rec - closed) / std::max(1.0, std::abs(closed));
    }
    if (err > r.max_error) r.max_error = err;
    if (err > 1e-12 && r.passed) {
      r.passed = false;
      std::ostringstream msg;
      msg << "first mismatch at j=" << j << ": recursion " << rec << " vs closed " << closed;
      r.detail = msg.str();
    }
  }
  if (r.passed) {
    std::ostringstream msg;
    msg << "j <= " << j_max << ", max relative error " << r.max_error;
    r.detail = msg.str();
  }
  return r;
}

// Both summation identities in (pq)^{-j}-scaled form, direct sum vs formula.
CheckResult check_summation_identities(double pq, int j_max) {
  CheckResult r;
  r.name = "summation identities";
  for (int j = 1; j <= j_max; ++j) {
    double weighted = 0.0;
    double plain = 0.0;
    for (int k = 0; k < j; ++k) {
      const double scale = std::pow(pq, k - j);
      weighted += (j - k) * scale;
      plain += scale;
    }
    const double inv = std::pow(pq, -j);
    const double weighted_formula = ((pq - pq * inv) / (pq - 1.0) - j * inv) / (pq - 1.0);
    const double plain_formula = (1.0 - inv) / (pq - 1.0);
    const double err = std::max(std::abs(weighted - weighted_formula) / weighted_formula,
                                std::abs(plain - plain_formula) / plain_formula);
    r.max_error = std::max(r.max_error, err);
    if (err > 1e-12 && r.passed) {
      r.passed = false;
      r.detail = "identity mismatch at j=" + std::to_string(j);
    }
  }
  if (r.passed) r.detail = "direct sums for j <= " + std::to_string(j_max);
  return r;
}

CheckResult check_log_bound(const std::string& name, const std::vector<double>& scaled,
                            double log_target, int j_start, int j_end) {
  CheckResult r;
  r.name = name;
  double worst = std::numeric_limits<double>::infinity();
  for (int j = j_start; j <= j_end; ++j) {
    const double margin = scaled.at(j) - log_target;
    worst = std::min(worst, margin);
    if (!(margin >= 0.0) && r.passed) {
      r.passed = false;
      std::ostringstream msg;
      msg << "bound fails at j=" << j << ": ln(C_j)/(pq)^j = " << scaled[j] << " < " << log_target;
      r.detail = msg.str();
    }
  }
  r.max_error = worst < 0.0 ? -worst : 0.0;
  if (r.passed) {
    std::ostringstream msg;
    msg << "j in [" << j_start << ", " << j_end << "], smallest scaled margin " << worst;
    r.detail = msg.str();
  }
  return r;
}

}  // namespace

ClosedFormReport verify_closed_forms(const SubcriticalSequences& seqs, int j_max) {
  if (j_max > seqs.j_max()) throw ConfigError("verify_closed_forms: j_max exceeds computed range");
  if (j_max < seqs.j0 + 10) throw ConfigError("verify_closed_forms: j_max must be >= j0 + 10");
  ClosedFormReport report;
  const double pq = seqs.pq;
  if (seqs.n > 1) {
    const double log_c = std::log(0.5 * (seqs.n - 1) * (pq - 1.0));
    report.checks.push_back(check_affine_recursion("alpha recursion vs closed form", log_c, pq,
                                                   seqs.log_alpha, j_max));
  } else {
    CheckResult r;
    r.name = "alpha recursion vs closed form";
    for (int j = 0; j <= j_max; ++j) {
      if (seqs.log_alpha[j] != kNegInf) r.passed = false;
    }
    r.detail = "n = 1: alpha_j = 0 for all j";
    report.checks.push_back(r);
  }
  report.checks.push_back(
      check_affine_recursion("beta recursion vs closed form", 0.0, pq, seqs.log_beta, j_max));
  report.checks.push_back(check_summation_identities(pq, j_max));
  report.checks.push_back(check_log_bound("ln C_j >= (pq)^j ln(E eps)", seqs.logC_scaled,
                                          seqs.log_E + std::log(seqs.eps), seqs.j0, j_max));
  return report;
}

ClosedFormReport verify_closed_forms(const CriticalSequences& seqs, int j_max) {
  if (j_max > seqs.j_max()) throw ConfigError("verify_closed_forms: j_max exceeds computed range");
  if (j_max < seqs.j1 + 10) throw ConfigError("verify_closed_forms: j_max must be >= j1 + 10");
  ClosedFormReport report;
  report.checks.push_back(
      check_affine_recursion("gamma recursion vs closed form", 0.0, seqs.pq, seqs.log_gamma, j_max));
  report.checks.push_back(check_summation_identities(seqs.pq, j_max));
  report.checks.push_back(check_log_bound("ln K_j >= (pq)^j ln(Et eps)", seqs.logK_scaled,
                                          seqs.log_Etilde + std::log(seqs.eps), seqs.j1, j_max));
  return report;
}

ClosedFormReport verify_closed_forms_exact(int n, std::int64_t pq_num, std::int64_t pq_den,
                                           int j_max) {
  using boost::multiprecision::cpp_rational;
  if (pq_den <= 0 || pq_num <= pq_den) throw ConfigError("verify_closed_forms_exact: need pq > 1");
  if (n < 1 || j_max < 1) throw ConfigError("verify_closed_forms_exact: need n >= 1, j_max >= 1");
  const cpp_rational pq(pq_num, pq_den);
  const cpp_rational half_n1(n - 1, 2);
  ClosedFormReport report;
  CheckResult alpha{"alpha exact", true, 0.0, ""};
  CheckResult beta{"beta exact", true, 0.0, ""};
  CheckResult gamma{"gamma exact", true, 0.0, ""};
  CheckResult sums{"summation identities exact", true, 0.0, ""};
  cpp_rational a = 0, be = 0, ga = 0;
  cpp_rational power = 1;  // (pq)^j
  for (int j = 0; j <= j_max; ++j) {
    if (j > 0) {
      a = half_n1 * (pq - 1) + pq * a;
      be = 1 + pq * be;
      ga = ga * pq + 1;
      power *= pq;
    }
    const cpp_rational closed_beta = (power - 1) / (pq - 1);
    if (a != half_n1 * (power - 1)) alpha.passed = false;
    if (be != closed_beta) beta.passed = false;
    if (ga != closed_beta) gamma.passed = false;
    if (j >= 1) {
      cpp_rational weighted = 0, plain = 0, pk = 1;
      for (int k = 0; k < j; ++k) {
        weighted += (j - k) * pk;
        plain += pk;
        pk *= pq;
      }
      const cpp_rational weighted_formula = ((power * pq - pq) / (pq - 1) - j) / (pq - 1);
      if (weighted != weighted_formula || plain != closed_beta) sums.passed = false;
    }
  }
  for (CheckResult* c : {&alpha, &beta, &gamma, &sums}) {
    c->max_error = c->passed ? 0.0 : 1.0;
    c->detail = "j <= " + std::to_string(j_max) + ", pq = " + std::to_string(pq_num) + "/" +
                std::to_string(pq_den);
    report.checks.push_back(*c);
  }
  return report;
}

void write_sequences_csv(const SubcriticalSequences& seqs, std::ostream& out) {
  out << "j,ell_j,L_j,alpha_j,beta_j,logC_j\n";
  char line[256];
  for (int j = 0; j <= seqs.j_max(); ++j) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", j, seqs.ell[j],
                  seqs.L[j], seqs.alpha(j), seqs.beta(j), seqs.logC(j));
    out << line;
  }
}

void write_sequences_csv(const CriticalSequences& seqs, std::ostream& out) {
  out << "j,Lambda_j,gamma_j,logK_j\n";
  char line[192];
  for (int j = 0; j <= seqs.j_max(); ++j) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g\n", j, seqs.Lambda[j], seqs.gamma(j),
                  seqs.logK(j));
    out << line;
  }
}

}  // namespace kglab
