#pragma once

// Generating functions S : R^d x R^d -> R of uniform twist type.
//
// Every built-in family lives in one closed algebra
//
//   S(x, y) = 1/2 v^T M v + sum_j [ a_j cos(2 pi th_j) + b_j sin(2 pi th_j) ] + c.(x - y),
//   v = y - x,  th_j = k_j.x + m_j.v,  k_j, m_j in Z^d,
//
// which is invariant under the diagonal action (x, y) -> (x + r, y + r) of Z^d
// and has closed-form first and second derivatives.

#include "twistkam/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace twistkam {

enum class Family { integrable_quadratic, integrable_convex, standard, coupled_standard, custom_fourier };

const char* to_string(Family family);
Family family_from_string(const std::string& name);

/// One trigonometric term a cos(2 pi th) + b sin(2 pi th), th = k.x + m.(y - x).
struct FourierTerm {
  IVec x_freq;
  IVec v_freq;
  double cos_coeff = 0.0;
  double sin_coeff = 0.0;
};

/// Serializable family descriptor.
///
/// integrable_convex takes Fourier terms in v only (x_freq must be zero);
/// custom_fourier takes arbitrary (x_freq, v_freq) pairs.
struct FamilySpec {
  Family family = Family::integrable_quadratic;
  int dim = 1;
  std::vector<double> M;  // row-major d x d; empty means identity
  double K = 0.0;
  double eps = 0.0;
  std::vector<FourierTerm> fourier;
  std::optional<double> twist_constant_hint;
};

struct DerivativeBundle {
  double value = 0.0;
  Vec d1;   // dS/dx
  Vec d2;   // dS/dy
  Mat d11;  // d2S/dx dx
  Mat d12;  // d2S/dx_i dy_j
  Mat d22;  // d2S/dy dy
};

/// Rigorous lower bound S(x,y) >= alpha + beta |x-y| + gamma |x-y|^2 read off
/// the family algebra (bounded trigonometric part, quadratic core, linear cocycle).
struct CoercivityBound {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  /// Convex nondecreasing minorant of t -> alpha + beta t + gamma t^2 on t >= 0.
  double minorant(double t) const;
};

class GeneratingFunction {
 public:
  explicit GeneratingFunction(FamilySpec spec);

  int dim() const { return dim_; }
  Family family() const { return spec_.family; }
  const FamilySpec& spec() const { return spec_; }
  const Mat& quadratic() const { return M_; }
  const Mat& quadratic_inverse() const { return M_inv_; }
  const Vec& cocycle() const { return cocycle_; }
  const std::vector<FourierTerm>& terms() const { return terms_; }

  double value(const Vec& x, const Vec& y) const;
  DerivativeBundle derivatives(const Vec& x, const Vec& y) const;
  Vec d1(const Vec& x, const Vec& y) const;
  Vec d2(const Vec& x, const Vec& y) const;

  /// S_c(x, y) = S(x, y) + c.(x - y). Second derivatives are unchanged.
  GeneratingFunction twisted(const Vec& c) const;

  CoercivityBound coercivity_bound() const;

 private:
  FamilySpec spec_;
  int dim_;
  Mat M_;
  Mat M_inv_;
  std::vector<FourierTerm> terms_;
  Vec cocycle_;
};

struct CoercivityFit {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  /// max over samples of (alpha + beta t + gamma t^2) - S(x, y), clipped at 0.
  double worst_violation = 0.0;
  /// alpha - worst_violation: the fit shifted into a lower bound on the samples.
  double alpha_lower = 0.0;
};

struct AuditReport {
  int n_samples = 0;
  double periodicity_residual = 0.0;
  double twist_lower_bound = 0.0;  // A_est
  CoercivityFit coercivity;
  bool passed = false;
};

/// Samples periodicity, uniform twist and coercivity. Throws audit_failed when
/// the estimated twist constant is not positive.
AuditReport audit(const GeneratingFunction& S, int n_samples, std::uint64_t seed);

/// Same sampling as audit() but never throws.
AuditReport audit_report(const GeneratingFunction& S, int n_samples, std::uint64_t seed);

/// Builds a family and runs the audit on a default sample set.
GeneratingFunction make_family(const FamilySpec& spec);

/// Convenience constructors for the built-in families.
FamilySpec quadratic_spec(const Mat& M);
FamilySpec standard_spec(double K);
FamilySpec coupled_standard_spec(double K, double eps);

}  // namespace twistkam
