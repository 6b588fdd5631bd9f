#pragma once

#include <optional>
#include <string>

#include "ddlqr/data.hpp"
#include "ddlqr/lti.hpp"
#include "ddlqr/synthesis.hpp"

namespace ddlqr {

/// Spectral-norm bound |D0| <= delta.
struct NoiseBound {
  enum class Rule { Wgn, Bias, User };
  double delta = 0.0;
  Rule rule = Rule::User;

  /// delta = sqrt(T) * 1.5 sigma, divided by sqrt(N) for an N-cycle average.
  static NoiseBound wgn_rule(double sigma, int T, int N = 1);
  /// delta = sqrt(T n) * kappa_bar.
  static NoiseBound bias_rule(double kappa_bar, int T, int n);
  static NoiseBound user(double delta);
};

const char* to_string(NoiseBound::Rule rule);

/// Psi = D0 M D0' - X1 M D0' - D0 M X1', symmetrized.
Matrix psi(const Matrix& M, const Matrix& X1, const Matrix& D0);

/// M = Q P^-1 Q'.
Matrix noise_gain(const Matrix& Q, const Matrix& P);

/// Smallest eta >= 1 with lambda <= 1 - 1/eta; throws CertificateFailure when
/// lambda >= 1.
double eta_from_lambda(double lambda);

/// Tightest eta1 with Psi_bar <= (1 - 1/eta1) I, using the true D0.
double eta1_from_solution(const SynthesisResult& res, const Matrix& X1, const Matrix& D0);

/// Tightest eta2 with -Psi_o <= (1 - 1/eta2) I.
double eta2_from_optimal(const Matrix& Qo, const Matrix& Po, const Matrix& X1,
                         const Matrix& D0);

/// delta^2 |M| + 2 delta |X1 M| (spectral norms).
double stability_margin_bound(const SynthesisResult& res, const Matrix& X1,
                              const NoiseBound& bound);

/// delta^2 |M| + 2 delta |X1 M| <= 1 - 1/eta1.
bool data_only_stability_check(const SynthesisResult& res, const Matrix& X1,
                               const NoiseBound& bound, double eta1);

/// Smallest eta1 accepted by data_only_stability_check, if any.
std::optional<double> eta1_from_data(const SynthesisResult& res, const Matrix& X1,
                                     const NoiseBound& bound);

/// mu^2 R V R' - delta^2 |V| I >= 0.
bool data_only_sproc_check(const Matrix& V, const NoiseBound& bound, double mu, const Matrix& R);
bool data_only_sproc_check(const SynthesisResult& res, const NoiseBound& bound, double mu,
                           const Matrix& R);

/// D0 V D0' <= mu^2 R V R' (needs the true D0).
bool sproc_condition(const Matrix& V, const Matrix& D0, double mu, const Matrix& R,
                     double tol = 1e-9);

/// G_o = pinv(W0) [K; I]. Throws RankDeficient when W0 lacks full row rank.
Matrix minimum_norm_Go(const Matrix& W0, const Matrix& K);

/// Optimal solution of the ideal program built from the true system: K_opt,
/// P_o the closed-loop Gramian, Q_o = G_o P_o with the minimum-norm G_o, and
/// V_o = Q_o P_o^-1 Q_o'.
struct IdealOptimum {
  Matrix Kopt;
  Matrix Po;
  Matrix Qo;
  Matrix Vo;
  double h2_opt = 0.0;
};
IdealOptimum minimum_norm_ideal_optimum(const DiscreteLtiSystem& sys, const DataMatrices& dm);

enum class CertificateMode { DataOnly, Oracle };

/// Fields that could not be computed are left empty.
struct CertificateReport {
  CertificateMode mode = CertificateMode::DataOnly;
  std::optional<double> psi_bar_lambda_max;
  std::optional<double> eta1;
  std::optional<double> eta2;
  std::optional<double> eta3;
  std::optional<bool> stability_check;
  std::optional<bool> sproc_check;
  std::optional<double> eta1_data;        ///< eta1 certified by the data check
  std::optional<bool> sproc_condition;    ///< oracle check of D0 V D0' <= mu^2 R V R'
  std::optional<bool> noise_within_bound; ///< |D0| <= delta
  std::optional<double> performance_bound;
  std::optional<double> relative_error_bound;
};

struct CertificateContext {
  const DataMatrices* data = nullptr;          ///< X1 (and D0 in oracle mode)
  std::optional<NoiseBound> bound;
  std::optional<IdealOptimum> ideal;           ///< oracle only
  bool oracle = false;                         ///< use D0 and `ideal`
};

CertificateReport assemble_report(const SynthesisResult& res, const ProgramVariant& variant,
                                  const CertificateContext& ctx);

std::string to_json(const CertificateReport& report);

}  // namespace ddlqr
