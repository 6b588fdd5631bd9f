#include "ddlqr/certificates.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "ddlqr/errors.hpp"
#include "json.hpp"

namespace ddlqr {

namespace {

double lambda_max(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

double lambda_min(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

void require_matches(const Matrix& X1, const Matrix& D0, int T) {
  if (X1.rows() != D0.rows() || X1.cols() != T || D0.cols() != T) {
    throw DimensionMismatch("X1 and D0 must be n x T");
  }
}

}  // namespace

NoiseBound NoiseBound::wgn_rule(double sigma, int T, int N) {
  if (sigma < 0.0 || T < 1 || N < 1) throw PreconditionViolation("invalid WGN bound inputs");
  return {std::sqrt(static_cast<double>(T)) * 1.5 * sigma / std::sqrt(static_cast<double>(N)),
          Rule::Wgn};
}

NoiseBound NoiseBound::bias_rule(double kappa_bar, int T, int n) {
  if (kappa_bar < 0.0 || T < 1 || n < 1) throw PreconditionViolation("invalid bias bound inputs");
  return {std::sqrt(static_cast<double>(T) * n) * kappa_bar, Rule::Bias};
}

NoiseBound NoiseBound::user(double delta) {
  if (!(delta >= 0.0)) throw PreconditionViolation("delta must be nonnegative");
  return {delta, Rule::User};
}

const char* to_string(NoiseBound::Rule rule) {
  switch (rule) {
    case NoiseBound::Rule::Wgn: return "wgn_rule";
    case NoiseBound::Rule::Bias: return "bias_rule";
    case NoiseBound::Rule::User: return "user";
  }
  return "?";
}

Matrix psi(const Matrix& M, const Matrix& X1, const Matrix& D0) {
  if (M.rows() != M.cols()) throw DimensionMismatch("M must be square");
  require_matches(X1, D0, static_cast<int>(M.rows()));
  const Matrix DM = D0 * M;
  const Matrix S = DM * D0.transpose() - X1 * M * D0.transpose() - DM * X1.transpose();
  return 0.5 * (S + S.transpose());
}

Matrix noise_gain(const Matrix& Q, const Matrix& P) {
  Eigen::LLT<Matrix> chol(P);
  if (chol.info() != Eigen::Success) throw PreconditionViolation("P must be positive definite");
  const Matrix M = Q * chol.solve(Q.transpose());
  return 0.5 * (M + M.transpose());
}

double eta_from_lambda(double lambda) {
  if (!std::isfinite(lambda) || lambda >= 1.0) {
    throw CertificateFailure("eigenvalue bound " + std::to_string(lambda) + " is not below 1");
  }
  return lambda <= 0.0 ? 1.0 : 1.0 / (1.0 - lambda);
}

double eta1_from_solution(const SynthesisResult& res, const Matrix& X1, const Matrix& D0) {
  return eta_from_lambda(lambda_max(psi(noise_gain(res.Q, res.P), X1, D0)));
}

double eta2_from_optimal(const Matrix& Qo, const Matrix& Po, const Matrix& X1,
                         const Matrix& D0) {
  return eta_from_lambda(lambda_max(-psi(noise_gain(Qo, Po), X1, D0)));
}

double stability_margin_bound(const SynthesisResult& res, const Matrix& X1,
                              const NoiseBound& bound) {
  const Matrix M = noise_gain(res.Q, res.P);
  if (X1.cols() != M.rows()) throw DimensionMismatch("X1 must have T columns");
  const double d = bound.delta;
  return d * d * spectral_norm(M) + 2.0 * d * spectral_norm(X1 * M);
}

bool data_only_stability_check(const SynthesisResult& res, const Matrix& X1,
                               const NoiseBound& bound, double eta1) {
  if (!(eta1 >= 1.0)) throw PreconditionViolation("eta1 must be >= 1");
  return stability_margin_bound(res, X1, bound) <= 1.0 - 1.0 / eta1;
}

std::optional<double> eta1_from_data(const SynthesisResult& res, const Matrix& X1,
                                     const NoiseBound& bound) {
  const double s = stability_margin_bound(res, X1, bound);
  if (!(s < 1.0)) return std::nullopt;
  return s <= 0.0 ? 1.0 : 1.0 / (1.0 - s);
}

bool data_only_sproc_check(const Matrix& V, const NoiseBound& bound, double mu, const Matrix& R) {
  if (R.cols() != V.rows() || V.rows() != V.cols()) throw DimensionMismatch("R V R' shape");
  const double d = bound.delta;
  const Matrix S = mu * mu * R * V * R.transpose() -
                   d * d * spectral_norm(V) * Matrix::Identity(R.rows(), R.rows());
  const double scale = std::max(1.0, mu * mu * spectral_norm(R * V * R.transpose()));
  return lambda_min(S) >= -1e-12 * scale;
}

bool data_only_sproc_check(const SynthesisResult& res, const NoiseBound& bound, double mu,
                           const Matrix& R) {
  if (!res.V) throw MissingV("result carries no V");
  return data_only_sproc_check(*res.V, bound, mu, R);
}

bool sproc_condition(const Matrix& V, const Matrix& D0, double mu, const Matrix& R,
                     double tol) {
  const Matrix S = mu * mu * R * V * R.transpose() - D0 * V * D0.transpose();
  const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
  return lambda_min(S) >= -tol * scale;
}

Matrix minimum_norm_Go(const Matrix& W0, const Matrix& K) {
  const int rows = static_cast<int>(W0.rows());
  const int n = static_cast<int>(K.cols());
  if (K.rows() + n != rows) throw DimensionMismatch("W0 must have n + m rows");
  if (numeric_rank(W0) != rows) throw RankDeficient("W0 does not have full row rank");
  Matrix KI(rows, n);
  KI << K, Matrix::Identity(n, n);
  return W0.completeOrthogonalDecomposition().solve(KI);
}

IdealOptimum minimum_norm_ideal_optimum(const DiscreteLtiSystem& sys, const DataMatrices& dm) {
  IdealOptimum o;
  const RiccatiSolution ric = solve_dare(sys);
  o.Kopt = ric.Kopt;
  o.Po = controllability_gramian(sys.closed_loop(o.Kopt));
  o.h2_opt = h2_norm_squared(sys, o.Kopt);
  o.Qo = minimum_norm_Go(dm.W0(), o.Kopt) * o.Po;
  o.Vo = noise_gain(o.Qo, o.Po);
  return o;
}

CertificateReport assemble_report(const SynthesisResult& res, const ProgramVariant& variant,
                                  const CertificateContext& ctx) {
  CertificateReport r;
  r.mode = ctx.oracle ? CertificateMode::Oracle : CertificateMode::DataOnly;
  if (res.status != SolverStatus::Optimal || ctx.data == nullptr) return r;
  const DataMatrices& dm = *ctx.data;
  const bool is_sproc = std::holds_alternative<program::SProc>(variant);
  const bool is_soft = std::holds_alternative<program::Soft>(variant);
  const bool is_model = std::holds_alternative<program::ModelBased>(variant);
  if (is_model) return r;

  const double h2_bound = res.P.trace() + res.L.trace();
  if (ctx.bound) {
    if (is_sproc) {
      const auto& sp = std::get<program::SProc>(variant);
      if (res.V) {
        r.sproc_check = data_only_sproc_check(*res.V, *ctx.bound, sp.mu, sp.R);
        if (*r.sproc_check) {
          r.eta1_data = sp.eta1;
          r.performance_bound = sp.eta1 * h2_bound;
        }
      }
    } else {
      r.eta1_data = eta1_from_data(res, dm.X1, *ctx.bound);
      r.stability_check = r.eta1_data.has_value();
      if (r.eta1_data) r.performance_bound = *r.eta1_data * h2_bound;
    }
  }
  if (!ctx.oracle || !dm.D0) return r;

  const Matrix& D0 = *dm.D0;
  if (ctx.bound) r.noise_within_bound = spectral_norm(D0) <= ctx.bound->delta;
  if (is_sproc) {
    const auto& sp = std::get<program::SProc>(variant);
    if (res.V) {
      r.sproc_condition = sproc_condition(*res.V, D0, sp.mu, sp.R);
      if (*r.sproc_condition) r.performance_bound = sp.eta1 * h2_bound;
    }
    return r;
  }
  const double lam = lambda_max(psi(noise_gain(res.Q, res.P), dm.X1, D0));
  r.psi_bar_lambda_max = lam;
  if (lam < 1.0) {
    r.eta1 = eta_from_lambda(lam);
    r.performance_bound = *r.eta1 * h2_bound;
  }
  if (ctx.ideal) {
    try {
      r.eta2 = eta2_from_optimal(ctx.ideal->Qo, ctx.ideal->Po, dm.X1, D0);
    } catch (const CertificateFailure&) {
    }
  }
  if (r.eta1 && r.eta2) {
    const double base = *r.eta1 * *r.eta2 - 1.0;
    if (is_soft) {
      const double alpha = std::get<program::Soft>(variant).alpha;
      r.eta3 = alpha * *r.eta1 * *r.eta2 * ctx.ideal->Vo.trace() / ctx.ideal->h2_opt;
      r.relative_error_bound = base + *r.eta3;
    } else if (std::holds_alternative<program::Baseline>(variant)) {
      r.relative_error_bound = base;
    }
  }
  return r;
}

std::string to_json(const CertificateReport& report) {
  using nlohmann::json;
  auto opt = [](const auto& v) -> json { return v ? json(*v) : json(nullptr); };
  json j;
  j["mode"] = report.mode == CertificateMode::Oracle ? "oracle" : "data_only";
  j["psi_bar_lambda_max"] = opt(report.psi_bar_lambda_max);
  j["eta1"] = opt(report.eta1);
  j["eta2"] = opt(report.eta2);
  j["eta3"] = opt(report.eta3);
  j["stability_check"] = opt(report.stability_check);
  j["sproc_check"] = opt(report.sproc_check);
  j["eta1_data"] = opt(report.eta1_data);
  j["sproc_condition"] = opt(report.sproc_condition);
  j["noise_within_bound"] = opt(report.noise_within_bound);
  j["performance_bound"] = opt(report.performance_bound);
  j["relative_error_bound"] = opt(report.relative_error_bound);
  return j.dump();
}

}  // namespace ddlqr
