#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "daycare/market.hpp"
#include "daycare/matching.hpp"
#include "daycare/utility.hpp"

namespace daycare {

/// Feasible tuples for one decision unit and the one it chose. A unit is a
/// family, or a single applying child when `child` is set (individual model).
struct ChoiceSet {
  FamilyId family;
  std::size_t family_index = 0;
  std::optional<std::size_t> child;
  std::vector<AssignmentTuple> tuples;
  std::size_t chosen = 0;
};

/// Flat parameter vector:
/// [age 1..5, fac_<id> ascending, alpha_nonlicensed, alpha_kindergarten,
///  beta x5, (gamma_0, gamma x5), kappa]. Gamma terms exist only in the full model.
class ParameterLayout {
 public:
  ParameterLayout(std::vector<FacilityId> facilities, bool include_gamma);

  std::size_t size() const { return kappa() + 1; }
  bool has_gamma() const { return include_gamma_; }
  std::span<const FacilityId> facilities() const { return facilities_; }

  std::size_t age(int grade) const { return static_cast<std::size_t>(grade - 1); }
  std::size_t facility(std::size_t i) const { return 5 + i; }
  std::size_t alpha_nonlicensed() const { return 5 + facilities_.size(); }
  std::size_t alpha_kindergarten() const { return alpha_nonlicensed() + 1; }
  std::size_t beta(int k) const { return alpha_kindergarten() + 1 + k; }
  std::size_t gamma0() const { return beta(kNumCovariates - 1) + 1; }
  std::size_t gamma(int k) const { return gamma0() + 1 + k; }
  std::size_t kappa() const {
    return include_gamma_ ? gamma(kNumCovariates - 1) + 1 : beta(kNumCovariates - 1) + 1;
  }

  std::vector<std::string> names() const;
  Eigen::VectorXd pack(const Theta& theta) const;
  /// Missing entries (gamma in the individual layout) come back as zero.
  Theta unpack(const Eigen::VectorXd& x) const;

 private:
  std::vector<FacilityId> facilities_;
  bool include_gamma_;
};

ParameterLayout full_layout(const Market& market);
ParameterLayout individual_layout(const Market& market);
/// Full layout unless every set is a single-child unit.
ParameterLayout layout_for(const Market& market, std::span<const ChoiceSet> sets);

/// Throws DataError when the family's observed tuple is infeasible under the cutoffs.
ChoiceSet build_choice_set(const Market& market, std::size_t family, const CutoffTable& cutoffs,
                           const Matching& matching, const PolicyScenario& policy);
std::vector<ChoiceSet> build_choice_sets(const Market& market, const Matching& matching,
                                         const PolicyScenario& policy);
/// One unit per applying child, ignoring siblings.
std::vector<ChoiceSet> build_individual_choice_sets(const Market& market, const Matching& matching,
                                                    const PolicyScenario& policy);

/// Compiled likelihood over a fixed collection of choice sets. V is linear in
/// the parameter vector; evaluation is parallel over fixed blocks of units and
/// reduced in block order.
class LikelihoodProblem {
 public:
  LikelihoodProblem(const Market& market, std::span<const ChoiceSet> sets, ParameterLayout layout,
                    int threads = 0);
  ~LikelihoodProblem();
  LikelihoodProblem(LikelihoodProblem&&) noexcept;
  LikelihoodProblem& operator=(LikelihoodProblem&&) noexcept;

  const ParameterLayout& layout() const;
  std::size_t num_units() const;

  double value(const Eigen::VectorXd& x) const;
  /// Log-likelihood and, when `gradient` is non-null, its gradient.
  double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* gradient) const;
  /// Logit probabilities of every tuple in one unit's set.
  std::vector<double> probabilities(const Eigen::VectorXd& x, std::size_t unit) const;
  /// Parameters whose feature varies within at least one set.
  std::vector<bool> identified() const;

 private:
  struct Data;
  std::unique_ptr<Data> data_;
};

double log_likelihood(const Theta& theta, std::span<const ChoiceSet> sets, const Market& market);
/// Gradient in layout_for(market, sets) order.
std::vector<double> loglik_gradient(const Theta& theta, std::span<const ChoiceSet> sets,
                                    const Market& market);

struct FitOptions {
  /// Starting point; default all zeros with kappa = 0.5.
  std::optional<Theta> init;
  int max_iters = 500;
  double gradient_tol = 1e-6;
  double loglik_rel_tol = 1e-10;
  int threads = 0;
  bool standard_errors = true;
};

struct EstimationResult {
  Theta theta_hat;
  std::vector<std::string> names;
  std::vector<double> estimates;
  /// Missing when the parameter is unidentified or the information is singular there.
  std::vector<std::optional<double>> standard_errors;
  double loglik = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string stop_reason;
  std::vector<std::string> log;

  std::optional<double> se(const std::string& name) const;
  double estimate(const std::string& name) const;
};

EstimationResult fit_model(const LikelihoodProblem& problem, const FitOptions& options);
EstimationResult fit_full_model(std::span<const ChoiceSet> sets, const Market& market,
                                const FitOptions& options = {});
EstimationResult fit_individual_model(const Market& market, const Matching& matching,
                                      const PolicyScenario& policy, const FitOptions& options = {});

/// Inverse observed information from a central-difference Hessian of the
/// analytic gradient; entries outside `active` are missing.
std::vector<std::optional<double>> standard_errors(const LikelihoodProblem& problem,
                                                   const Eigen::VectorXd& x,
                                                   const std::vector<bool>& active);
std::vector<std::optional<double>> standard_errors(const Theta& theta_hat,
                                                   std::span<const ChoiceSet> sets,
                                                   const Market& market);

/// name,full_estimate,full_se[,individual_estimate,individual_se]
void write_parameter_table(std::ostream& out, const EstimationResult& full,
                           const EstimationResult* individual = nullptr);
void write_convergence_log(std::ostream& out, const EstimationResult& result);

}  // namespace daycare
