#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "gfzip/grouping.hpp"

namespace gfzip {

/// Observed group indices for N individuals over J dimensions, with shared
/// per-individual covariates (first column conventionally the constant 1).
class GroupedDataset {
 public:
  GroupedDataset(Eigen::MatrixXi groups, Eigen::MatrixXd covariates,
                 GroupingScheme scheme,
                 std::vector<std::string> dim_names = {},
                 std::vector<std::string> covariate_names = {});

  int n_individuals() const { return static_cast<int>(groups_.rows()); }
  int n_dims() const { return static_cast<int>(groups_.cols()); }
  int n_covariates() const { return static_cast<int>(covariates_.cols()); }

  const Eigen::MatrixXi& groups() const { return groups_; }
  const Eigen::MatrixXd& covariates() const { return covariates_; }
  const GroupingScheme& scheme() const { return scheme_; }
  const std::vector<std::string>& dim_names() const { return dim_names_; }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }

 private:
  Eigen::MatrixXi groups_;      // N x J, entries in [0, G)
  Eigen::MatrixXd covariates_;  // N x P
  GroupingScheme scheme_;
  std::vector<std::string> dim_names_;
  std::vector<std::string> covariate_names_;
};

}  // namespace gfzip
