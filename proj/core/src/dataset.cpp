#include "gfzip/dataset.hpp"

#include <cmath>
#include <stdexcept>

namespace gfzip {

namespace {

std::vector<std::string> default_names(const char* prefix, int count,
                                       std::vector<std::string> given) {
  if (!given.empty()) {
    if (static_cast<int>(given.size()) != count) {
      throw std::invalid_argument(std::string(prefix) + " name count mismatch");
    }
    return given;
  }
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) names.push_back(std::string(prefix) + std::to_string(i + 1));
  return names;
}

}  // namespace

GroupedDataset::GroupedDataset(Eigen::MatrixXi groups, Eigen::MatrixXd covariates,
                               GroupingScheme scheme,
                               std::vector<std::string> dim_names,
                               std::vector<std::string> covariate_names)
    : groups_(std::move(groups)),
      covariates_(std::move(covariates)),
      scheme_(std::move(scheme)) {
  if (groups_.rows() < 1 || groups_.cols() < 1 || covariates_.cols() < 1) {
    throw std::invalid_argument("dataset needs N >= 1, J >= 1, P >= 1");
  }
  if (covariates_.rows() != groups_.rows()) {
    throw std::invalid_argument("covariate rows must match response rows");
  }
  const int g_count = scheme_.group_count();
  for (Eigen::Index i = 0; i < groups_.rows(); ++i) {
    for (Eigen::Index j = 0; j < groups_.cols(); ++j) {
      const int g = groups_(i, j);
      if (g < 0 || g >= g_count) {
        throw std::invalid_argument("group index out of range at row " +
                                    std::to_string(i) + ", dim " + std::to_string(j));
      }
    }
  }
  if (!covariates_.allFinite()) {
    throw std::invalid_argument("covariates contain non-finite values");
  }
  dim_names_ = default_names("y", n_dims(), std::move(dim_names));
  covariate_names_ = default_names("x", n_covariates(), std::move(covariate_names));
}

}  // namespace gfzip
