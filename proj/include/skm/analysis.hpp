#pragma once

#include <span>
#include <utility>
#include <vector>

#include "skm/linear_system.hpp"
#include "skm/rng.hpp"
#include "skm/selection.hpp"

namespace skm {

/// Exact dynamic range of a residual at sample size beta:
/// the ratio of summed squared sub-residual norms to summed squared
/// sub-residual sup-norms over all size-beta subsets, evaluated through the
/// closed form  gamma = sum r_i^2 / sum w_i r_i^2  with
/// w_i = C(rank_i - 1, beta - 1) / C(m - 1, beta - 1).
double dynamic_range_exact(std::span<const double> r, long beta);

struct McEstimate {
    double estimate = 0.0;
    double ci_half_width = 0.0;  // 95%, delta method
};

/// Monte-Carlo dynamic range: ratio of sample means over uniform subsets.
McEstimate dynamic_range_mc(std::span<const double> r, long beta,
                            long n_samples, Philox& rng);

/// Quantities shared by the dynamic range and the contraction factor,
/// computed in one pass over a ranked residual.
struct BoundTerms {
    double gamma = 0.0;                  // exact dynamic range
    double weighted_row_norm_sum = 0.0;  // sum_i w_i ||a_i||^2
};

BoundTerms bound_terms(const RankedResidual& ranked,
                       std::span<const double> row_norms_sq, long beta);

/// Lower bound on the dynamic range:
/// beta * C(m,beta) * sigma_min^2 / (m * sum_tau ||a_t(tau)||^2),
/// which reduces to sigma_min^2 / sum_i w_i ||a_i||^2.
double gamma_lower_bound(const LinearSystem& sys, std::span<const double> x,
                         long beta);

enum class Formula { RkEq1, SkmPrev, Thm2, Cor1, Cor3, MmImproved, MmHn18 };

struct ContractionFactor {
    double value = 1.0;
    Formula formula = Formula::Thm2;
    bool converged = false;  // zero residual: factor undefined
};

/// Single-iteration contraction factor of the general theorem:
/// 1 - beta C(m,beta) sigma_min^2 / (gamma m sum_tau ||a_t||^2).
ContractionFactor contraction_thm2(const LinearSystem& sys,
                                   std::span<const double> x, long beta);

/// Same with the numerator scaled by epsilon (alternate sampling
/// distributions at least epsilon times the exact one). Pass epsilon < 0 to
/// request the uniform-distribution specialization min||a||^2 / max||a||^2.
ContractionFactor contraction_cor3(const LinearSystem& sys,
                                   std::span<const double> x, long beta,
                                   double epsilon);

/// Unit-norm-row specialization 1 - beta sigma^2 / (gamma m).
double contraction_cor1(double sigma_min_sq, double gamma, long beta,
                        std::size_t m);

/// (1 - sigma^2/gamma, 1 - sigma^2/(4 gamma)): the improved greedy factor
/// and the earlier known one.
std::pair<double, double> mm_factors(double sigma_min_sq, double gamma);

/// Running product of per-iteration factors times the initial squared error.
std::vector<double> bound_curve(std::span<const double> factors, double e0_sq);

/// Upper bound on the expected dynamic range of a Gaussian system:
/// [C(m,beta)/C(m',beta)] * (beta n + extra) / log(beta). Requires beta >= 2.
double gaussian_gamma_bound(std::size_t m, std::size_t m_prime, long beta,
                            std::size_t n, double extra_norms_sq_over_var = 0.0);

/// c * beta / log(beta) for each requested beta (all >= 2).
std::vector<double> conjectured_gauss_curve(std::span<const long> betas,
                                            double scale_c);

/// Default calibration: c such that the curve equals gamma at the smallest
/// beta >= 2 among the given points.
double calibrate_conjectured_c(std::span<const long> betas,
                               std::span<const double> gammas);

/// Incidence-matrix bound: sorts squared edge differences ascending and sums
/// ranks beta..|E| for the denominator.
double incidence_gamma_bound(std::span<const double> edge_differences,
                             long beta);

}  // namespace skm
