#include "casebase/stats.hpp"

#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "casebase/error.hpp"

namespace casebase {

double normal_cdf(double x) { return 0.5 * boost::math::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorKind::invalid_argument, "normal quantile needs p in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

double two_sided_normal_p(double z) {
  if (std::isnan(z)) return z;
  return boost::math::erfc(std::fabs(z) / std::sqrt(2.0));
}

double chi_square_upper_tail(double x, double df) {
  if (!(df > 0.0)) fail(ErrorKind::invalid_argument, "chi-square tail needs df > 0");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

}  // namespace casebase
