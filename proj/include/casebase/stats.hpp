#pragma once

namespace casebase {

double normal_cdf(double x);
double normal_quantile(double p);
/// P(|Z| >= |z|).
double two_sided_normal_p(double z);
/// P(X >= x) for X ~ chi-square(df).
double chi_square_upper_tail(double x, double df);

}  // namespace casebase
