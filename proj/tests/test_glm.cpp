#include <algorithm>
#include <cmath>

#include "casebase/error.hpp"
#include "casebase/glm.hpp"
#include "casebase/random.hpp"
#include "casebase/simulate.hpp"
#include "casebase/stats.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace casebase;

namespace {

Eigen::MatrixXd intercept(Eigen::Index n) { return Eigen::MatrixXd::Ones(n, 1); }

Eigen::VectorXi labels(const std::vector<std::size_t>& counts) {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  Eigen::VectorXi y(static_cast<Eigen::Index>(n));
  Eigen::Index r = 0;
  for (std::size_t k = 0; k < counts.size(); ++k)
    for (std::size_t i = 0; i < counts[k]; ++i) y(r++) = static_cast<int>(k);
  return y;
}

SurvivalDataset concat(const SurvivalDataset& a, const SurvivalDataset& b, const std::string& flag) {
  SurvivalDataset out;
  out.n_causes = std::max(a.n_causes, b.n_causes);
  out.tau = std::max(a.tau, b.tau);
  std::vector<double> indicator;
  for (const auto* part : {&a, &b})
    for (std::size_t i = 0; i < part->size(); ++i) {
      out.subject_ids.push_back(std::to_string(out.subject_ids.size() + 1));
      out.followup_times.push_back(part->followup_times[i]);
      out.event_types.push_back(part->event_types[i]);
      indicator.push_back(part == &b ? 1.0 : 0.0);
    }
  out.covariates.columns.push_back(CovariateColumn::numeric(flag, indicator));
  return out;
}

/// Random design fit used for derivative checks.
struct RandomFit {
  Eigen::MatrixXd X;
  Eigen::VectorXi y;
  Eigen::VectorXd offset;
  Eigen::VectorXd theta;
  int J;
};

RandomFit random_fit(std::uint64_t seed, int J) {
  CounterRng rng(seed, 99);
  const Eigen::Index n = 400, p = 3;
  RandomFit f;
  f.J = J;
  f.X.resize(n, p);
  f.y.resize(n);
  f.offset = Eigen::VectorXd::Constant(n, -0.3);
  for (Eigen::Index i = 0; i < n; ++i) {
    f.X(i, 0) = 1.0;
    f.X(i, 1) = rng.normal();
    f.X(i, 2) = rng.uniform() * 2.0;
    const double u = rng.uniform();
    f.y(i) = static_cast<int>(u * (J + 1));
  }
  const auto fit = J == 1 ? fit_logistic_offset(f.X, f.y, f.offset) : fit_multinomial_offset(f.X, f.y, f.offset, J);
  f.theta.resize(J * p);
  for (int j = 0; j < J; ++j) f.theta.segment(j * p, p) = fit.coefficients.row(j).transpose();
  return f;
}

}  // namespace

TEST_SUITE("glm") {
  TEST_CASE("intercept-only logistic with balanced response gives zero") {
    const auto y = labels({50, 50});
    const auto fit = fit_logistic_offset(intercept(100), y, Eigen::VectorXd::Zero(100));
    CHECK(std::abs(fit.coefficients(0, 0)) <= 1e-10);
    CHECK(fit.stats.converged);
  }

  TEST_CASE("intercept-only logistic equals logit(p) minus the offset") {
    for (auto [n0, n1, o] : std::vector<std::tuple<std::size_t, std::size_t, double>>{
             {900, 100, 0.0}, {1000, 10, -2.3}, {37, 12, 4.1}, {5000, 50, std::log(6.0)}}) {
      const auto y = labels({n0, n1});
      const auto n = static_cast<Eigen::Index>(n0 + n1);
      const auto fit = fit_logistic_offset(intercept(n), y, Eigen::VectorXd::Constant(n, o));
      const double p = static_cast<double>(n1) / static_cast<double>(n0 + n1);
      CHECK(std::abs(fit.coefficients(0, 0) - (oracle::logit(p) - o)) <= 1e-10);
    }
  }

  TEST_CASE("intercept-only multinomial equals log(n_j / n0) minus the offset") {
    const std::vector<std::size_t> counts = {800, 120, 45};
    const double o = 1.7;
    const auto y = labels(counts);
    const auto fit = fit_multinomial_offset(intercept(y.size()), y, Eigen::VectorXd::Constant(y.size(), o), 2);
    for (int j = 1; j <= 2; ++j)
      CHECK(std::abs(fit.coefficients(j - 1, 0) -
                     (std::log(static_cast<double>(counts[static_cast<std::size_t>(j)]) / counts[0]) - o)) <= 1e-10);
  }

  TEST_CASE("multinomial with one cause reduces to logistic") {
    const auto f = random_fit(5, 1);
    const auto logistic = fit_logistic_offset(f.X, f.y, f.offset);
    const auto multi = fit_multinomial_offset(f.X, f.y, f.offset, 1);
    CHECK((logistic.coefficients - multi.coefficients).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((logistic.covariance - multi.covariance).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(std::abs(logistic.stats.deviance - multi.stats.deviance) <= 1e-8);
  }

  TEST_CASE("constant-hazard fit recovers events over person-time") {
    const auto d = simulate_dataset(fixture::truth({fixture::exponential(0.2)}, 5000, 21, 5.0));
    const auto m = fixture::sample(d, 100, 21);
    const auto model = fit_hazard(m, parse_model_spec("time=constant"));
    const double target = std::log(static_cast<double>(d.total_events()) / total_person_time(d));
    CHECK(std::abs(model.coefficients(0, 0) - target) <= 3.0 * model.std_error(1, 0));
    CHECK(std::abs(model.coefficients(0, 0) - std::log(0.2)) <= 3.0 * model.std_error(1, 0));
    CHECK(model.fit.aic == doctest::Approx(model.fit.deviance + 2.0));
  }

  TEST_CASE("two constant cause-specific hazards: log hazard ratio near log 2") {
    const auto d = simulate_dataset(fixture::truth({fixture::exponential(0.5), fixture::exponential(1.0)}, 5000, 4));
    const auto m = fixture::sample(d, 100, 4);
    const auto model = fit_hazard(m, parse_model_spec("time=constant"));
    REQUIRE(model.causes == 2);
    const double diff = model.coefficients(1, 0) - model.coefficients(0, 0);
    const double var = model.covariance(0, 0) + model.covariance(1, 1) - 2.0 * model.covariance(0, 1);
    CHECK(std::abs(diff - std::log(2.0)) <= 3.0 * std::sqrt(var));
    CHECK(model.fit.aic == doctest::Approx(model.fit.deviance + 2.0 * 2.0));
  }

  TEST_CASE("Wald intervals") {
    const auto spec = fixture::resolved_spec("time=constant; terms=x");
    Eigen::MatrixXd theta(1, 2);
    theta << -1.0, 0.0;
    auto model = make_model(spec, theta);
    auto rows = wald_ci(model, 0.95);
    CHECK(rows[0].lower == rows[0].estimate);
    CHECK(rows[0].upper == rows[0].estimate);
    model.covariance = Eigen::MatrixXd::Identity(2, 2);
    rows = wald_ci(model, 0.95);
    CHECK(rows[1].lower == doctest::Approx(-1.959964).epsilon(1e-6));
    CHECK(rows[1].upper == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(rows[1].p_value == doctest::Approx(1.0));
    model.coefficients(0, 1) = std::log(0.8);
    model.covariance(1, 1) = 0.01;
    rows = wald_ci(model, 0.95);
    CHECK(std::exp(rows[1].lower) < 0.8);
    CHECK(std::exp(rows[1].upper) > 0.8);
    CHECK_THROWS_AS(wald_ci(model, 1.0), Error);
    CHECK_THROWS_AS(wald_ci(model, 0.0), Error);
  }

  TEST_CASE("hazard ratio of a profile against itself is exactly one") {
    auto spec = fixture::resolved_spec("time=bspline(df=4); terms=trt; interactions=trt");
    spec.time.interior_knots = {5.0};
    Eigen::MatrixXd theta = Eigen::MatrixXd::Constant(1, static_cast<Eigen::Index>(design_width(spec)), 0.3);
    auto model = make_model(spec, theta);
    model.covariance = Eigen::MatrixXd::Identity(theta.cols(), theta.cols());
    const std::vector<double> grid = {0.0, 2.5, 5.0, 9.0};
    const Profile a = {{"trt", 1.0}};
    for (const auto& pt : hazard_ratio_curve(model, a, a, grid)) {
      CHECK(pt.hr == 1.0);
      CHECK(pt.lower == 1.0);
      CHECK(pt.upper == 1.0);
    }
  }

  TEST_CASE("proportional model has a constant hazard ratio") {
    const auto d = simulate_dataset(
        fixture::truth({fixture::weibull(1.3, 6.0)}, 1500, 8, 8.0, {fixture::bernoulli("trt")}));
    const auto model = fit_hazard(fixture::sample(d, 20, 8), parse_model_spec("time=bspline(df=4); terms=trt"));
    std::vector<double> grid;
    for (int i = 0; i <= 40; ++i) grid.push_back(0.2 * i);
    const auto curve = hazard_ratio_curve(model, {{"trt", 1.0}}, {{"trt", 0.0}}, grid);
    for (const auto& pt : curve) {
      CHECK(std::abs(pt.hr - curve.front().hr) <= 1e-12);
      CHECK(pt.lower < pt.hr);
      CHECK(pt.upper > pt.hr);
    }
    CHECK(curve.front().hr == doctest::Approx(std::exp(model.coefficients(0, 5))).epsilon(1e-12));
  }

  TEST_CASE("time-varying hazard ratio: pointwise bands cover the truth") {
    // Control arm hazard 0.1; treated arm 0.1 exp(-0.5 + 0.1 t), a Gompertz hazard.
    const double tau = 10.0;
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(0.5 * i);
    std::size_t covered = 0, total = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      const auto control = simulate_dataset(fixture::truth({fixture::exponential(0.1)}, 600, seed, tau));
      const auto treated = simulate_dataset(
          fixture::truth({fixture::gompertz(std::log(0.1) - 0.5, 0.1)}, 600, seed + 1000, tau));
      const auto d = concat(control, treated, "trt");
      const auto model = fit_hazard(fixture::sample(d, 10, seed), parse_model_spec("time=linear; terms=trt; interactions=trt"));
      for (const auto& pt : hazard_ratio_curve(model, {{"trt", 1.0}}, {{"trt", 0.0}}, grid)) {
        const double truth = std::exp(-0.5 + 0.1 * pt.t);
        covered += (pt.lower <= truth && truth <= pt.upper) ? 1 : 0;
        ++total;
      }
    }
    CHECK(static_cast<double>(covered) >= 0.9 * static_cast<double>(total));
  }

  TEST_CASE("likelihood ratio test") {
    const auto d = simulate_dataset(fixture::truth({fixture::exponential(0.3)}, 800, 12, 5.0, {fixture::bernoulli("x")}));
    const auto m = fixture::sample(d, 10, 12);
    const auto small = fit_hazard(m, parse_model_spec("time=constant"));
    const auto same = lrt(small, small);
    CHECK(same.statistic == 0.0);
    CHECK(same.df == 0);
    CHECK(same.p_value == 1.0);
    const auto big = fit_hazard(m, parse_model_spec("time=bspline(df=3); terms=x"));
    const auto r = lrt(small, big);
    CHECK(r.df == 4);
    CHECK(r.statistic == doctest::Approx(small.fit.deviance - big.fit.deviance));
    CHECK_THROWS_AS(lrt(big, small), Error);
    const auto other = fit_hazard(fixture::sample(d, 10, 13), parse_model_spec("time=constant"));
    CHECK_THROWS_AS(lrt(other, big), Error);

    HazardModel a = small, b = small;
    b.column_names = {"(Intercept)", "b1", "b2", "b3"};
    b.coefficients = Eigen::MatrixXd::Zero(1, 4);
    a.fit.deviance = 6056.0 + 267.0;
    b.fit.deviance = 6056.0;
    const auto large_drop = lrt(a, b);
    CHECK(large_drop.df == 3);
    CHECK(large_drop.p_value < 1e-15);
    CHECK(chi_square_upper_tail(267.0, 3.0) < 1e-15);
    CHECK(chi_square_upper_tail(7.814728, 3.0) == doctest::Approx(0.05).epsilon(1e-6));
  }

  TEST_CASE("null LRT p-values are uniform (exponential vs spline)") {
    std::vector<double> p;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
      const auto d = simulate_dataset(fixture::truth({fixture::exponential(0.2)}, 400, seed, 6.0));
      const auto m = fixture::sample(d, 10, seed);
      const auto nested = fit_hazard(m, parse_model_spec("time=constant"));
      const auto full = fit_hazard(m, parse_model_spec("time=bspline(df=3)"));
      p.push_back(lrt(nested, full).p_value);
    }
    CHECK(oracle::ks_uniform_pvalue(p) > 0.01);
  }

  TEST_CASE("AIC is deviance plus twice the parameter count") {
    const auto spec = fixture::resolved_spec("time=linear; terms=a,b,c");
    auto model = make_model(spec, Eigen::MatrixXd::Zero(1, 5));
    model.fit.deviance = 100.0;
    CHECK(aic(model) == 110.0);
  }

  TEST_CASE("a pure-noise column never raises deviance and raises AIC on average") {
    double aic_gap = 0.0;
    const int seeds = 50;
    for (int s = 1; s <= seeds; ++s) {
      const auto seed = static_cast<std::uint64_t>(s);
      const auto d = simulate_dataset(
          fixture::truth({fixture::exponential(0.3)}, 500, seed, 5.0, {fixture::normal("noise")}));
      const auto m = fixture::sample(d, 10, seed);
      const auto base = fit_hazard(m, parse_model_spec("time=constant"));
      const auto noisy = fit_hazard(m, parse_model_spec("time=constant; terms=noise"));
      CHECK(noisy.fit.deviance <= base.fit.deviance + 1e-9);
      aic_gap += aic(noisy) - aic(base);
    }
    CHECK(aic_gap / seeds > 0.0);
  }

  TEST_CASE("Weibull data: AIC favours log time or splines") {
    int favoured = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      const auto d = simulate_dataset(fixture::truth({fixture::weibull(1.5, 10.0)}, 1000, seed, 15.0));
      const auto m = fixture::sample(d, 10, seed);
      const double exp_aic = aic(fit_hazard(m, parse_model_spec("time=constant")));
      const double gomp_aic = aic(fit_hazard(m, parse_model_spec("time=linear")));
      const double weib_aic = aic(fit_hazard(m, parse_model_spec("time=log")));
      const double spline_aic = aic(fit_hazard(m, parse_model_spec("time=bspline(df=3)")));
      if (std::min(weib_aic, spline_aic) < std::min(exp_aic, gomp_aic)) ++favoured;
    }
    CHECK(favoured >= 80);
  }

  TEST_CASE("analytic score and information match finite differences") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const int J = 1 + static_cast<int>(seed % 2);
      const auto f = random_fit(seed, J);
      CounterRng rng(seed, 5);
      Eigen::VectorXd at = f.theta;
      for (Eigen::Index k = 0; k < at.size(); ++k) at(k) += 0.1 * rng.normal();
      auto ll = [&](const Eigen::VectorXd& th) { return oracle::multinomial_loglik(f.X, f.y, f.offset, th, J); };
      const auto score = multinomial_score(f.X, f.y, f.offset, at, J);
      const auto fd = oracle::fd_gradient(ll, at, 1e-5);
      for (Eigen::Index k = 0; k < at.size(); ++k)
        CHECK(std::abs(score(k) - fd(k)) <= 1e-6 * std::max(std::abs(fd(k)), 1.0));
      CHECK(std::abs(multinomial_loglik(f.X, f.y, f.offset, at, J) - ll(at)) <= 1e-9 * std::abs(ll(at)));
      auto grad = [&](const Eigen::VectorXd& th) { return oracle::fd_gradient(ll, th, 1e-4); };
      const auto info = multinomial_information(f.X, f.offset, at, J);
      const Eigen::MatrixXd fd_h = oracle::fd_hessian_from_gradient(grad, at, 1e-4);
      for (Eigen::Index r = 0; r < info.rows(); ++r)
        for (Eigen::Index c = 0; c < info.cols(); ++c)
          CHECK(std::abs(info(r, c) + fd_h(r, c)) <= 1e-4 * std::max(std::abs(fd_h(r, c)), 1.0));
      // At the optimum the score vanishes.
      CHECK(multinomial_score(f.X, f.y, f.offset, f.theta, J).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }

  TEST_CASE("log-likelihood never decreases across iterations") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto d = simulate_dataset(fixture::truth({fixture::weibull(2.0, 4.0), fixture::exponential(0.1)},
                                                     600, seed, 6.0, {fixture::normal("z")}));
      const auto m = fixture::sample(d, 20, seed);
      const auto spec = resolve_spec(parse_model_spec("time=bspline(df=4); terms=z"), m);
      const auto dm = build_design_matrix(m, spec);
      const auto fit = fit_multinomial_offset(dm.X, dm.y, dm.offset, 2);
      CHECK(fit.stats.converged);
      for (std::size_t k = 1; k < fit.loglik_trace.size(); ++k)
        CHECK(fit.loglik_trace[k] >= fit.loglik_trace[k - 1]);
      Eigen::VectorXi y1 = dm.y.unaryExpr([](int v) { return v > 0 ? 1 : 0; });
      const auto lfit = fit_logistic_offset(dm.X, y1, dm.offset);
      for (std::size_t k = 1; k < lfit.loglik_trace.size(); ++k)
        CHECK(lfit.loglik_trace[k] >= lfit.loglik_trace[k - 1]);
    }
  }

  TEST_CASE("estimates are invariant under affine rescaling of a covariate") {
    auto d = simulate_dataset(
        fixture::truth({fixture::exponential(0.25, {{"age", 0.03}})}, 1200, 3, 6.0, {fixture::normal("age", 50, 8)}));
    const auto m = fixture::sample(d, 20, 3);
    const auto scaled = annotate_moments(m, "age2", [](const MomentRow& r) { return 10.0 * r.covariate("age") - 7.0; });
    const auto a = fit_hazard(scaled, parse_model_spec("time=log; terms=age"));
    const auto b = fit_hazard(scaled, parse_model_spec("time=log; terms=age2"));
    CHECK(std::abs(b.coefficients(0, 2) * 10.0 - a.coefficients(0, 2)) <= 1e-8);
    CHECK(std::abs((b.coefficients(0, 0) - 7.0 * b.coefficients(0, 2)) - a.coefficients(0, 0)) <= 1e-8);
    CHECK(std::abs(b.coefficients(0, 1) - a.coefficients(0, 1)) <= 1e-8);
    CHECK(std::abs(a.fit.deviance - b.fit.deviance) <= 1e-8 * a.fit.deviance);
  }

  TEST_CASE("covariance is symmetric positive definite and matches the inverse information") {
    const auto f = random_fit(77, 2);
    const auto fit = fit_multinomial_offset(f.X, f.y, f.offset, 2);
    CHECK((fit.covariance - fit.covariance.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fit.covariance);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
    const Eigen::MatrixXd info = multinomial_information(f.X, f.offset, f.theta, 2);
    CHECK((fit.covariance * info - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-8);
  }

  TEST_CASE("fitting errors") {
    Eigen::MatrixXd X(6, 2);
    X << 1, -3, 1, -2, 1, -1, 1, 1, 1, 2, 1, 3;
    Eigen::VectorXi y(6);
    y << 0, 0, 0, 1, 1, 1;
    try {
      fit_logistic_offset(X, y, Eigen::VectorXd::Zero(6));
      FAIL("expected separation");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::numerical);
    }
    CHECK_THROWS_AS(fit_logistic_offset(X, Eigen::VectorXi::Zero(6), Eigen::VectorXd::Zero(6)), Error);
    Eigen::VectorXi missing_class(6);
    missing_class << 0, 0, 2, 2, 0, 2;
    CHECK_THROWS_AS(fit_multinomial_offset(X, missing_class, Eigen::VectorXd::Zero(6), 2), Error);

    auto d = simulate_dataset(fixture::truth({fixture::exponential(0.3)}, 300, 2, 5.0, {fixture::normal("x")}));
    auto m = fixture::sample(d, 10, 2);
    m = annotate_moments(m, "x_twice", [](const MomentRow& r) { return 2.0 * r.covariate("x"); });
    try {
      fit_hazard(m, parse_model_spec("terms=x,x_twice"));
      FAIL("expected rank deficiency");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::data);
      CHECK(std::string(e.what()).find("x_twice") != std::string::npos);
    }
  }

  TEST_CASE("summary text lists every coefficient") {
    const auto d = simulate_dataset(fixture::truth({fixture::exponential(0.3)}, 300, 2, 5.0, {fixture::bernoulli("x")}));
    const auto model = fit_hazard(fixture::sample(d, 10, 2), parse_model_spec("time=log; terms=x"));
    const auto text = summary_text(model);
    for (const auto& name : model.column_names) CHECK(text.find(name) != std::string::npos);
    CHECK(text.find("AIC") != std::string::npos);
  }
}
