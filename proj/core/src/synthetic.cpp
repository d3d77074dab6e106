#include "soe/synthetic.hpp"

#include <cmath>
#include <string>

#include "soe/effect_power.hpp"
#include "soe/error.hpp"
#include "soe/random.hpp"

namespace soe {
namespace {

const std::vector<TestFamily>& default_mix() {
  using F = TestFamily;
  static const std::vector<TestFamily> mix{F::IndependentT, F::IndependentT, F::IndependentT, F::IndependentT,
                                           F::PairedT,      F::PairedT,      F::ChiSquare1,   F::ChiSquare1,
                                           F::CorrelationR, F::OneWayF,      F::OneWayF,      F::ZTest};
  return mix;
}

std::string padded(char prefix, int value, int total) {
  const int width = static_cast<int>(std::to_string(total).size());
  std::string digits = std::to_string(value);
  return std::string(1, prefix) + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
}

struct Moments {
  double mean = 0.0;
  double ss = 0.0;  // sum of squared deviations
};

Moments sample(Rng& rng, std::int64_t n, double mu) {
  // Welford keeps this stable for any n.
  Moments m;
  for (std::int64_t i = 0; i < n; ++i) {
    const double x = rng.normal() + mu;
    const double delta = x - m.mean;
    m.mean += delta / static_cast<double>(i + 1);
    m.ss += delta * (x - m.mean);
  }
  return m;
}

void simulate(Rng& rng, CodedTest& t, double d) {
  const auto n = t.n_total;
  const double nd = static_cast<double>(n);
  switch (t.family) {
    case TestFamily::IndependentT: {
      const auto g = resolve_groups(n, std::nullopt, std::nullopt);
      const auto a = sample(rng, g.n1, d);
      const auto b = sample(rng, g.n2, 0.0);
      const double pooled = (a.ss + b.ss) / (nd - 2.0);
      t.statistic = (a.mean - b.mean) / std::sqrt(pooled * (1.0 / g.n1 + 1.0 / g.n2));
      t.df1 = n - 2;
      t.n1 = g.n1;
      t.n2 = g.n2;
      break;
    }
    case TestFamily::PairedT: {
      const auto diff = sample(rng, n, d);
      t.statistic = diff.mean / std::sqrt(diff.ss / (nd - 1.0) / nd);
      t.df1 = n - 1;
      break;
    }
    case TestFamily::ZTest: {
      const auto g = resolve_groups(n, std::nullopt, std::nullopt);
      const auto a = sample(rng, g.n1, d);
      const auto b = sample(rng, g.n2, 0.0);
      t.statistic = (a.mean - b.mean) / std::sqrt(1.0 / g.n1 + 1.0 / g.n2);
      t.n1 = g.n1;
      t.n2 = g.n2;
      break;
    }
    case TestFamily::ChiSquare1: {
      const double shift = std::sqrt(nd) * d_to_w(d);
      double chi2;
      do {
        const double z = rng.normal() + shift;
        chi2 = z * z;
      } while (chi2 >= nd);
      t.statistic = chi2;
      t.df1 = 1;
      break;
    }
    case TestFamily::CorrelationR: {
      const double rho = d_to_w(d);
      const double tail = std::sqrt(1.0 - rho * rho);
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (std::int64_t i = 0; i < n; ++i) {
        const double x = rng.normal();
        const double y = rho * x + tail * rng.normal();
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
      }
      const double cov = sxy - sx * sy / nd;
      t.statistic = cov / std::sqrt((sxx - sx * sx / nd) * (syy - sy * sy / nd));
      t.df1 = n - 2;
      break;
    }
    case TestFamily::OneWayF: {
      const int k = 2 + static_cast<int>(rng.index(2));
      // Group means with between-group SD d / 2 (Cohen's f).
      const double f = d_to_f(d);
      const std::vector<double> means = k == 2 ? std::vector<double>{f, -f}
                                               : std::vector<double>{f * std::sqrt(1.5), 0.0, -f * std::sqrt(1.5)};
      double grand_sum = 0.0, ssw = 0.0;
      std::vector<std::pair<std::int64_t, double>> groups;
      for (int g = 0; g < k; ++g) {
        const std::int64_t size = n / k + (g < n % k ? 1 : 0);
        const auto m = sample(rng, size, means[static_cast<std::size_t>(g)]);
        groups.emplace_back(size, m.mean);
        grand_sum += m.mean * static_cast<double>(size);
        ssw += m.ss;
      }
      const double grand = grand_sum / nd;
      double ssb = 0.0;
      for (const auto& [size, mean] : groups) ssb += static_cast<double>(size) * (mean - grand) * (mean - grand);
      t.statistic = (ssb / (k - 1)) / (ssw / (nd - k));
      t.df1 = k - 1;
      t.df2 = n - k;
      break;
    }
  }
}

}  // namespace

Dataset generate_synthetic(std::uint64_t seed, int n_studies, int tests_per_study, double true_fraction,
                           double effect_d_true, const SyntheticOptions& options) {
  if (n_studies < 1 || tests_per_study < 1) throw Error(ErrorKind::Parameter, "study and test counts must be positive");
  if (!(true_fraction >= 0.0 && true_fraction <= 1.0)) throw Error(ErrorKind::Parameter, "true_fraction must lie in [0, 1]");
  if (!(effect_d_true > 0.0)) throw Error(ErrorKind::Parameter, "effect_d_true must be positive");
  if (options.n_total && *options.n_total < 8) throw Error(ErrorKind::Parameter, "n_total must be >= 8");
  if (!options.n_total && (options.n_min < 8 || options.n_max < options.n_min)) {
    throw Error(ErrorKind::Parameter, "need 8 <= n_min <= n_max");
  }
  const auto& families = options.families.empty() ? default_mix() : options.families;

  Rng rng(seed);
  Dataset ds;
  ds.provenance = "synthetic (seed " + std::to_string(seed) + ", " + std::to_string(n_studies) + " studies x " +
                  std::to_string(tests_per_study) + " tests, true_fraction " + std::to_string(true_fraction) +
                  ", d " + std::to_string(effect_d_true) + ")";
  const double log_min = std::log(static_cast<double>(options.n_min));
  const double log_max = std::log(static_cast<double>(options.n_max));

  for (int s = 1; s <= n_studies; ++s) {
    StudyRecord study;
    study.study_id = padded('S', s, n_studies);
    study.year = 2000 + static_cast<int>(rng.index(18));
    study.acpa = std::round(rng.gamma(1.5) * 400.0) / 100.0;
    for (int j = 1; j <= tests_per_study; ++j) {
      CodedTest t;
      t.study_id = study.study_id;
      t.test_id = padded('T', j, tests_per_study);
      t.family = families[rng.index(families.size())];
      t.n_total = options.n_total
                      ? *options.n_total
                      : static_cast<std::int64_t>(std::llround(std::exp(log_min + rng.uniform() * (log_max - log_min))));
      const bool effect_present = rng.uniform() < true_fraction;
      simulate(rng, t, effect_present ? effect_d_true : 0.0);
      t.p_reported = recompute_p(t, true);
      try {
        t.effect_d = standardize_effect(t);
      } catch (const Error&) {
        t.effect_d.reset();
      }
      study.tests.push_back(std::move(t));
    }
    ds.studies.push_back(std::move(study));
  }
  return ds;
}

Dataset reference_fixture() {
  Dataset ds = generate_synthetic(2020, 30, 7, 0.4, 0.5);
  for (std::size_t i = 0; i < 10; ++i) ds.studies[i].tests.pop_back();
  ds.provenance = "synthetic reference fixture (seed 2020, 30 studies, 200 tests)";
  return ds;
}

}  // namespace soe
