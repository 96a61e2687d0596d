// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "unipred/bounds.hpp"
#include "unipred/catalog.hpp"
#include "unipred/conjugate.hpp"
#include "unipred/decisions.hpp"
#include "unipred/lab/experiments.hpp"
#include "unipred/mixture.hpp"
#include "unipred/solomonoff/cache.hpp"
#include "unipred/solomonoff/estimates.hpp"

using namespace unipred;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::size_t failures = 0;
  void require(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    if (++failures <= 5) detail += (detail.empty() ? "" : "; ") + what;
    else if (failures == 6) detail += "; ...";
  }
};

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b)); }

PathPlan plan_of(Method m, std::size_t traj = 10000, std::uint64_t seed = 1) {
  PathPlan p;
  p.method = m;
  p.trajectories = traj;
  p.seed = seed;
  return p;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Outcome laplace_closed_forms() {
  Outcome o;
  for (std::uint64_t n : {0ULL, 1ULL, 10ULL, 1000ULL, 1826213ULL}) {
    const double nn = static_cast<double>(n);
    o.require(rel_close(laplace_predictive(CountVector::binary(0, n)), (nn + 1) / (nn + 2), 1e-12),
              "next_one at n=" + std::to_string(n));
  }
  const auto cv = CountVector::binary(0, 1826213);
  const double doom = dirichlet_predictive(cv, DirichletPrior::uniform(), 0);
  o.require(rel_close(doom, 1.0 / 1826215.0, 1e-12), "doom");
  o.detail = o.detail.empty() ? "doom=" + fmt(doom) : o.detail;
  return o;
}

Outcome confirmation_contrast() {
  Outcome o;
  const DiracMixedModel dirac;
  for (std::uint64_t n = 0; n <= 10000; ++n) {
    const double nn = static_cast<double>(n);
    if (universal_seq_posterior_uniform(n, kUnbounded) != 0.0) o.require(false, "uniform H'' at " + std::to_string(n));
    if (!rel_close(dirac_confirmation(n, kUnbounded), (nn + 1) / (nn + 2), 1e-12))
      o.require(false, "dirac H'' at " + std::to_string(n));
    const auto ones = CountVector::binary(0, n);
    auto zero_after = CountVector::binary(1, n);
    const double nz = (dirac.mass_of_counts(zero_after) / dirac.mass_of_counts(ones)).prob();
    if (!rel_close(nz, 1.0 / ((nn + 2) * (nn + 2)), 1e-12)) o.require(false, "next zero at " + std::to_string(n));
  }
  return o;
}

Outcome finite_population() {
  Outcome o;
  std::size_t checked = 0;
  for (std::uint64_t N : {1ULL, 2ULL, 3ULL, 7ULL, 10ULL, 64ULL, 100ULL, 999ULL, 1000ULL, 4096ULL, 10000ULL}) {
    for (std::uint64_t n = 0; n <= N; ++n) {
      ++checked;
      const double expect = static_cast<double>(n + 1) / static_cast<double>(N + 1);
      if (finite_population_posterior(n, N) != expect) o.require(false, "n=" + std::to_string(n) + " N=" + std::to_string(N));
    }
    // Chain of Laplace predictives over the unseen members.
    for (std::uint64_t n : {std::uint64_t{0}, N / 2, N}) {
      double chain = 1.0;
      for (std::uint64_t m = n; m < N; ++m) chain *= laplace_predictive(CountVector::binary(0, m));
      o.require(rel_close(chain, finite_population_posterior(n, N), 1e-10), "chain at N=" + std::to_string(N));
    }
  }
  if (o.pass) o.detail = std::to_string(checked) + " (n,N) pairs";
  return o;
}

Outcome deterministic_total() {
  Outcome o;
  double worst = std::numeric_limits<double>::infinity();
  std::size_t members = 0;
  for (const auto& [name, cls] : catalog::deterministic_classes())
    for (const auto& m : cls.members) {
      ++members;
      const auto alpha = static_cast<const DeterministicEnv&>(*m).prefix(10000);
      const auto r = det_convergence_report(cls, alpha);
      worst = std::min(worst, r.slack);
      o.require(r.slack >= -1e-10, name + "/" + m->name());
    }
  if (o.pass) o.detail = std::to_string(members) + " members, min slack " + fmt(worst);
  return o;
}

Outcome hellinger_chain() {
  Outcome o;
  double worst = std::numeric_limits<double>::infinity();
  for (const char* name : {"two-point", "grid", "universal-grid"}) {
    const auto s = catalog::bernoulli_setup(name);
    for (std::size_t n = 1; n <= 10; ++n) {
      const auto r = total_hellinger_check(*s.mu, *s.xi, n, plan_of(Method::Exact), s.w_mu);
      for (const auto* l : {&r.ratio_le_hellinger, &r.hellinger_le_divergence, &r.divergence_le_bound}) {
        worst = std::min(worst, l->slack());
        o.require(l->slack() >= -1e-10, std::string(name) + " exact n=" + std::to_string(n));
      }
    }
    const auto mc = total_hellinger_check(*s.mu, *s.xi, 200, plan_of(Method::MonteCarlo, 10000, 7), s.w_mu);
    o.require(mc.holds(), std::string(name) + " MC n=200");
  }
  if (o.pass) o.detail = "min exact slack " + fmt(worst);
  return o;
}

Outcome exponential_tail() {
  Outcome o;
  for (const char* name : {"two-point", "grid", "universal-grid"}) {
    const auto s = catalog::bernoulli_setup(name);
    for (std::size_t n = 1; n <= 10; ++n)
      o.require(exp_tail_check(*s.mu, *s.xi, n, plan_of(Method::Exact), s.w_mu).holds(),
                std::string(name) + " exact n=" + std::to_string(n));
    const auto mc = exp_tail_check(*s.mu, *s.xi, 200, plan_of(Method::MonteCarlo, 10000, 9), s.w_mu);
    o.require(mc.holds(), std::string(name) + " MC n=200");
    if (o.pass) o.detail += std::string(o.detail.empty() ? "" : ", ") + name + " " + fmt(mc.estimate.mean) + "<=" + fmt(mc.bound);
  }
  return o;
}

Outcome loss_bound() {
  Outcome o;
  for (const char* name : {"two-point", "grid", "universal-grid"}) {
    const auto s = catalog::bernoulli_setup(name);
    for (const auto& loss : {LossMatrix::zero_one(), LossMatrix::asymmetric(), LossMatrix::abstain()})
      for (std::size_t n = 1; n <= 8; ++n) {
        const auto r = loss_bound_check(*s.mu, *s.xi, loss, n, plan_of(Method::Exact), s.w_mu);
        o.require(r.holds(), std::string(name) + " " + loss.name() + " n=" + std::to_string(n));
      }
  }
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 8);
  double worst = 0.0;
  for (int trial = 0; trial < 100000; ++trial) {
    const int k = len(rng);
    std::vector<double> v(k), a(k), b(k);
    for (int i = 0; i < k; ++i) {
      v[i] = u(rng);
      a[i] = u(rng);
      b[i] = u(rng);
    }
    worst = std::min(worst, hellinger_mixture_inequality(v, a, b));
  }
  o.require(worst >= -1e-12, "randomized mixture inequality");
  return o;
}

Outcome continuous_growth() {
  Outcome o;
  std::vector<std::size_t> ns;
  for (std::size_t n = 64; n <= 4096; n *= 2) ns.push_back(n);
  const auto p = continuous_Dn_profile(0.3, ParameterPrior::uniform(), ns);
  o.require(p.slope >= 0.4 && p.slope <= 0.6, "slope " + fmt(p.slope));
  if (o.pass) o.detail = "slope " + fmt(p.slope);
  return o;
}

Outcome iid_instantaneous() {
  Outcome o;
  const auto r = iid_instantaneous_check(0.3, ParameterPrior::uniform(), 2000);
  o.require(r.bounded(), "late peak " + fmt(r.late_peak) + " vs early " + fmt(r.early_peak));
  o.detail += (o.detail.empty() ? "" : "; ") + std::string("peak n*E[h_n] ") + fmt(r.peak) + ", constant " + fmt(r.constant);
  return o;
}

Outcome solomonoff_suite(std::string& note) {
  using namespace solomonoff;
  Outcome o;
  const EnumerationBudget budget{20, 10000, 512};
  const auto idx = std::make_shared<const ProgramIndex>(load_or_build(budget));
  const auto v = verify_records(idx->records());
  o.require(v.prefix_free && v.canonical_order, "program set not prefix-free");
  // Integer arithmetic over 2^{L - l(p)} units, so the comparison is exact.
  std::uint64_t units = 0;
  for (const auto& r : idx->records()) units += std::uint64_t{1} << (budget.max_length - r.length);
  o.require(units <= (std::uint64_t{1} << budget.max_length), "Kraft sum above 1");
  const ApproxM m(idx);
  o.require(semimeasure_audit(m, 8).passes(), "semimeasure audit");
  const auto k4 = idx->approx_Km(ones(4));
  for (std::size_t n = 4; n <= 500; ++n)
    if (idx->approx_Km(ones(n)) != k4) {
      o.require(false, "Km(1^n) not constant at n=" + std::to_string(n));
      break;
    }
  const auto tr = computable_convergence(*idx, 500);
  o.require(tr.blocks_nondecreasing, "M(1|1^n) block means decrease");
  const auto scan = magic_number_scan(*idx, 1, 256, 2000, 1);
  std::size_t big = 0, hits = 0;
  for (const auto& p : scan.powers)
    if (p.n >= 8) {
      ++big;
      hits += p.local_max() ? 1 : 0;
    }
  o.require(2 * hits > big, "local maxima at " + std::to_string(hits) + "/" + std::to_string(big) + " powers");
  o.require(scan.spearman > 0.0 && scan.p_value < 0.05, "rank correlation " + fmt(scan.spearman) + " p=" + fmt(scan.p_value));
  if (o.pass)
    o.detail = std::to_string(idx->records().size()) + " records, Km(1^n)=" + std::to_string(*k4) + ", powers " +
               std::to_string(hits) + "/" + std::to_string(big) + ", spearman " + fmt(scan.spearman) + " p=" +
               fmt(scan.p_value);
  note = "band of M(0|1^n) 2^K(n) spans " + fmt(scan.band_decades) + " decades";
  return o;
}

Outcome determinism() {
  Outcome o;
  for (const auto& [name, fn] : lab::experiment_catalog()) {
    auto c = lab::make_config({{"experiment", name}, {"seed", "42"}});
    const auto a = lab::to_csv(lab::run_experiment(c).table);
    const auto b = lab::to_csv(lab::run_experiment(c).table);
    o.require(a == b, name);
  }
  if (o.pass) o.detail = std::to_string(lab::experiment_catalog().size()) + " experiments";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double limit_s;  // 0 = no runtime limit
    std::function<Outcome()> run;
  };
  std::string note;
  const std::vector<Criterion> criteria{
      {1, "Laplace closed forms", 1.0, laplace_closed_forms},
      {2, "confirmation contrast", 0.0, confirmation_contrast},
      {3, "finite population", 0.0, finite_population},
      {4, "deterministic total bound", 0.0, deterministic_total},
      {5, "Hellinger/KL chain", 120.0, hellinger_chain},
      {6, "exponential tail", 0.0, exponential_tail},
      {7, "loss bound", 0.0, loss_bound},
      {8, "continuous-class growth", 300.0, continuous_growth},
      {9, "iid instantaneous bound", 0.0, iid_instantaneous},
      {10, "Solomonoff suite", 600.0, [&] { return solomonoff_suite(note); }},
      {11, "determinism", 0.0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0.0) o.require(secs < c.limit_s, "runtime " + fmt(secs) + " s over " + fmt(c.limit_s) + " s");
    std::printf("%s criterion %d: %s (%.2f s)%s%s\n", o.pass ? "PASS" : "FAIL", c.id, c.title, secs,
                o.detail.empty() ? "" : " - ", o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  if (!note.empty()) std::printf("NOTE %s\n", note.c_str());
  return failures == 0 ? 0 : 1;
}
