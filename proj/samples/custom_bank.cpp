// Plays UiPA, BPA and CBPA against a hand-written Gaussian arm bank using the
// policy and runner APIs directly.

#include <cstdio>
#include <vector>

#include "pilotpower/pilotpower.hpp"

namespace pp = pilotpower;

namespace {

template <class Policy>
double regret_of(Policy policy, const pp::SyntheticBank& bank, std::uint64_t horizon) {
  pp::RngStream rng(42, "custom-bank");
  const auto trace = pp::run_per_slot(policy, bank, horizon, pp::SwitchingCostFn::linear(0.0), rng);
  const auto curves = pp::compute_regret(trace, bank.means(), 5.0);
  return curves.pseudo.back();
}

}  // namespace

int main() {
  const std::vector<double> means{1.0, 3.0, 4.0, 5.0, 4.5};
  const std::vector<double> stds(means.size(), 1.0);
  const pp::SyntheticBank bank(pp::BankKind::gaussian, means, stds);

  std::vector<pp::PowerSetting> arms;
  for (std::size_t i = 0; i < means.size(); ++i) arms.push_back({static_cast<double>(i)});
  const std::vector<double> guess{2.0, 2.0, 4.0, 4.0, 4.0};

  std::printf("UiPA regret  %.2f\n", regret_of(pp::UipaPolicy(means.size()), bank, 2000));
  std::printf("BPA regret   %.2f\n", regret_of(pp::BpaPolicy(pp::GaussianPrior::independent(guess, 1.0).diagonal_view()), bank, 2000));
  std::printf("CBPA regret  %.2f\n", regret_of(pp::CbpaPolicy(pp::make_kernel_prior(arms, guess, 1.0, 2.0)), bank, 2000));
  return 0;
}
