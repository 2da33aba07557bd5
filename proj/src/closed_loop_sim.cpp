#include "adcbound/closed_loop_sim.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace adcbound {

namespace {

void check_level(const QuantizerAlphabet& alphabet, double u) {
  if (!alphabet.contains(u)) {
    std::ostringstream oss;
    oss << "ADC emitted " << u << ", which is not an alphabet level";
    throw AlphabetViolation(oss.str(), u);
  }
}

void trace_row(TraceSink& trace, std::int64_t n, double r, double u,
               const Vector& x, double q, double mean) {
  if (!trace.out || trace.row_limit <= 0) return;
  --trace.row_limit;
  *trace.out << n << ',' << r << ',' << u;
  for (int k = 0; k < x.size(); ++k) *trace.out << ',' << x[k];
  *trace.out << ',' << q << ',' << mean << '\n';
}

}  // namespace

FilteredErrorSimulator::FilteredErrorSimulator(const SystemModel& model,
                                               PenaltyFunction penalty,
                                               QuantizerAlphabet alphabet,
                                               AdcInterface* adc)
    : model_(model),
      penalty_(penalty),
      alphabet_(std::move(alphabet)),
      adc_(adc),
      x_(Vector::Zero(model.m)) {}

void FilteredErrorSimulator::run(
    const std::function<double(std::int64_t)>& r_source, std::int64_t steps,
    TraceSink trace) {
  for (std::int64_t s = 0; s < steps; ++s) {
    double r = r_source(n_);
    double u = adc_->step(r);
    check_level(alphabet_, u);
    double q = model_.C * x_;
    sum_ += penalty_(q);
    ++n_;
    trace_row(trace, n_ - 1, r, u, x_, q, sum_ / static_cast<double>(n_));
    x_ = model_.A * x_ + model_.B * (r - u);
  }
}

AwaiEstimate FilteredErrorSimulator::estimate() const {
  AwaiEstimate e;
  e.horizon = n_ - 1;
  e.sum = sum_;
  e.mean = n_ > 0 ? sum_ / static_cast<double>(n_) : 0.0;
  return e;
}

AwaiEstimate run_filtered_error(const SystemModel& model,
                                const PenaltyFunction& penalty,
                                const QuantizerAlphabet& alphabet,
                                AdcInterface& adc,
                                const std::function<double(std::int64_t)>& r_source,
                                std::int64_t N, TraceSink trace) {
  if (N < 1) throw ConfigError("simulation horizon must be >= 1");
  adc.reset();
  FilteredErrorSimulator sim(model, penalty, alphabet, &adc);
  sim.run(r_source, N + 1, trace);  // samples 0..N
  return sim.estimate();
}

PlaybackResult adversarial_playback(const SystemModel& model,
                                    const PenaltyFunction& penalty,
                                    const QuantizerAlphabet& alphabet,
                                    const PwcControlLaw& law,
                                    const Region& region, AdcInterface& adc,
                                    std::int64_t N, double gamma,
                                    TraceSink trace) {
  if (N < 1) throw ConfigError("simulation horizon must be >= 1");
  if (law.choice.size() != region.tile_count())
    throw ConfigError("control law does not match the region");
  const InputGrid inputs(region.grid());
  adc.reset();

  PlaybackResult result;
  result.min_running_sum = std::numeric_limits<double>::infinity();
  Vector x = Vector::Zero(model.m);
  double sum = 0.0;
  double dissipation = 0.0;
  for (std::int64_t n = 0; n <= N; ++n) {
    TileCoords tile = tile_of(region.grid(), x);
    std::int64_t idx = region.index_of(tile);
    double r;
    if (idx >= 0) {
      r = inputs.values[static_cast<std::size_t>(
          law.choice[static_cast<std::size_t>(idx)])];
    } else {
      r = -1.0;  // any admissible input is valid where the value is zero
      ++result.excursions;
    }
    double u = adc.step(r);
    check_level(alphabet, u);
    double q = model.C * x;
    double cost = penalty(q);
    sum += cost;
    dissipation += cost - gamma;
    result.min_running_sum = std::min(result.min_running_sum, dissipation);
    trace_row(trace, n, r, u, x, q, sum / static_cast<double>(n + 1));
    x = model.A * x + model.B * (r - u);
  }
  result.awai.horizon = N;
  result.awai.sum = sum;
  result.awai.mean = sum / static_cast<double>(N + 1);
  return result;
}

}  // namespace adcbound
