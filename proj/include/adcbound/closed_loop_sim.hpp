#ifndef ADCBOUND_CLOSED_LOOP_SIM_HPP
#define ADCBOUND_CLOSED_LOOP_SIM_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>

#include "adcbound/bellman_engine.hpp"
#include "adcbound/grid_geometry.hpp"
#include "adcbound/system_model.hpp"

namespace adcbound {

// Causal map from inputs in [-1,1] to quantizer levels.
class AdcInterface {
 public:
  virtual ~AdcInterface() = default;
  virtual void reset() = 0;
  virtual double step(double r) = 0;
  virtual std::string name() const = 0;
};

// Accumulator with unit-delay feedback of the emitted level and a
// nearest-level (mid-tread) quantizer.
class FirstOrderDsm : public AdcInterface {
 public:
  explicit FirstOrderDsm(QuantizerAlphabet alphabet)
      : alphabet_(std::move(alphabet)) {}
  void reset() override {
    acc_ = 0.0;
    prev_u_ = 0.0;
  }
  double step(double r) override {
    acc_ += r - prev_u_;
    double u = alphabet_.nearest(acc_);
    prev_u_ = u;
    return u;
  }
  std::string name() const override { return "first_order_dsm"; }
  double accumulator() const { return acc_; }

 private:
  QuantizerAlphabet alphabet_;
  double acc_ = 0.0;
  double prev_u_ = 0.0;
};

class ConstantAdc : public AdcInterface {
 public:
  explicit ConstantAdc(double level) : level_(level) {}
  void reset() override {}
  double step(double) override { return level_; }
  std::string name() const override {
    return "constant:" + std::to_string(level_);
  }

 private:
  double level_;
};

struct AwaiEstimate {
  std::int64_t horizon = 0;  // samples 0..horizon were accumulated
  double mean = 0.0;
  double sum = 0.0;
};

struct TraceSink {
  std::ostream* out = nullptr;
  std::int64_t row_limit = 0;
};

// Streaming filtered-error simulator; chunked runs accumulate identically to
// one long run.
class FilteredErrorSimulator {
 public:
  FilteredErrorSimulator(const SystemModel& model, PenaltyFunction penalty,
                         QuantizerAlphabet alphabet, AdcInterface* adc);

  // Processes samples n, n+1, ... for `steps` steps; r_source maps the step
  // index to the input value.
  void run(const std::function<double(std::int64_t)>& r_source,
           std::int64_t steps, TraceSink trace = {});

  AwaiEstimate estimate() const;
  const Vector& state() const { return x_; }
  std::int64_t samples() const { return n_; }

 private:
  const SystemModel& model_;
  PenaltyFunction penalty_;
  QuantizerAlphabet alphabet_;
  AdcInterface* adc_;
  Vector x_;
  std::int64_t n_ = 0;
  double sum_ = 0.0;
};

// Mean penalty of the filtered matching error over samples 0..N.
AwaiEstimate run_filtered_error(const SystemModel& model,
                                const PenaltyFunction& penalty,
                                const QuantizerAlphabet& alphabet,
                                AdcInterface& adc,
                                const std::function<double(std::int64_t)>& r_source,
                                std::int64_t N, TraceSink trace = {});

struct PlaybackResult {
  AwaiEstimate awai;
  std::int64_t excursions = 0;       // steps outside the region (r = -1 used)
  double min_running_sum = 0.0;      // inf_N sum (phi(q) - gamma), when gamma given
};

// Closed loop of the stored input law against an ADC: r[n] is the law's value
// on the tile of x[n] (fallback -1 outside the region), u[n] the ADC output,
// and the state follows A x + B (r - u) from x[0] = 0.
PlaybackResult adversarial_playback(const SystemModel& model,
                                    const PenaltyFunction& penalty,
                                    const QuantizerAlphabet& alphabet,
                                    const PwcControlLaw& law,
                                    const Region& region, AdcInterface& adc,
                                    std::int64_t N, double gamma = 0.0,
                                    TraceSink trace = {});

}  // namespace adcbound

#endif
