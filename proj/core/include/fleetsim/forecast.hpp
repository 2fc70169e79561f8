#pragma once
#include <optional>
#include <string>
#include <vector>

#include "fleetsim/time.hpp"

namespace fleetsim {

inline constexpr int kForecastHorizon = 60;  // minutes

// Per-minute input TPS samples for one (model, region).
class TpsSeries {
public:
    void push(double v) { samples_.push_back(v < 0 ? 0.0 : v); }
    std::size_t size() const { return samples_.size(); }
    const std::vector<double>& samples() const { return samples_; }

    // Last n samples (fewer if the series is shorter).
    std::vector<double> tail(std::size_t n) const {
        std::size_t start = samples_.size() > n ? samples_.size() - n : 0;
        return {samples_.begin() + start, samples_.end()};
    }

    double tail_mean(std::size_t n) const {
        auto t = tail(n);
        if (t.empty()) return 0.0;
        double s = 0;
        for (double v : t) s += v;
        return s / static_cast<double>(t.size());
    }

private:
    std::vector<double> samples_;
};

struct Forecast {
    std::vector<double> values;  // one per minute of the next hour, clipped >= 0
    double buffer = 0.0;         // beta

    double peak() const {
        double p = 0;
        for (double v : values) p = std::max(p, v);
        return p;
    }
};

struct ArimaOrder {
    int p = 0;
    int d = 0;
    int q = 0;
};

struct FittedArima {
    ArimaOrder order;
    double intercept = 0.0;
    std::vector<double> ar;  // phi, length p
    std::vector<double> ma;  // psi, length q
    double aic = 0.0;
    bool mean_fallback = false;  // degenerate series: forecast = mean
    double mean = 0.0;
};

std::vector<ArimaOrder> default_order_grid();  // p in 0..3, d in 0..1, q in 0..1

// AR coefficients by least squares, MA by the Hannan-Rissanen second stage;
// candidate minimizing AIC = 2(p+q+1) + n*ln(RSS/n) wins. Zero-variance
// series (after differencing) fall back to the mean model.
FittedArima fit_arima(const std::vector<double>& series,
                      const std::vector<ArimaOrder>& candidates = default_order_grid());

// 60 recursive one-step-ahead predictions, clipped at 0.
Forecast forecast_next_hour(const FittedArima& fitted, const std::vector<double>& series);

// beta = 10% of the mean NIW input TPS over the trailing hour.
double compute_buffer(const TpsSeries& niw_series);

enum class ForecastError { SeriesTooShort, AllZeroActuals };

// All horizon values equal to the trailing-window mean.
Forecast moving_average_forecast(const std::vector<double>& series, int window);

struct MapeResult {
    double percent = 0.0;
    int excluded_zero_actuals = 0;
    bool ok = false;
};
MapeResult mape(const std::vector<double>& predicted, const std::vector<double>& actual);

}  // namespace fleetsim
