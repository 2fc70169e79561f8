#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "fleetsim/forecast.hpp"
#include "fleetsim/rng.hpp"

using namespace fleetsim;

namespace {

// Synthetic AR(1) series: y_t = c + phi*y_{t-1} + noise.
std::vector<double> ar1_series(double c, double phi, double noise_sigma, int n,
                               std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> y;
    y.push_back(c / (1.0 - phi));
    for (int i = 1; i < n; ++i)
        y.push_back(c + phi * y.back() + noise_sigma * rng.normal());
    return y;
}

// Independent OLS oracle for (intercept, slope) of y_t on y_{t-1}.
std::pair<double, double> ols_ar1(const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = static_cast<int>(y.size()) - 1;
    for (int t = 1; t <= n; ++t) {
        sx += y[t - 1];
        sy += y[t];
        sxx += y[t - 1] * y[t - 1];
        sxy += y[t - 1] * y[t];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double intercept = (sy - slope * sx) / n;
    return {intercept, slope};
}

std::vector<double> diurnal_series(int minutes, double noise, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> y;
    for (int i = 0; i < minutes; ++i) {
        double v = 100.0 + 40.0 * std::cos(2 * M_PI * (i - 14 * 60) / 1440.0);
        y.push_back(std::max(0.0, v + noise * rng.normal()));
    }
    return y;
}

}  // namespace

TEST_CASE("AR(1) coefficient recovery matches the OLS oracle") {
    auto y = ar1_series(3.0, 0.7, 1.0, 2000, 11);
    // Restricted grid isolates the AR(1) estimator itself.
    FittedArima fit = fit_arima(y, {{1, 0, 0}});
    REQUIRE(!fit.mean_fallback);
    REQUIRE(fit.ar.size() == 1);
    CHECK(fit.ar[0] == doctest::Approx(0.7).epsilon(0.15 / 0.7));

    auto [c_ols, phi_ols] = ols_ar1(y);
    CHECK(fit.ar[0] == doctest::Approx(phi_ols).epsilon(1e-6));
    CHECK(fit.intercept == doctest::Approx(c_ols).epsilon(1e-6));

    // The full grid should still land near the true coefficient.
    FittedArima full = fit_arima(y);
    if (!full.mean_fallback && full.order.d == 0 && !full.ar.empty())
        CHECK(std::fabs(full.ar[0] - 0.7) < 0.15);
}

TEST_CASE("fit_arima: degenerate and short series") {
    CHECK_THROWS_AS(fit_arima({1, 2, 3}), std::invalid_argument);
    std::vector<double> flat(100, 5.0);
    FittedArima fit = fit_arima(flat);
    CHECK(fit.mean_fallback);
    CHECK(fit.mean == doctest::Approx(5.0));
    Forecast fc = forecast_next_hour(fit, flat);
    REQUIRE(fc.values.size() == kForecastHorizon);
    for (double v : fc.values) CHECK(v == doctest::Approx(5.0));
}

TEST_CASE("forecast_next_hour: horizon length, clipping, AR(1) recursion") {
    // Known coefficients: y_{t+1} = 1 + 0.5*y_t starting from y=9 -> 5.5, 3.75, ...
    FittedArima fit;
    fit.order = {1, 0, 0};
    fit.intercept = 1.0;
    fit.ar = {0.5};
    std::vector<double> series(10, 9.0);
    Forecast fc = forecast_next_hour(fit, series);
    REQUIRE(fc.values.size() == kForecastHorizon);
    CHECK(fc.values[0] == doctest::Approx(5.5));
    CHECK(fc.values[1] == doctest::Approx(3.75));
    CHECK(fc.values.back() == doctest::Approx(2.0).epsilon(1e-6));  // fixed point
    CHECK(fc.peak() == doctest::Approx(5.5));

    // Negative predictions are clipped at zero.
    fit.intercept = -10.0;
    fit.ar = {0.0};
    fc = forecast_next_hour(fit, series);
    for (double v : fc.values) CHECK(v == 0.0);
}

TEST_CASE("moving_average_forecast") {
    std::vector<double> y{1, 2, 3, 4, 10, 20};
    Forecast fc = moving_average_forecast(y, 2);
    REQUIRE(fc.values.size() == kForecastHorizon);
    for (double v : fc.values) CHECK(v == doctest::Approx(15.0));
    CHECK_THROWS_AS(moving_average_forecast(y, 0), std::invalid_argument);
    CHECK_THROWS_AS(moving_average_forecast(y, 7), std::invalid_argument);
}

TEST_CASE("mape: known values and zero-actual exclusion") {
    MapeResult r = mape({110, 90, 50}, {100, 100, 0});
    CHECK(r.ok);
    CHECK(r.excluded_zero_actuals == 1);
    CHECK(r.percent == doctest::Approx(10.0));

    MapeResult zeros = mape({1, 2}, {0, 0});
    CHECK(!zeros.ok);
    CHECK(zeros.excluded_zero_actuals == 2);
}

TEST_CASE("compute_buffer is 10% of the trailing-hour NIW mean") {
    TpsSeries s;
    for (int i = 0; i < 30; ++i) s.push(100.0);  // old samples, displaced below
    for (int i = 0; i < 60; ++i) s.push(40.0);
    CHECK(compute_buffer(s) == doctest::Approx(4.0));
    TpsSeries empty;
    CHECK(compute_buffer(empty) == doctest::Approx(0.0));
    CHECK(s.tail(10).size() == 10);
    CHECK(s.tail_mean(1000) < 100.0);  // shorter series: uses what exists
}

TEST_CASE("ARIMA beats the trailing-hour moving average on a diurnal series") {
    // Walk-forward evaluation over the last simulated day, hourly refits.
    auto y = diurnal_series(4 * 1440, 2.0, 5);
    double arima_err = 0, ma_err = 0;
    int hours = 0;
    for (int start = 3 * 1440; start + 60 <= 4 * 1440; start += 60) {
        std::vector<double> hist(y.begin(), y.begin() + start);
        std::vector<double> actual(y.begin() + start, y.begin() + start + 60);
        FittedArima fit = fit_arima(std::vector<double>(hist.end() - 1440, hist.end()));
        MapeResult a = mape(forecast_next_hour(fit, hist).values, actual);
        MapeResult m = mape(moving_average_forecast(hist, 60).values, actual);
        REQUIRE(a.ok);
        REQUIRE(m.ok);
        arima_err += a.percent;
        ma_err += m.percent;
        ++hours;
    }
    CHECK(hours == 24);
    CHECK(arima_err / hours < ma_err / hours);
}
