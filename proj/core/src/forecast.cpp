#include "fleetsim/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fleetsim {

namespace {

std::vector<double> difference(const std::vector<double>& x, int d) {
    std::vector<double> y = x;
    for (int k = 0; k < d; ++k) {
        std::vector<double> next;
        next.reserve(y.size() - 1);
        for (std::size_t i = 1; i < y.size(); ++i) next.push_back(y[i] - y[i - 1]);
        y = std::move(next);
    }
    return y;
}

double variance(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    double mean = 0;
    for (double v : x) mean += v;
    mean /= x.size();
    double var = 0;
    for (double v : x) var += (v - mean) * (v - mean);
    return var / x.size();
}

// Least squares via normal equations; rows[i] is a regressor row, k small.
// Returns false when the system is singular beyond the ridge guard.
bool least_squares(const std::vector<std::vector<double>>& rows, const std::vector<double>& y,
                   std::vector<double>& coef, double& rss) {
    std::size_t n = rows.size();
    if (n == 0) return false;
    std::size_t k = rows[0].size();
    std::vector<std::vector<double>> ata(k, std::vector<double>(k, 0.0));
    std::vector<double> atb(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < k; ++a) {
            atb[a] += rows[i][a] * y[i];
            for (std::size_t b = a; b < k; ++b) ata[a][b] += rows[i][a] * rows[i][b];
        }
    }
    for (std::size_t a = 0; a < k; ++a) {
        ata[a][a] += 1e-9;
        for (std::size_t b = 0; b < a; ++b) ata[a][b] = ata[b][a];
    }
    // Gaussian elimination with partial pivoting.
    std::vector<std::vector<double>> m = ata;
    std::vector<double> rhs = atb;
    for (std::size_t col = 0; col < k; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < k; ++r)
            if (std::fabs(m[r][col]) > std::fabs(m[piv][col])) piv = r;
        if (std::fabs(m[piv][col]) < 1e-12) return false;
        std::swap(m[piv], m[col]);
        std::swap(rhs[piv], rhs[col]);
        for (std::size_t r = col + 1; r < k; ++r) {
            double f = m[r][col] / m[col][col];
            for (std::size_t c = col; c < k; ++c) m[r][c] -= f * m[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    coef.assign(k, 0.0);
    for (std::size_t col = k; col-- > 0;) {
        double s = rhs[col];
        for (std::size_t c = col + 1; c < k; ++c) s -= m[col][c] * coef[c];
        coef[col] = s / m[col][col];
    }
    rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double pred = 0;
        for (std::size_t a = 0; a < k; ++a) pred += rows[i][a] * coef[a];
        rss += (y[i] - pred) * (y[i] - pred);
    }
    return true;
}

// Long-AR residuals for the Hannan-Rissanen second stage. Residuals before
// index m are zero.
std::vector<double> long_ar_residuals(const std::vector<double>& y) {
    int n = static_cast<int>(y.size());
    int m = std::min(12, std::max(2, n / 4));
    std::vector<double> resid(y.size(), 0.0);
    std::vector<std::vector<double>> rows;
    std::vector<double> target;
    for (int t = m; t < n; ++t) {
        std::vector<double> row{1.0};
        for (int i = 1; i <= m; ++i) row.push_back(y[t - i]);
        rows.push_back(std::move(row));
        target.push_back(y[t]);
    }
    std::vector<double> coef;
    double rss = 0;
    if (!least_squares(rows, target, coef, rss)) return resid;
    for (int t = m; t < n; ++t) {
        double pred = coef[0];
        for (int i = 1; i <= m; ++i) pred += coef[i] * y[t - i];
        resid[t] = y[t] - pred;
    }
    return resid;
}

struct CandidateFit {
    bool ok = false;
    double aic = 0.0;
    double intercept = 0.0;
    std::vector<double> ar;
    std::vector<double> ma;
};

CandidateFit fit_candidate(const std::vector<double>& y, int p, int q) {
    CandidateFit fit;
    int n = static_cast<int>(y.size());
    std::vector<double> resid;
    int start = p;
    if (q > 0) {
        resid = long_ar_residuals(y);
        int m = std::min(12, std::max(2, n / 4));
        start = std::max(p, m + q);
    }
    if (n - start < p + q + 2) return fit;

    std::vector<std::vector<double>> rows;
    std::vector<double> target;
    for (int t = start; t < n; ++t) {
        std::vector<double> row{1.0};
        for (int i = 1; i <= p; ++i) row.push_back(y[t - i]);
        for (int j = 1; j <= q; ++j) row.push_back(resid[t - j]);
        rows.push_back(std::move(row));
        target.push_back(y[t]);
    }
    std::vector<double> coef;
    double rss = 0;
    if (!least_squares(rows, target, coef, rss)) return fit;

    int n_eff = static_cast<int>(target.size());
    double mean_sq = std::max(rss / n_eff, 1e-12);
    fit.ok = true;
    fit.aic = 2.0 * (p + q + 1) + n_eff * std::log(mean_sq);
    fit.intercept = coef[0];
    fit.ar.assign(coef.begin() + 1, coef.begin() + 1 + p);
    fit.ma.assign(coef.begin() + 1 + p, coef.end());
    return fit;
}

}  // namespace

std::vector<ArimaOrder> default_order_grid() {
    std::vector<ArimaOrder> grid;
    for (int p = 0; p <= 3; ++p)
        for (int d = 0; d <= 1; ++d)
            for (int q = 0; q <= 1; ++q) grid.push_back({p, d, q});
    return grid;
}

FittedArima fit_arima(const std::vector<double>& series,
                      const std::vector<ArimaOrder>& candidates) {
    if (series.size() < 8) throw std::invalid_argument("series too short for ARIMA fit");

    FittedArima best;
    bool have_best = false;
    for (const auto& ord : candidates) {
        if (static_cast<int>(series.size()) <= ord.d + 1) continue;
        std::vector<double> y = difference(series, ord.d);
        if (variance(y) < 1e-12) continue;  // degenerate at this differencing
        CandidateFit fit = fit_candidate(y, ord.p, ord.q);
        if (!fit.ok) continue;
        if (!have_best || fit.aic < best.aic) {
            have_best = true;
            best.order = ord;
            best.intercept = fit.intercept;
            best.ar = fit.ar;
            best.ma = fit.ma;
            best.aic = fit.aic;
        }
    }
    if (!have_best) {
        // Constant (or near-constant) series: mean model.
        best.mean_fallback = true;
        double s = 0;
        for (double v : series) s += v;
        best.mean = series.empty() ? 0.0 : s / series.size();
    }
    return best;
}

Forecast forecast_next_hour(const FittedArima& fitted, const std::vector<double>& series) {
    Forecast fc;
    fc.values.reserve(kForecastHorizon);
    if (fitted.mean_fallback || series.empty()) {
        fc.values.assign(kForecastHorizon, std::max(0.0, fitted.mean));
        return fc;
    }

    int p = fitted.order.p, d = fitted.order.d, q = fitted.order.q;
    std::vector<double> y = difference(series, d);

    // In-sample one-step residuals for the MA terms.
    std::vector<double> resid(y.size(), 0.0);
    if (q > 0) {
        for (std::size_t t = 0; t < y.size(); ++t) {
            if (static_cast<int>(t) < p) continue;
            double pred = fitted.intercept;
            for (int i = 1; i <= p; ++i) pred += fitted.ar[i - 1] * y[t - i];
            for (int j = 1; j <= q; ++j)
                pred += (static_cast<int>(t) - j >= 0) ? fitted.ma[j - 1] * resid[t - j] : 0.0;
            resid[t] = y[t] - pred;
        }
    }

    // Integration tails: last value of each differencing level.
    std::vector<double> levels;  // levels[k] = last value of k-times-differenced series
    {
        std::vector<double> cur = series;
        for (int k = 0; k < d; ++k) {
            levels.push_back(cur.back());
            cur = difference(cur, 1);
        }
    }

    for (int h = 0; h < kForecastHorizon; ++h) {
        double pred = fitted.intercept;
        for (int i = 1; i <= p; ++i) {
            std::size_t idx = y.size() - i;
            pred += fitted.ar[i - 1] * y[idx];
        }
        for (int j = 1; j <= q; ++j) {
            std::size_t idx = resid.size() - j;
            pred += fitted.ma[j - 1] * resid[idx];
        }
        y.push_back(pred);
        resid.push_back(0.0);  // future shocks are zero in expectation

        // Undo differencing.
        double value = pred;
        for (int k = d; k-- > 0;) {
            value = levels[k] + value;
            levels[k] = value;
        }
        fc.values.push_back(std::max(0.0, value));
    }
    return fc;
}

double compute_buffer(const TpsSeries& niw_series) {
    return 0.10 * niw_series.tail_mean(60);
}

Forecast moving_average_forecast(const std::vector<double>& series, int window) {
    if (window <= 0 || static_cast<int>(series.size()) < window)
        throw std::invalid_argument("series shorter than moving-average window");
    double s = 0;
    for (std::size_t i = series.size() - window; i < series.size(); ++i) s += series[i];
    double mean = std::max(0.0, s / window);
    Forecast fc;
    fc.values.assign(kForecastHorizon, mean);
    return fc;
}

MapeResult mape(const std::vector<double>& predicted, const std::vector<double>& actual) {
    MapeResult res;
    std::size_t n = std::min(predicted.size(), actual.size());
    double sum = 0;
    int used = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (actual[i] <= 0) {
            ++res.excluded_zero_actuals;
            continue;
        }
        sum += std::fabs(predicted[i] - actual[i]) / actual[i];
        ++used;
    }
    if (used == 0) return res;  // AllZeroActuals
    res.percent = 100.0 * sum / used;
    res.ok = true;
    return res;
}

}  // namespace fleetsim
