#pragma once

// Equilibrium occupation function.  Either the Fermi factor
// 1/(exp(beta(x-mu))+1) or a tabulated monotone occupation with
// 0 < sup <= 1 (linear interpolation, clamped outside the table).

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dotlead {

class FermiSpec {
public:
    static FermiSpec fermi(double beta, double mu) {
        if (!(beta > 0.0)) throw std::invalid_argument("FermiSpec: beta must be > 0");
        FermiSpec f;
        f.beta_ = beta;
        f.mu_ = mu;
        return f;
    }

    // Tabulated occupation on an increasing grid of energies.
    static FermiSpec tabulated(std::vector<double> x, std::vector<double> f) {
        if (x.size() != f.size() || x.size() < 2)
            throw std::invalid_argument("FermiSpec: table needs >= 2 matching points");
        double sup = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (i > 0 && !(x[i] > x[i - 1]))
                throw std::invalid_argument("FermiSpec: table abscissae must increase");
            if (f[i] < 0.0) throw std::invalid_argument("FermiSpec: negative occupation");
            sup = std::max(sup, f[i]);
        }
        if (!(sup > 0.0 && sup <= 1.0))
            throw std::invalid_argument("FermiSpec: require 0 < sup f <= 1");
        FermiSpec s;
        s.tab_x_ = std::move(x);
        s.tab_f_ = std::move(f);
        return s;
    }

    static FermiSpec constant(double value) {
        if (!(value > 0.0 && value <= 1.0))
            throw std::invalid_argument("FermiSpec: constant occupation must be in (0,1]");
        return tabulated({-1.0, 1.0}, {value, value});
    }

    double operator()(double x) const {
        if (tab_x_.empty()) {
            const double a = beta_ * (x - mu_);
            if (a > 700.0) return 0.0;
            if (a < -700.0) return 1.0;
            return 1.0 / (std::exp(a) + 1.0);
        }
        if (x <= tab_x_.front()) return tab_f_.front();
        if (x >= tab_x_.back()) return tab_f_.back();
        const auto it = std::upper_bound(tab_x_.begin(), tab_x_.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - tab_x_.begin());
        const double w = (x - tab_x_[i - 1]) / (tab_x_[i] - tab_x_[i - 1]);
        return (1.0 - w) * tab_f_[i - 1] + w * tab_f_[i];
    }

    double beta() const { return beta_; }
    double mu() const { return mu_; }
    bool is_fermi() const { return tab_x_.empty(); }

private:
    FermiSpec() = default;
    double beta_ = 0.0;
    double mu_ = 0.0;
    std::vector<double> tab_x_, tab_f_;
};

} // namespace dotlead
