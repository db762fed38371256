#include "matpop/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "matpop/errors.hpp"

namespace matpop {

// ---------------------------------------------------------------------------
// Velocity
// ---------------------------------------------------------------------------

double Velocity::operator()(double m) const {
    if (kind == Kind::Power) {
        if (m <= 0.0) return 0.0;
        return alpha * std::pow(m, p);
    }
    return table(m);
}

double Velocity::derivative(double m) const {
    if (kind == Kind::Power) {
        if (m <= 0.0) return (p == 1.0) ? alpha : 0.0;
        return alpha * p * std::pow(m, p - 1.0);
    }
    return table.derivative(m);
}

Velocity Velocity::power(double alpha, double p) {
    Velocity v;
    v.kind = Kind::Power;
    v.alpha = alpha;
    v.p = p;
    return v;
}

Velocity Velocity::tabulated(std::vector<double> m, std::vector<double> v) {
    Velocity out;
    out.kind = Kind::Tabulated;
    out.table = num::PchipCurve(std::move(m), std::move(v));
    return out;
}

// ---------------------------------------------------------------------------
// DivisionAge
// ---------------------------------------------------------------------------

double DivisionAge::operator()(double m) const {
    switch (kind) {
        case Kind::Constant: return tau0;
        case Kind::Affine: return tau0 + tau1 * m;
        case Kind::Tabulated: return table(m);
    }
    return tau0;
}

double DivisionAge::derivative(double m) const {
    switch (kind) {
        case Kind::Constant: return 0.0;
        case Kind::Affine: return tau1;
        case Kind::Tabulated: return table.derivative(m);
    }
    return 0.0;
}

double DivisionAge::max_on_unit() const {
    switch (kind) {
        case Kind::Constant: return tau0;
        case Kind::Affine: return std::max(tau0, tau0 + tau1);
        case Kind::Tabulated: {
            double mx = table(0.0);
            for (int i = 0; i <= 2000; ++i) mx = std::max(mx, table(i / 2000.0));
            return mx;
        }
    }
    return tau0;
}

DivisionAge DivisionAge::constant(double tau0) {
    DivisionAge t;
    t.kind = Kind::Constant;
    t.tau0 = tau0;
    return t;
}

DivisionAge DivisionAge::affine(double tau0, double tau1) {
    DivisionAge t;
    t.kind = Kind::Affine;
    t.tau0 = tau0;
    t.tau1 = tau1;
    return t;
}

DivisionAge DivisionAge::tabulated(std::vector<double> m, std::vector<double> v) {
    DivisionAge t;
    t.kind = Kind::Tabulated;
    t.table = num::PchipCurve(std::move(m), std::move(v));
    return t;
}

// ---------------------------------------------------------------------------
// DivisionMap
// ---------------------------------------------------------------------------

double DivisionMap::operator()(double m) const {
    if (kind == Kind::Linear) return slope * m;
    return table(m);
}

std::pair<double, double> DivisionMap::inverse(double m) const {
    const double cut = g1();
    if (m > cut) return {1.0, 0.0};
    if (kind == Kind::Linear) return {m / slope, 1.0 / slope};
    const double x = inverse_table(m);
    const double gp = table.derivative(x);
    return {x, gp > 0.0 ? 1.0 / gp : 0.0};
}

double DivisionMap::g1() const {
    return kind == Kind::Linear ? slope : table(1.0);
}

DivisionMap DivisionMap::linear(double slope) {
    DivisionMap g;
    g.kind = Kind::Linear;
    g.slope = slope;
    return g;
}

DivisionMap DivisionMap::tabulated(std::vector<double> m, std::vector<double> v) {
    DivisionMap g;
    g.kind = Kind::Tabulated;
    g.inverse_table = num::PchipCurve(v, m);  // swap axes; v must increase
    g.table = num::PchipCurve(std::move(m), std::move(v));
    return g;
}

// ---------------------------------------------------------------------------
// RateField
// ---------------------------------------------------------------------------

double RateField::operator()(double m) const {
    return kind == Kind::Constant ? value : table(m);
}

double RateField::max_on_unit(int grid) const {
    if (kind == Kind::Constant) return value;
    double mx = table(0.0);
    for (int i = 0; i <= grid; ++i) mx = std::max(mx, table((double)i / grid));
    return mx;
}

double RateField::min_on_unit(int grid) const {
    if (kind == Kind::Constant) return value;
    double mn = table(0.0);
    for (int i = 0; i <= grid; ++i) mn = std::min(mn, table((double)i / grid));
    return mn;
}

RateField RateField::constant(double v) {
    RateField r;
    r.kind = Kind::Constant;
    r.value = v;
    return r;
}

RateField RateField::tabulated(std::vector<double> m, std::vector<double> v) {
    RateField r;
    r.kind = Kind::Tabulated;
    r.table = num::PchipCurve(std::move(m), std::move(v));
    return r;
}

// ---------------------------------------------------------------------------
// Reintroduction
// ---------------------------------------------------------------------------

double Reintroduction::operator()(double m, double x) const {
    if (kind == Kind::Custom) return custom(m, x);
    const double b0 = beta0(m);
    if (x < 0.0) return b0;
    const double th = threshold(m);
    const double thn = std::pow(th, n);
    return b0 * thn / (thn + std::pow(x, n));
}

double Reintroduction::beta0_sup(int grid) const {
    return beta0.max_on_unit(grid);
}

Reintroduction Reintroduction::hill(RateField beta0, RateField threshold, double n) {
    Reintroduction b;
    b.kind = Kind::Hill;
    b.beta0 = std::move(beta0);
    b.threshold = std::move(threshold);
    b.n = n;
    return b;
}

Reintroduction Reintroduction::custom_fn(std::function<double(double, double)> f) {
    Reintroduction b;
    b.kind = Kind::Custom;
    b.custom = std::move(f);
    return b;
}

double eval_beta(const ModelCoefficients& coeffs, double m, double x) {
    return coeffs.reintroduction(m, x);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

bool ValidationReport::ok() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const HypothesisCheck& c) { return c.status != CheckStatus::Fail; });
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    for (const auto& c : checks) {
        const char* s = c.status == CheckStatus::Pass   ? "pass"
                        : c.status == CheckStatus::Fail ? "FAIL"
                                                        : "assumed";
        os << c.name << ": " << s;
        if (c.status == CheckStatus::Fail)
            os << " (worst at m=" << c.worst_m << ", value=" << c.worst_value << ")";
        if (!c.note.empty()) os << " -- " << c.note;
        os << "\n";
    }
    return os.str();
}

ValidationReport validate_coefficients(const ModelCoefficients& coeffs, int grid_resolution) {
    ValidationReport report;
    const int n = std::max(grid_resolution, 8);
    const auto& V = coeffs.velocity;
    const auto& tau = coeffs.division_age;
    const auto& g = coeffs.division_map;

    // V(0) = 0 and V > 0 on (0,1].
    {
        HypothesisCheck c;
        c.name = "velocity positive on (0,1] with V(0)=0";
        c.worst_value = 1e300;
        if (std::abs(V(0.0)) > 1e-12) {
            c.status = CheckStatus::Fail;
            c.worst_m = 0.0;
            c.worst_value = V(0.0);
            c.note = "V(0) != 0";
        }
        for (int i = 1; i <= n && c.status == CheckStatus::Pass; ++i) {
            const double m = (double)i / n;
            const double v = V(m);
            if (v < c.worst_value) {
                c.worst_value = v;
                c.worst_m = m;
            }
            if (v <= 0.0) c.status = CheckStatus::Fail;
        }
        report.checks.push_back(c);
    }

    // Divergent time of flight from the origin. Structural for the power
    // family (p >= 1); unverifiable for a tabulated velocity.
    {
        HypothesisCheck c;
        c.name = "slow start: time of flight from 0 diverges";
        if (V.kind == Velocity::Kind::Power) {
            if (!(V.p >= 1.0) || !(V.alpha > 0.0)) {
                c.status = CheckStatus::Fail;
                c.worst_m = 0.0;
                c.worst_value = V.p;
                c.note = "power family needs alpha>0 and p>=1";
            }
        } else {
            c.status = CheckStatus::Assumed;
            c.note = "tabulated velocity: divergence not checkable, assumed";
        }
        report.checks.push_back(c);
    }

    // tau positive on [0,1].
    {
        HypothesisCheck c;
        c.name = "division age positive";
        c.worst_value = 1e300;
        for (int i = 0; i <= n; ++i) {
            const double m = (double)i / n;
            const double t = tau(m);
            if (t < c.worst_value) {
                c.worst_value = t;
                c.worst_m = m;
            }
        }
        if (c.worst_value <= 0.0) c.status = CheckStatus::Fail;
        report.checks.push_back(c);
    }

    // tau'(m) + 1/V(m) > 0 on (0,1]; automatic near m=0 where V vanishes.
    {
        HypothesisCheck c;
        c.name = "commitment-time condition tau' + 1/V > 0";
        c.worst_value = 1e300;
        for (int i = 1; i <= n; ++i) {
            const double m = (double)i / n;
            const double v = V(m);
            if (v <= 0.0) continue;  // reported by the positivity check
            const double val = tau.derivative(m) + 1.0 / v;
            if (val < c.worst_value) {
                c.worst_value = val;
                c.worst_m = m;
            }
        }
        if (c.worst_value <= 0.0) c.status = CheckStatus::Fail;
        report.checks.push_back(c);
    }

    // g strictly increasing, g(m) <= m.
    {
        HypothesisCheck c;
        c.name = "division map strictly increasing";
        c.worst_value = 1e300;
        for (int i = 0; i < n; ++i) {
            const double m0 = (double)i / n;
            const double m1 = (double)(i + 1) / n;
            const double d = g(m1) - g(m0);
            if (d < c.worst_value) {
                c.worst_value = d;
                c.worst_m = m0;
            }
        }
        if (c.worst_value <= 0.0) c.status = CheckStatus::Fail;
        report.checks.push_back(c);

        HypothesisCheck b;
        b.name = "division map g(m) <= m";
        b.worst_value = -1e300;
        for (int i = 0; i <= n; ++i) {
            const double m = (double)i / n;
            const double excess = g(m) - m;
            if (excess > b.worst_value) {
                b.worst_value = excess;
                b.worst_m = m;
            }
        }
        if (b.worst_value > 1e-12) b.status = CheckStatus::Fail;
        report.checks.push_back(b);
    }

    return report;
}

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------

InitialData InitialData::zero() {
    InitialData d;
    d.mu_bar = [](double) { return 0.0; };
    d.gamma = [](double, double) { return 0.0; };
    return d;
}

InitialData InitialData::compatible(const ModelCoefficients& coeffs,
                                    std::function<double(double)> mu,
                                    std::function<double(double)> age_profile) {
    InitialData d;
    d.mu_bar = mu;
    const Reintroduction beta = coeffs.reintroduction;
    d.gamma = [beta, mu, age_profile](double m, double a) {
        const double mb = mu(m);
        return beta(m, mb) * mb * age_profile(a);
    };
    return d;
}

CompatReport check_compatibility(const InitialData& data, const ModelCoefficients& coeffs,
                                 double tol, int grid_resolution) {
    CompatReport report;
    report.tol = tol;
    const int n = std::max(grid_resolution, 8);
    for (int i = 0; i <= n; ++i) {
        const double m = (double)i / n;
        const double mb = data.mu_bar(m);
        const double rhs = eval_beta(coeffs, m, mb) * mb;
        const double lhs = data.gamma(m, 0.0);
        const double diff = std::abs(lhs - rhs);
        const double rel = (diff == 0.0) ? 0.0 : diff / std::max(std::abs(rhs), 1e-300);
        if (rel > report.max_rel_deviation) {
            report.max_rel_deviation = rel;
            report.worst_m = m;
        }
    }
    report.pass = report.max_rel_deviation <= tol;
    return report;
}

}  // namespace matpop
