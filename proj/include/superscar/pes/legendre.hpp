#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "superscar/errors.hpp"
#include "superscar/jet.hpp"
#include "superscar/pes/spline.hpp"
#include "superscar/pes/surface.hpp"
#include "superscar/units.hpp"

namespace superscar::pes {

/// P_l(x) and its first two x-derivatives for l = 0..lmax, by the three-term
/// recurrence. Exact at x = +-1.
struct LegendreValues {
    std::vector<double> p, dp, ddp;
};

inline LegendreValues legendre_table(int lmax, double x) {
    LegendreValues t;
    const auto n = static_cast<std::size_t>(lmax + 1);
    t.p.assign(n, 0.0);
    t.dp.assign(n, 0.0);
    t.ddp.assign(n, 0.0);
    t.p[0] = 1.0;
    if (lmax == 0) return t;
    t.p[1] = x;
    t.dp[1] = 1.0;
    for (int l = 1; l < lmax; ++l) {
        const auto i = static_cast<std::size_t>(l);
        t.p[i + 1] = ((2.0 * l + 1.0) * x * t.p[i] - l * t.p[i - 1]) / (l + 1.0);
        t.dp[i + 1] = t.dp[i - 1] + (2.0 * l + 1.0) * t.p[i];
        t.ddp[i + 1] = t.ddp[i - 1] + (2.0 * l + 1.0) * t.dp[i];
    }
    return t;
}

enum class EnergyUnit { hartree, wavenumber };

inline double energy_scale(EnergyUnit u) {
    return u == EnergyUnit::hartree ? 1.0 : 1.0 / units::kCmPerHartree;
}

/// Closed-form radial coefficient. `form` is one of
///   constant c              -> c
///   polynomial c0 c1 ...    -> sum c_k R^k
///   exponential A b         -> A exp(-b R)
///   morse D a Re            -> D (1 - exp(-a (R - Re)))^2
///   inverse-power C n       -> C R^-n
struct AnalyticCurve {
    std::string form;
    std::vector<double> params;

    CurvePoint operator()(double R) const {
        const auto& c = params;
        if (form == "constant") return {c[0], 0.0, 0.0};
        if (form == "polynomial") {
            CurvePoint p;
            for (std::size_t k = c.size(); k-- > 0;) {
                p.curvature = p.curvature * R + 2.0 * p.slope;
                p.slope = p.slope * R + p.value;
                p.value = p.value * R + c[k];
            }
            return p;
        }
        if (form == "exponential") {
            const double e = c[0] * std::exp(-c[1] * R);
            return {e, -c[1] * e, c[1] * c[1] * e};
        }
        if (form == "morse") {
            const double D = c[0], a = c[1], e = std::exp(-a * (R - c[2]));
            return {D * (1.0 - e) * (1.0 - e), 2.0 * D * a * e * (1.0 - e), 2.0 * D * a * a * e * (2.0 * e - 1.0)};
        }
        if (form == "inverse-power") {
            const double C = c[0], n = c[1], v = C * std::pow(R, -n);
            return {v, -n * v / R, n * (n + 1.0) * v / (R * R)};
        }
        throw ContractError("unknown analytic form '" + form + "'");
    }

    static std::optional<std::size_t> arity(const std::string& form) {
        if (form == "constant") return 1;
        if (form == "polynomial") return 0; // variadic, at least one
        if (form == "exponential") return 2;
        if (form == "morse") return 3;
        if (form == "inverse-power") return 2;
        return std::nullopt;
    }
};

/// Tabulated radial coefficient, interpolated by a natural cubic spline.
struct TabulatedCurve {
    std::vector<double> R, v;
    CubicSpline spline;

    TabulatedCurve(std::vector<double> r, std::vector<double> values)
        : R(std::move(r)), v(std::move(values)), spline(R, v) {}

    CurvePoint operator()(double r) const { return spline(r); }
};

/// One v_lambda(R) in raw file units.
using RadialCurve = std::variant<AnalyticCurve, TabulatedCurve>;

inline CurvePoint evaluate_curve(const RadialCurve& c, double R) {
    return std::visit([R](const auto& curve) { return curve(R); }, c);
}

/// V(R, theta) = sum_l P_l(cos theta) v_l(R).
class LegendreSeries {
public:
    LegendreSeries() = default;
    LegendreSeries(std::vector<RadialCurve> curves, EnergyUnit unit = EnergyUnit::hartree)
        : curves_(std::move(curves)), unit_(unit) {
        if (curves_.empty()) throw ContractError("series needs at least lambda = 0");
    }

    int lambda_max() const { return static_cast<int>(curves_.size()) - 1; }
    EnergyUnit unit() const { return unit_; }
    const std::vector<RadialCurve>& curves() const { return curves_; }

    /// Radial range covered by every tabulated curve (unbounded if none).
    std::optional<RadialDomain> tabulated_range() const {
        std::optional<RadialDomain> d;
        for (const auto& c : curves_) {
            if (const auto* t = std::get_if<TabulatedCurve>(&c)) {
                if (!d) d = RadialDomain{t->R.front(), t->R.back()};
                d->lo = std::max(d->lo, t->R.front());
                d->hi = std::min(d->hi, t->R.back());
            }
        }
        return d;
    }

    /// Value with gradient and Hessian in (R, theta), hartree.
    Jet2 local(double R, double theta) const {
        const double x = std::cos(theta), s = std::sin(theta);
        const auto leg = legendre_table(lambda_max(), x);
        const double scale = energy_scale(unit_);
        Jet2 j;
        for (std::size_t l = 0; l < curves_.size(); ++l) {
            const CurvePoint v = evaluate_curve(curves_[l], R);
            const double P = leg.p[l];
            const double dP = -s * leg.dp[l];
            const double ddP = s * s * leg.ddp[l] - x * leg.dp[l];
            j.v += v.value * P;
            j.d0 += v.slope * P;
            j.d1 += v.value * dP;
            j.h00 += v.curvature * P;
            j.h01 += v.slope * dP;
            j.h11 += v.value * ddP;
        }
        j *= scale;
        return j;
    }

private:
    std::vector<RadialCurve> curves_;
    EnergyUnit unit_ = EnergyUnit::hartree;
};

class LegendreModel final : public SurfaceModel {
public:
    explicit LegendreModel(LegendreSeries s) : series_(std::move(s)) {}
    Jet2 local(double R, double theta) const override { return series_.local(R, theta); }
    std::string describe() const override {
        return "legendre-series lambda_max=" + std::to_string(series_.lambda_max());
    }
    const LegendreSeries& series() const { return series_; }

private:
    LegendreSeries series_;
};

/// Surface backed by a series; the radial domain defaults to the tabulated
/// range, or must be given when every curve is analytic.
inline PotentialSurface make_series_surface(LegendreSeries s, std::optional<RadialDomain> domain = std::nullopt) {
    auto d = domain ? domain : s.tabulated_range();
    if (!d) d = RadialDomain{};
    return PotentialSurface(std::make_shared<LegendreModel>(std::move(s)), *d);
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& tok, int line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError(line, "expected a number, got '" + tok + "'");
    }
}

inline int parse_int(const std::string& tok, int line) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError(line, "expected an integer, got '" + tok + "'");
    }
}

} // namespace detail

/// Parse the coefficient-file format:
///
///     legendre-series Λ=<int> r_unit=bohr e_unit=<hartree|cm-1>
///     lambda 0
///     analytic <form> <params...>
///     lambda 1
///     table <N>
///     <R> <value>      (N lines, R strictly increasing)
///     ...
///
/// Blocks must appear in order lambda = 0..Λ. Blank lines and lines starting
/// with '#' are ignored. `Lambda=` is accepted as an ASCII spelling of `Λ=`.
inline LegendreSeries parse_coefficients(std::istream& in) {
    std::vector<std::pair<int, std::string>> lines;
    {
        std::string raw;
        int n = 0;
        while (std::getline(in, raw)) {
            ++n;
            const std::string t = detail::trim(raw);
            if (t.empty() || t[0] == '#') continue;
            lines.emplace_back(n, t);
        }
    }
    if (lines.empty()) throw ParseError(0, "empty coefficient file");

    std::size_t pos = 0;
    auto tokens = [](const std::string& s) {
        std::istringstream is(s);
        std::vector<std::string> out;
        for (std::string t; is >> t;) out.push_back(t);
        return out;
    };

    const auto& [hline, htext] = lines[pos++];
    const auto head = tokens(htext);
    if (head.empty() || head[0] != "legendre-series") throw ParseError(hline, "header must start with 'legendre-series'");
    int lmax = -1;
    std::optional<EnergyUnit> unit;
    bool r_unit_ok = false;
    for (std::size_t i = 1; i < head.size(); ++i) {
        const auto eq = head[i].find('=');
        if (eq == std::string::npos) throw ParseError(hline, "malformed header field '" + head[i] + "'");
        const std::string key = head[i].substr(0, eq), val = head[i].substr(eq + 1);
        if (key == "\xCE\x9B" || key == "Lambda") {
            lmax = detail::parse_int(val, hline);
        } else if (key == "r_unit") {
            if (val != "bohr") throw ParseError(hline, "r_unit must be bohr");
            r_unit_ok = true;
        } else if (key == "e_unit") {
            if (val == "hartree") unit = EnergyUnit::hartree;
            else if (val == "cm-1") unit = EnergyUnit::wavenumber;
            else throw ParseError(hline, "e_unit must be hartree or cm-1");
        } else {
            throw ParseError(hline, "unknown header field '" + key + "'");
        }
    }
    if (lmax < 0) throw ParseError(hline, "header lacks a non-negative Λ");
    if (!r_unit_ok) throw ParseError(hline, "header lacks r_unit=bohr");
    if (!unit) throw ParseError(hline, "header lacks e_unit");

    std::vector<RadialCurve> curves;
    for (int l = 0; l <= lmax; ++l) {
        if (pos >= lines.size()) {
            throw ParseError(lines.back().first, "missing block for lambda " + std::to_string(l));
        }
        const auto& [ln, text] = lines[pos++];
        const auto tk = tokens(text);
        if (tk.size() != 2 || tk[0] != "lambda") throw ParseError(ln, "expected 'lambda " + std::to_string(l) + "'");
        const int got = detail::parse_int(tk[1], ln);
        if (got != l) {
            throw ParseError(ln, "expected block lambda " + std::to_string(l) + ", found lambda " + std::to_string(got));
        }
        if (pos >= lines.size()) throw ParseError(ln, "lambda block without body");
        const auto& [bl, btext] = lines[pos++];
        const auto body = tokens(btext);
        if (body.empty()) throw ParseError(bl, "empty lambda body");
        if (body[0] == "analytic") {
            if (body.size() < 2) throw ParseError(bl, "analytic needs a form name");
            AnalyticCurve c{body[1], {}};
            const auto ar = AnalyticCurve::arity(c.form);
            if (!ar) throw ParseError(bl, "unknown analytic form '" + c.form + "'");
            for (std::size_t i = 2; i < body.size(); ++i) c.params.push_back(detail::parse_number(body[i], bl));
            if ((*ar == 0 && c.params.empty()) || (*ar > 0 && c.params.size() != *ar)) {
                throw ParseError(bl, "wrong parameter count for form '" + c.form + "'");
            }
            curves.emplace_back(std::move(c));
        } else if (body[0] == "table") {
            if (body.size() != 2) throw ParseError(bl, "table needs a row count");
            const int n = detail::parse_int(body[1], bl);
            if (n < 2) throw ParseError(bl, "table needs at least two rows");
            std::vector<double> R, v;
            for (int i = 0; i < n; ++i) {
                if (pos >= lines.size()) throw ParseError(bl, "table truncated");
                const auto& [rl, rtext] = lines[pos++];
                const auto row = tokens(rtext);
                if (row.size() != 2) throw ParseError(rl, "table row must be 'R value'");
                const double r = detail::parse_number(row[0], rl);
                if (!R.empty() && !(r > R.back())) throw ParseError(rl, "R grid not strictly increasing");
                R.push_back(r);
                v.push_back(detail::parse_number(row[1], rl));
            }
            curves.emplace_back(TabulatedCurve(std::move(R), std::move(v)));
        } else {
            throw ParseError(bl, "expected 'analytic' or 'table'");
        }
    }
    if (pos != lines.size()) throw ParseError(lines[pos].first, "trailing content after lambda " + std::to_string(lmax));
    return LegendreSeries(std::move(curves), *unit);
}

inline LegendreSeries load_coefficients(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open coefficient file '" + path + "'");
    return parse_coefficients(in);
}

inline void write_coefficients(std::ostream& out, const LegendreSeries& s) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << "legendre-series \xCE\x9B=" << s.lambda_max() << " r_unit=bohr e_unit="
        << (s.unit() == EnergyUnit::hartree ? "hartree" : "cm-1") << '\n';
    for (std::size_t l = 0; l < s.curves().size(); ++l) {
        out << "lambda " << l << '\n';
        std::visit(
            [&out](const auto& c) {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, AnalyticCurve>) {
                    out << "analytic " << c.form;
                    for (double p : c.params) out << ' ' << p;
                    out << '\n';
                } else {
                    out << "table " << c.R.size() << '\n';
                    for (std::size_t i = 0; i < c.R.size(); ++i) out << c.R[i] << ' ' << c.v[i] << '\n';
                }
            },
            s.curves()[l]);
    }
}

} // namespace superscar::pes
