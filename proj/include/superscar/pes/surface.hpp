#pragma once

#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <utility>

#include "superscar/errors.hpp"
#include "superscar/jet.hpp"
#include "superscar/units.hpp"

namespace superscar::pes {

struct Gradient {
    double dR = 0.0;
    double dtheta = 0.0;
};

struct Hessian {
    double RR = 0.0;
    double Rtheta = 0.0;
    double thetatheta = 0.0;
};

/// Radial interval on which a surface is defined. The angular domain is
/// always [0, pi].
struct RadialDomain {
    double lo = 0.5;
    double hi = 20.0;
};

/// Backend interface. Implementations return the second-order jet of V at
/// (R, theta) with respect to (R, theta).
class SurfaceModel {
public:
    virtual ~SurfaceModel() = default;
    virtual Jet2 local(double R, double theta) const = 0;
    virtual double value(double R, double theta) const { return local(R, theta).v; }
    virtual std::string describe() const = 0;
};

/// Analytic backend from a functor templated on the scalar type.
template <class Model>
class AnalyticModel final : public SurfaceModel {
public:
    explicit AnalyticModel(Model m, std::string name) : model_(std::move(m)), name_(std::move(name)) {}

    Jet2 local(double R, double theta) const override {
        return model_(Jet2::variable(R, 0), Jet2::variable(theta, 1));
    }
    double value(double R, double theta) const override { return model_(R, theta); }
    std::string describe() const override { return name_; }
    const Model& model() const { return model_; }

private:
    Model model_;
    std::string name_;
};

/// Evaluable V(R, theta) on a declared domain.
///
/// The surface is a function of cos(theta), so it extends evenly through the
/// linear configurations; `local_extended` exposes that extension for the
/// classical integrator, which lets theta run past 0 and pi.
class PotentialSurface {
public:
    PotentialSurface() = default;
    PotentialSurface(std::shared_ptr<const SurfaceModel> model, RadialDomain domain)
        : model_(std::move(model)), domain_(domain) {
        if (!model_) throw ContractError("surface needs a backend");
        if (!(domain_.lo > 0.0 && domain_.hi > domain_.lo)) throw ContractError("invalid radial domain");
    }

    const RadialDomain& domain() const { return domain_; }
    std::string describe() const { return model_->describe(); }

    bool contains(double R, double theta) const {
        return R >= domain_.lo && R <= domain_.hi && theta >= 0.0 && theta <= units::kPi;
    }

    double evaluate(double R, double theta) const {
        check(R, theta);
        return model_->value(R, theta);
    }

    Gradient gradient(double R, double theta) const {
        check(R, theta);
        const Jet2 j = model_->local(R, theta);
        return {j.d0, j.d1};
    }

    Hessian hessian(double R, double theta) const {
        check(R, theta);
        const Jet2 j = model_->local(R, theta);
        return {j.h00, j.h01, j.h11};
    }

    Jet2 local(double R, double theta) const {
        check(R, theta);
        return model_->local(R, theta);
    }

    /// Value without the angular domain check; theta is folded into [0, pi]
    /// and derivatives are mapped back through the reflection.
    Jet2 local_extended(double R, double theta) const {
        if (R < domain_.lo || R > domain_.hi) {
            throw DomainError("R", R, domain_message("R", R));
        }
        const auto [folded, sign] = fold_angle(theta);
        Jet2 j = model_->local(R, folded);
        j.d1 *= sign;
        j.h01 *= sign;
        return j;
    }

    /// Map any real angle onto [0, pi]; `sign` is d(folded)/d(theta).
    static std::pair<double, double> fold_angle(double theta) {
        constexpr double two_pi = 2.0 * units::kPi;
        if (theta >= 0.0 && theta <= units::kPi) return {theta, 1.0};
        if (theta < 0.0 && theta >= -units::kPi) return {-theta, -1.0};
        double t = std::fmod(theta, two_pi);
        if (t < 0.0) t += two_pi;
        if (t <= units::kPi) return {t, 1.0};
        return {two_pi - t, -1.0};
    }

private:
    void check(double R, double theta) const {
        if (R < domain_.lo || R > domain_.hi) throw DomainError("R", R, domain_message("R", R));
        if (theta < 0.0 || theta > units::kPi) throw DomainError("theta", theta, domain_message("theta", theta));
    }

    std::string domain_message(const char* coord, double v) const {
        std::ostringstream os;
        os << coord << " = " << v << " outside surface domain R in [" << domain_.lo << ", " << domain_.hi
           << "], theta in [0, pi]";
        return os.str();
    }

    std::shared_ptr<const SurfaceModel> model_;
    RadialDomain domain_;
};

template <class Model>
PotentialSurface make_analytic_surface(Model m, std::string name, RadialDomain domain) {
    return PotentialSurface(std::make_shared<AnalyticModel<Model>>(std::move(m), std::move(name)), domain);
}

} // namespace superscar::pes
