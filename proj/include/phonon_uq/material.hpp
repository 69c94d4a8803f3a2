#pragma once

#include "phonon_uq/errors.hpp"

#include <cmath>
#include <string>

namespace phonon_uq {

/**
 * Isotropic linear-elastic material. All five elastic constants are kept
 * populated and mutually consistent; construct through the factories.
 * SI units: Pa and kg/m^3.
 */
struct ElasticMaterial {
    double density = 0.0;
    double youngs = 0.0;
    double poisson = 0.0;
    double bulk = 0.0;
    double shear = 0.0;
    double lame = 0.0;

    static ElasticMaterial from_youngs_poisson(double youngs, double poisson, double density)
    {
        if (!(youngs > 0.0)) throw InvalidArgument("Young's modulus must be positive");
        if (!(density > 0.0)) throw InvalidArgument("density must be positive");
        if (poisson == 0.5) throw InvalidArgument("singular material: Poisson ratio 0.5 (incompressible)");
        if (!(poisson > -1.0 && poisson < 0.5)) throw InvalidArgument("Poisson ratio must lie in (-1, 0.5)");
        ElasticMaterial m;
        m.density = density;
        m.youngs = youngs;
        m.poisson = poisson;
        m.shear = youngs / (2.0 * (1.0 + poisson));
        m.bulk = youngs / (3.0 * (1.0 - 2.0 * poisson));
        m.lame = m.bulk - 2.0 * m.shear / 3.0;
        return m;
    }

    static ElasticMaterial from_bulk_shear(double bulk, double shear, double density)
    {
        if (!(bulk > 0.0) || !(shear > 0.0)) throw InvalidArgument("bulk and shear moduli must be positive");
        if (!(density > 0.0)) throw InvalidArgument("density must be positive");
        ElasticMaterial m;
        m.density = density;
        m.bulk = bulk;
        m.shear = shear;
        m.youngs = 9.0 * bulk * shear / (3.0 * bulk + shear);
        m.poisson = (3.0 * bulk - 2.0 * shear) / (2.0 * (3.0 * bulk + shear));
        m.lame = bulk - 2.0 * shear / 3.0;
        return m;
    }

    /// Plane-strain P-wave modulus lambda + 2G.
    double p_wave_modulus() const { return lame + 2.0 * shear; }
    double shear_velocity() const { return std::sqrt(shear / density); }
    double longitudinal_velocity() const { return std::sqrt(p_wave_modulus() / density); }

    /// Checks positivity and the E/nu/K/G/lambda identities to `rel_tol`.
    bool is_consistent(double rel_tol = 1e-9) const
    {
        if (!(density > 0 && youngs > 0 && bulk > 0 && shear > 0)) return false;
        if (!(poisson > -1.0 && poisson < 0.5)) return false;
        auto close = [rel_tol](double a, double b) {
            return std::abs(a - b) <= rel_tol * std::max(std::abs(a), std::abs(b)) + 1e-300;
        };
        const double scale = std::max(bulk, shear);
        return close(shear, youngs / (2.0 * (1.0 + poisson))) &&
               close(bulk, youngs / (3.0 * (1.0 - 2.0 * poisson))) &&
               std::abs(lame - (bulk - 2.0 * shear / 3.0)) <= rel_tol * scale;
    }
};

struct MaterialPair {
    ElasticMaterial soft;
    ElasticMaterial hard;
};

/// Epoxy-like soft phase and steel-like hard phase used throughout the studies.
inline MaterialPair nominal_materials()
{
    return {ElasticMaterial::from_youngs_poisson(200e6, 0.38, 1000.0),
            ElasticMaterial::from_youngs_poisson(200e9, 0.28, 8000.0)};
}

} // namespace phonon_uq
