#ifndef BBPD_AXIOMS_HPP
#define BBPD_AXIOMS_HPP

#include <bbpd/kernels.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace bbpd
{

struct AxiomTolerances
{
    double antisymmetry = 1e-10;
    double collinearity = 1e-12;
    double gradient = 1e-6;
};

//! Worst relative violations of the constitutive constraints over a sample.
struct AxiomReport
{
    std::string family;
    int samples = 0;
    //! |f(xi,eta) + f(-xi,-eta)| / |f(xi,eta)|
    double max_antisymmetry = 0.0;
    //! |(xi+eta) x f| / (|xi+eta| |f|)
    double max_collinearity = 0.0;
    //! |f - grad_eta Phi| / max(|f|, |grad Phi|), central differences
    double max_gradient = 0.0;
    int gradient_samples = 0;
    //! Samples whose difference stencil straddles a force discontinuity.
    int discontinuities = 0;

    bool passed( const AxiomTolerances& tol = {} ) const
    {
        return max_antisymmetry < tol.antisymmetry &&
               max_collinearity < tol.collinearity &&
               max_gradient < tol.gradient;
    }
};

namespace detail
{

inline Vec3 random_direction( std::mt19937_64& rng, int dim )
{
    std::normal_distribution<double> normal( 0.0, 1.0 );
    for ( ;; )
    {
        Vec3 v;
        for ( int a = 0; a < dim; ++a )
            v[a] = normal( rng );
        const double n = norm( v );
        if ( n > 1e-8 )
            return v / n;
    }
}

inline double relative( double num, double scale )
{
    if ( num == 0.0 )
        return 0.0;
    return scale > 0.0 ? num / scale : infinity;
}

} // namespace detail

//! True when a central-difference stencil around eta straddles the
//! anti-plane shear cut-off, where the force jumps to zero.
inline bool stencil_crosses_cutoff( const AntiPlaneShear& k, const Vec3& xi,
                                    const Vec3& eta, double step, int dim )
{
    const double r0 = norm( xi );
    const bool centre = norm( xi + eta ) - r0 > k.u_star;
    for ( int a = 0; a < dim; ++a )
        for ( double sgn : { -1.0, 1.0 } )
        {
            Vec3 e = eta;
            e[a] += sgn * step;
            if ( ( norm( xi + e ) - r0 > k.u_star ) != centre )
                return true;
        }
    return false;
}

/*!
  \brief Sample admissible bonds and measure antisymmetry, collinearity and
  hyperelastic consistency of a kernel.

  Bonds are drawn with |xi| in (0.1 delta, delta) and |eta| <= 0.5 |xi|, and
  forces are evaluated with mu = 1 so breakers never engage. The gradient
  check uses central differences with step 1e-6 max(1, |eta|).
  Anti-plane shear samples whose stencil crosses the u_star cut-off are
  counted as discontinuities and left out of the gradient check.
*/
inline AxiomReport check_kernel_axioms( const KernelModel& model, int dim,
                                        int samples, std::uint64_t seed )
{
    AxiomReport report;
    report.family = std::string( family_name( model ) );
    report.samples = samples;

    double delta = horizon_of( model );
    if ( !std::isfinite( delta ) )
        delta = 1.0;

    std::mt19937_64 rng( seed );
    std::uniform_real_distribution<double> unit( 0.0, 1.0 );

    const auto* shear = std::get_if<AntiPlaneShear>( &model );

    for ( int k = 0; k < samples; ++k )
    {
        const double r0 = delta * ( 0.1 + 0.9 * unit( rng ) );
        const Vec3 xi = r0 * detail::random_direction( rng, dim );
        const double eta_len =
            0.5 * r0 * std::pow( unit( rng ), 1.0 / static_cast<double>( dim ) );
        const Vec3 eta = eta_len * detail::random_direction( rng, dim );

        const Vec3 f = pairwise_force( model, xi, eta );
        const Vec3 f_mirror = pairwise_force( model, -xi, -eta );
        const double f_norm = norm( f );

        report.max_antisymmetry = std::max(
            report.max_antisymmetry,
            detail::relative( norm( f + f_mirror ), f_norm ) );

        const Vec3 y = xi + eta;
        report.max_collinearity = std::max(
            report.max_collinearity,
            detail::relative( norm( cross( y, f ) ), norm( y ) * f_norm ) );

        const double step = 1e-6 * std::max( 1.0, norm( eta ) );

        if ( shear && stencil_crosses_cutoff( *shear, xi, eta, step, dim ) )
        {
            ++report.discontinuities;
            continue;
        }

        Vec3 grad;
        for ( int a = 0; a < dim; ++a )
        {
            Vec3 ep = eta, em = eta;
            ep[a] += step;
            em[a] -= step;
            grad[a] = ( potential( model, xi, ep ) - potential( model, xi, em ) ) /
                      ( 2.0 * step );
        }
        report.max_gradient =
            std::max( report.max_gradient,
                      detail::relative( norm( f - grad ),
                                        std::max( f_norm, norm( grad ) ) ) );
        ++report.gradient_samples;
    }
    return report;
}

} // namespace bbpd

#endif // BBPD_AXIOMS_HPP
