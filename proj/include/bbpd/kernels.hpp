#ifndef BBPD_KERNELS_HPP
#define BBPD_KERNELS_HPP

#include <bbpd/discretization.hpp>
#include <bbpd/vec.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace bbpd
{

inline constexpr double infinity = std::numeric_limits<double>::infinity();

//! True when a bond of reference length r lies inside the horizon.
inline bool within_horizon( double r, double delta )
{
    return r <= delta * ( 1.0 + horizon_tolerance );
}

//---------------------------------------------------------------------------//
// Micro-modulus functions c(xi, delta) = c0 * k(xi, delta).
//---------------------------------------------------------------------------//
enum class MicroModulusFamily
{
    cylindrical,
    triangular,
    normal,
    quartic
};

struct MicroModulus
{
    MicroModulusFamily family = MicroModulusFamily::cylindrical;
    double c0 = 1.0;
    double delta = 1.0;

    //! Shape factor k(xi, delta); zero outside the horizon.
    double shape( double r ) const
    {
        if ( !within_horizon( r, delta ) )
            return 0.0;
        const double q = r / delta;
        switch ( family )
        {
        case MicroModulusFamily::cylindrical:
            return 1.0;
        case MicroModulusFamily::triangular:
            return std::max( 0.0, 1.0 - q );
        case MicroModulusFamily::normal:
            return std::exp( -q * q );
        case MicroModulusFamily::quartic:
        {
            const double t = std::max( 0.0, 1.0 - q * q );
            return t * t;
        }
        }
        return 0.0;
    }

    double operator()( double r ) const { return c0 * shape( r ); }
};

inline double micromodulus_eval( const MicroModulus& mm, const Vec3& xi )
{
    return mm( norm( xi ) );
}

//! Three-dimensional PMB calibration against the bulk modulus.
inline double calibrate_pmb_c( double bulk_modulus, double delta )
{
    if ( !( bulk_modulus > 0.0 ) || !( delta > 0.0 ) )
        throw InputError( "calibrate_pmb_c: bulk modulus and delta must be "
                          "positive" );
    return 18.0 * bulk_modulus / ( std::numbers::pi * std::pow( delta, 4 ) );
}

//---------------------------------------------------------------------------//
// Bond breaking.
//---------------------------------------------------------------------------//
enum class BreakerMode
{
    none,
    critical_stretch,
    theta_eps
};

struct BondBreaker
{
    BreakerMode mode = BreakerMode::none;
    double s0 = infinity;
    double eps = 1.0;
};

//! Regularized indicator: 1 for r <= 0, 1 - r/eps on (0, eps), 0 beyond.
inline double theta_eps( double r, double eps )
{
    if ( r <= 0.0 )
        return 1.0;
    if ( r >= eps )
        return 0.0;
    return 1.0 - r / eps;
}

//! Per-bond breaking history, indexed like BondNetwork::bonds.
struct BreakerState
{
    std::vector<double> mu;
    //! Time integral of max(0, s - s0).
    std::vector<double> accumulator;

    BreakerState() = default;
    explicit BreakerState( std::size_t num_bonds )
        : mu( num_bonds, 1.0 )
        , accumulator( num_bonds, 0.0 )
    {
    }
};

/*!
  Advance one bond's breaking factor by a step of length dt at stretch s.
  Returns the new mu; `mu` and `accumulator` are updated in place.
*/
inline double update_breaker( const BondBreaker& breaker, double s0, double s,
                              double dt, double& mu, double& accumulator )
{
    if ( !( dt > 0.0 ) )
        throw InputError( "update_breaker: dt must be positive" );
    switch ( breaker.mode )
    {
    case BreakerMode::none:
        break;
    case BreakerMode::critical_stretch:
        if ( s >= s0 )
            mu = 0.0;
        break;
    case BreakerMode::theta_eps:
        accumulator += std::max( 0.0, s - s0 ) * dt;
        mu = std::min( mu, theta_eps( accumulator, breaker.eps ) );
        break;
    }
    return mu;
}

//---------------------------------------------------------------------------//
// Kernel families.
//---------------------------------------------------------------------------//

//! Spring force cut off once the bond elongation exceeds u_star.
struct AntiPlaneShear
{
    double c = 1.0;
    double u_star = infinity;
    double delta = infinity;
};

//! Potential alpha(|xi|) (|xi+eta|^2 - |xi|^2)^2, force coefficient 4 alpha.
struct QuadraticPotential
{
    double alpha = 1.0;
    //! Optional piecewise-linear alpha(|xi|) as (|xi|, alpha) knots sorted
    //! by |xi|; overrides `alpha` when non-empty.
    std::vector<std::pair<double, double>> alpha_table;
    double delta = infinity;

    double alpha_at( double r ) const
    {
        if ( alpha_table.empty() )
            return alpha;
        if ( r <= alpha_table.front().first )
            return alpha_table.front().second;
        if ( r >= alpha_table.back().first )
            return alpha_table.back().second;
        auto hi = std::lower_bound(
            alpha_table.begin(), alpha_table.end(), r,
            []( const auto& k, double v ) { return k.first < v; } );
        auto lo = hi - 1;
        const double t = ( r - lo->first ) / ( hi->first - lo->first );
        return lo->second + t * ( hi->second - lo->second );
    }
};

//! Prototype micro-elastic brittle material, force c(xi) s mu n.
struct PMB
{
    MicroModulus micromodulus;
    BondBreaker breaker;
};

struct ConstructiveRod
{
    MicroModulus micromodulus;
};

//! C(xi) |xi+eta|^(r-1) (xi+eta): the odd power of the deformed bond.
class Convolution
{
  public:
    Convolution() = default;
    Convolution( MicroModulus micromodulus, int r )
        : micromodulus_( micromodulus )
        , r_( r )
    {
        if ( r <= 1 || r % 2 == 0 )
            throw InputError( "convolution kernel: r must be an odd integer "
                              "> 1" );
    }
    const MicroModulus& micromodulus() const { return micromodulus_; }
    int r() const { return r_; }

  private:
    MicroModulus micromodulus_;
    int r_ = 3;
};

/*!
  Nonlinear hyperelastic kernel with potential
  kappa |xi+eta|^p / |xi|^(N + alpha p) + Psi.
*/
class NonlinearP
{
  public:
    using Perturbation = std::function<Vec3( const Vec3&, const Vec3& )>;
    using PerturbationPotential =
        std::function<double( const Vec3&, const Vec3& )>;

    NonlinearP() = default;
    NonlinearP( double kappa, double p, double alpha, int dim,
                double delta = infinity )
        : kappa_( kappa )
        , p_( p )
        , alpha_( alpha )
        , dim_( dim )
        , delta_( delta )
    {
        if ( !( kappa > 0.0 ) )
            throw InputError( "nonlinear_p kernel: kappa must be > 0" );
        if ( !( p >= 2.0 ) )
            throw InputError( "nonlinear_p kernel: p must satisfy p >= 2" );
        if ( !( alpha > 0.0 && alpha < 1.0 ) )
            throw InputError( "nonlinear_p kernel: alpha must satisfy "
                              "α ∈ (0,1)" );
        if ( dim < 1 || dim > 3 )
            throw InputError( "nonlinear_p kernel: dim must be 1, 2 or 3" );
    }

    //! Smooth perturbation psi (force) with its potential Psi.
    NonlinearP& with_perturbation( Perturbation psi, PerturbationPotential Psi )
    {
        psi_ = std::move( psi );
        Psi_ = std::move( Psi );
        return *this;
    }

    double kappa() const { return kappa_; }
    double p() const { return p_; }
    double alpha() const { return alpha_; }
    int dim() const { return dim_; }
    double delta() const { return delta_; }
    const Perturbation& psi() const { return psi_; }
    const PerturbationPotential& Psi() const { return Psi_; }
    bool perturbed() const { return static_cast<bool>( psi_ ); }

  private:
    double kappa_ = 1.0;
    double p_ = 2.0;
    double alpha_ = 0.5;
    int dim_ = 1;
    double delta_ = infinity;
    Perturbation psi_;
    PerturbationPotential Psi_;
};

//! Rubbery membrane: (2c/|xi|)(lambda - lambda^-3) g mu n.
struct NanoMembrane
{
    double c = 1.0;
    double g = 1.0;
    BondBreaker breaker;
    double delta = infinity;
};

//! Membrane term plus a van der Waals pair term in |xi+eta|.
struct NanoFiber
{
    double c = 1.0;
    double g = 1.0;
    double alpha_vdw = 0.0;
    double beta_vdw = 0.0;
    double delta = 1.0;
    BondBreaker breaker;
};

using KernelModel = std::variant<AntiPlaneShear, QuadraticPotential, PMB,
                                 ConstructiveRod, Convolution, NonlinearP,
                                 NanoMembrane, NanoFiber>;

inline constexpr std::string_view family_names[] = {
    "anti_plane_shear", "quadratic_potential", "pmb",        "constructive_rod",
    "convolution",      "nonlinear_p",         "nano_membrane", "nano_fiber" };

inline std::string_view family_name( const KernelModel& model )
{
    return family_names[model.index()];
}

//! Horizon radius beyond which the model's force vanishes.
inline double horizon_of( const KernelModel& model )
{
    struct Visitor
    {
        double operator()( const AntiPlaneShear& k ) const { return k.delta; }
        double operator()( const QuadraticPotential& k ) const { return k.delta; }
        double operator()( const PMB& k ) const { return k.micromodulus.delta; }
        double operator()( const ConstructiveRod& k ) const
        {
            return k.micromodulus.delta;
        }
        double operator()( const Convolution& k ) const
        {
            return k.micromodulus().delta;
        }
        double operator()( const NonlinearP& k ) const { return k.delta(); }
        double operator()( const NanoMembrane& k ) const { return k.delta; }
        double operator()( const NanoFiber& k ) const { return k.delta; }
    };
    return std::visit( Visitor{}, model );
}

//! Breaker attached to a family; families without one report mode none.
inline BondBreaker breaker_of( const KernelModel& model )
{
    if ( const auto* k = std::get_if<PMB>( &model ) )
        return k->breaker;
    if ( const auto* k = std::get_if<NanoMembrane>( &model ) )
        return k->breaker;
    if ( const auto* k = std::get_if<NanoFiber>( &model ) )
        return k->breaker;
    if ( const auto* k = std::get_if<AntiPlaneShear>( &model ) )
        if ( std::isfinite( k->u_star ) )
            return { BreakerMode::critical_stretch, 0.0, 1.0 };
    return {};
}

/*!
  Critical stretch for one bond. The anti-plane shear cut-off is an absolute
  elongation u_star, which becomes the stretch u_star/|xi| per bond.
*/
inline double bond_critical_stretch( const KernelModel& model, double xi_norm )
{
    if ( const auto* k = std::get_if<AntiPlaneShear>( &model ) )
        return k->u_star / xi_norm;
    return breaker_of( model ).s0;
}

//---------------------------------------------------------------------------//
// Force and potential evaluation.
//---------------------------------------------------------------------------//

inline double bond_stretch( const Vec3& xi, const Vec3& eta )
{
    const double r0 = norm( xi );
    if ( !( r0 > 0.0 ) )
        throw InputError( "bond_stretch: |xi| must be positive" );
    return ( norm( xi + eta ) - r0 ) / r0;
}

namespace detail
{

inline Vec3 unit_bond( const Vec3& y, double r )
{
    if ( !( r > 0.0 ) )
        throw SingularConfiguration(
            "pairwise force: deformed bond has zero length "
            "(interpenetration)" );
    return y / r;
}

inline double pow_int( double x, int n )
{
    double out = 1.0;
    for ( int k = 0; k < n; ++k )
        out *= x;
    return out;
}

struct ForceVisitor
{
    Vec3 xi;
    Vec3 eta;
    double mu;

    Vec3 operator()( const AntiPlaneShear& k ) const
    {
        const double r0 = norm( xi );
        if ( !within_horizon( r0, k.delta ) )
            return {};
        const Vec3 y = xi + eta;
        const double r = norm( y );
        if ( r - r0 > k.u_star )
            return {};
        const Vec3 n = unit_bond( y, r );
        return ( k.c * ( r - r0 ) * mu ) * n;
    }

    Vec3 operator()( const QuadraticPotential& k ) const
    {
        const double r0 = norm( xi );
        if ( !within_horizon( r0, k.delta ) )
            return {};
        const Vec3 y = xi + eta;
        const double a = 4.0 * k.alpha_at( r0 );
        return ( a * ( dot( y, y ) - r0 * r0 ) * mu ) * y;
    }

    Vec3 operator()( const PMB& k ) const
    {
        const double r0 = norm( xi );
        if ( !within_horizon( r0, k.micromodulus.delta ) )
            return {};
        const double c = k.micromodulus( r0 );
        const Vec3 y = xi + eta;
        const double r = norm( y );
        const Vec3 n = unit_bond( y, r );
        return ( c * ( ( r - r0 ) / r0 ) * mu ) * n;
    }

    Vec3 operator()( const ConstructiveRod& k ) const
    {
        const double r0 = norm( xi );
        if ( !within_horizon( r0, k.micromodulus.delta ) )
            return {};
        const double c = k.micromodulus( r0 );
        const Vec3 y = xi + eta;
        const double r = norm( y );
        const Vec3 n = unit_bond( y, r );
        return ( c * ( r - r0 ) / ( r0 * r0 ) * mu ) * n;
    }

    Vec3 operator()( const Convolution& k ) const
    {
        const double r0 = norm( xi );
        if ( !within_horizon( r0, k.micromodulus().delta ) )
            return {};
        const Vec3 y = xi + eta;
        const double r = norm( y );
        return ( k.micromodulus()( r0 ) * pow_int( r, k.r() - 1 ) * mu ) * y;
    }

    Vec3 operator()( const NonlinearP& k ) const
    {
        const double r0 = norm( xi );
        if ( !within_horizon( r0, k.delta() ) )
            return {};
        const Vec3 y = xi + eta;
        const double r = norm( y );
        const double rp2 = k.p() == 2.0 ? 1.0 : std::pow( r, k.p() - 2.0 );
        const double denom = std::pow( r0, k.dim() + k.alpha() * k.p() );
        Vec3 f = ( k.kappa() * k.p() * rp2 / denom ) * y;
        if ( k.perturbed() )
            f += k.psi()( xi, eta );
        return mu * f;
    }

    static double membrane_scalar( double c, double g, double r0, double r )
    {
        const double lambda = r / r0;
        return 2.0 * c / r0 * ( lambda - 1.0 / ( lambda * lambda * lambda ) ) * g;
    }

    Vec3 operator()( const NanoMembrane& k ) const
    {
        const double r0 = norm( xi );
        if ( !within_horizon( r0, k.delta ) )
            return {};
        const Vec3 y = xi + eta;
        const double r = norm( y );
        const Vec3 n = unit_bond( y, r );
        return ( membrane_scalar( k.c, k.g, r0, r ) * mu ) * n;
    }

    Vec3 operator()( const NanoFiber& k ) const
    {
        const double r0 = norm( xi );
        if ( !within_horizon( r0, k.delta ) )
            return {};
        const Vec3 y = xi + eta;
        const double r = norm( y );
        const Vec3 n = unit_bond( y, r );
        const double q = k.delta / r;
        const double vdw = -12.0 * k.alpha_vdw / k.delta * std::pow( q, 13 ) +
                           6.0 * k.beta_vdw / k.delta * std::pow( q, 7 );
        return ( membrane_scalar( k.c, k.g, r0, r ) * mu + vdw ) * n;
    }
};

struct PotentialVisitor
{
    Vec3 xi;
    Vec3 eta;

    double operator()( const AntiPlaneShear& k ) const
    {
        const double r0 = norm( xi );
        if ( !within_horizon( r0, k.delta ) )
            return 0.0;
        const double e = std::min( norm( xi + eta ) - r0, k.u_star );
        return 0.5 * k.c * e * e;
    }

    double operator()( const QuadraticPotential& k ) const
    {
        const double r0 = norm( xi );
        if ( !within_horizon( r0, k.delta ) )
            return 0.0;
        const Vec3 y = xi + eta;
        const double d = dot( y, y ) - r0 * r0;
        return k.alpha_at( r0 ) * d * d;
    }

    double operator()( const PMB& k ) const
    {
        const double r0 = norm( xi );
        const double e = norm( xi + eta ) - r0;
        return k.micromodulus( r0 ) * e * e / ( 2.0 * r0 );
    }

    double operator()( const ConstructiveRod& k ) const
    {
        const double r0 = norm( xi );
        const double e = norm( xi + eta ) - r0;
        return k.micromodulus( r0 ) * e * e / ( 2.0 * r0 * r0 );
    }

    double operator()( const Convolution& k ) const
    {
        const double r0 = norm( xi );
        const double r = norm( xi + eta );
        return k.micromodulus()( r0 ) / ( k.r() + 1 ) *
               pow_int( r, k.r() + 1 );
    }

    double operator()( const NonlinearP& k ) const
    {
        const double r0 = norm( xi );
        if ( !within_horizon( r0, k.delta() ) )
            return 0.0;
        const double r = norm( xi + eta );
        double phi = k.kappa() * std::pow( r, k.p() ) /
                     std::pow( r0, k.dim() + k.alpha() * k.p() );
        if ( k.Psi() )
            phi += k.Psi()( xi, eta );
        return phi;
    }

    static double membrane_potential( double c, double g, double r0, double r )
    {
        if ( r == 0.0 )
            return infinity;
        const double lambda = r / r0;
        const double d = lambda - 1.0 / lambda;
        return c * g * d * d;
    }

    double operator()( const NanoMembrane& k ) const
    {
        const double r0 = norm( xi );
        if ( !within_horizon( r0, k.delta ) )
            return 0.0;
        return membrane_potential( k.c, k.g, r0, norm( xi + eta ) );
    }

    double operator()( const NanoFiber& k ) const
    {
        const double r0 = norm( xi );
        if ( !within_horizon( r0, k.delta ) )
            return 0.0;
        const double r = norm( xi + eta );
        if ( r == 0.0 )
            return infinity;
        auto lj = [&]( double d ) {
            const double q6 = std::pow( k.delta / d, 6 );
            return k.alpha_vdw * q6 * q6 - k.beta_vdw * q6;
        };
        return membrane_potential( k.c, k.g, r0, r ) + lj( r ) - lj( r0 );
    }
};

} // namespace detail

/*!
  \brief Pairwise force density f(xi, eta) scaled by the bond's breaking
  factor mu.

  Zero outside the horizon and for broken bonds (mu == 0). Unit-direction
  families throw SingularConfiguration when |xi + eta| == 0.
*/
inline Vec3 pairwise_force( const KernelModel& model, const Vec3& xi,
                            const Vec3& eta, double mu = 1.0 )
{
    if ( mu == 0.0 )
        return {};
    return std::visit( detail::ForceVisitor{ xi, eta, mu }, model );
}

/*!
  \brief Elastic bond potential Phi(xi, eta).

  Returns +inf for the nano kernels at coincident deformed points (their
  potentials diverge there). Throws InputError for |xi| == 0.
*/
inline double potential( const KernelModel& model, const Vec3& xi,
                         const Vec3& eta )
{
    if ( !( norm( xi ) > 0.0 ) )
        throw InputError( "potential: |xi| must be positive" );
    return std::visit( detail::PotentialVisitor{ xi, eta }, model );
}

/*!
  Largest eigenvalue magnitude of the linearized bond stiffness df/deta at
  eta = 0, for a bond of reference length r0. Perturbations are ignored.
*/
inline double bond_stiffness( const KernelModel& model, double r0 )
{
    struct Visitor
    {
        double r0;
        double operator()( const AntiPlaneShear& k ) const
        {
            return within_horizon( r0, k.delta ) ? std::abs( k.c ) : 0.0;
        }
        double operator()( const QuadraticPotential& k ) const
        {
            if ( !within_horizon( r0, k.delta ) )
                return 0.0;
            return std::abs( 8.0 * k.alpha_at( r0 ) * r0 * r0 );
        }
        double operator()( const PMB& k ) const
        {
            return std::abs( k.micromodulus( r0 ) ) / r0;
        }
        double operator()( const ConstructiveRod& k ) const
        {
            return std::abs( k.micromodulus( r0 ) ) / ( r0 * r0 );
        }
        double operator()( const Convolution& k ) const
        {
            return std::abs( k.micromodulus()( r0 ) ) * k.r() *
                   std::pow( r0, k.r() - 1 );
        }
        double operator()( const NonlinearP& k ) const
        {
            if ( !within_horizon( r0, k.delta() ) )
                return 0.0;
            return k.kappa() * k.p() * std::max( k.p() - 1.0, 1.0 ) *
                   std::pow( r0, k.p() - 2.0 ) /
                   std::pow( r0, k.dim() + k.alpha() * k.p() );
        }
        double operator()( const NanoMembrane& k ) const
        {
            if ( !within_horizon( r0, k.delta ) )
                return 0.0;
            return std::abs( 8.0 * k.c * k.g / ( r0 * r0 ) );
        }
        double operator()( const NanoFiber& k ) const
        {
            if ( !within_horizon( r0, k.delta ) )
                return 0.0;
            const double q = k.delta / r0;
            const double d = k.delta;
            const double axial = 8.0 * k.c * k.g / ( r0 * r0 ) +
                                 156.0 * k.alpha_vdw / ( d * d ) * std::pow( q, 14 ) -
                                 42.0 * k.beta_vdw / ( d * d ) * std::pow( q, 8 );
            const double scalar = -12.0 * k.alpha_vdw / d * std::pow( q, 13 ) +
                                  6.0 * k.beta_vdw / d * std::pow( q, 7 );
            return std::max( std::abs( axial ), std::abs( scalar / r0 ) );
        }
    };
    return std::visit( Visitor{ r0 }, model );
}

} // namespace bbpd

#endif // BBPD_KERNELS_HPP
