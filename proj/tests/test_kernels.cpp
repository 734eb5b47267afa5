#include "oracles.hpp"

#include <bbpd/axioms.hpp>
#include <bbpd/kernels.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace bbpd;

namespace
{

MicroModulus cylinder( double c0, double delta = 1.0 )
{
    return { MicroModulusFamily::cylindrical, c0, delta };
}

//! One representative of each family with a finite horizon of 1.
std::vector<KernelModel> all_families( int dim )
{
    return {
        AntiPlaneShear{ 2.0, 0.3, 1.0 },
        QuadraticPotential{ 0.7, {}, 1.0 },
        PMB{ cylinder( 3.0 ), {} },
        ConstructiveRod{ { MicroModulusFamily::triangular, 2.0, 1.0 } },
        Convolution( { MicroModulusFamily::quartic, 1.5, 1.0 }, 3 ),
        NonlinearP( 1.2, 3.0, 0.5, dim, 1.0 ),
        NanoMembrane{ 1.0, 1.3, {}, 1.0 },
        NanoFiber{ 1.0, 1.1, 1e-4, 2e-4, 1.0, {} },
    };
}

Vec3 random_vec( std::mt19937_64& rng, double scale )
{
    std::uniform_real_distribution<double> u( -1.0, 1.0 );
    return Vec3{ u( rng ), u( rng ), u( rng ) } * scale;
}

double scalar_along( const Vec3& f, const Vec3& y )
{
    return dot( f, y ) / norm( y );
}

} // namespace

TEST( BondStretch, Examples )
{
    EXPECT_EQ( bond_stretch( { 1.0, 0.0 }, { 0.0, 0.0 } ), 0.0 );
    EXPECT_NEAR( bond_stretch( { 1.0, 0.0 }, { 0.1, 0.0 } ), 0.1, 1e-15 );
    const double a = 0.7;
    const Vec3 xi{ 3.0, 4.0 };
    const Vec3 rotated{ std::cos( a ) * 3.0 - std::sin( a ) * 4.0,
                        std::sin( a ) * 3.0 + std::cos( a ) * 4.0 };
    EXPECT_NEAR( bond_stretch( xi, rotated - xi ), 0.0, 1e-15 );
    EXPECT_THROW( bond_stretch( {}, { 1.0 } ), InputError );
}

TEST( BondStretch, NeverBelowMinusOne )
{
    std::mt19937_64 rng( 5 );
    for ( int k = 0; k < 1000; ++k )
        EXPECT_GE( bond_stretch( random_vec( rng, 1.0 ) + Vec3{ 2.0 }, random_vec( rng, 5.0 ) ),
                   -1.0 );
}

TEST( MicroModulus, Examples )
{
    const double d = 2.0;
    EXPECT_EQ( micromodulus_eval( cylinder( 1.0, d ), { 1.3 } ), 1.0 );
    EXPECT_EQ( micromodulus_eval( { MicroModulusFamily::triangular, 1.0, d }, { d / 2 } ), 0.5 );
    EXPECT_NEAR( micromodulus_eval( { MicroModulusFamily::quartic, 1.0, d }, { d / std::sqrt( 2.0 ) } ),
                 0.25, 1e-15 );
    EXPECT_EQ( micromodulus_eval( cylinder( 1.0, d ), { 2.5 } ), 0.0 );
}

TEST( MicroModulus, ShapeAxioms )
{
    const double d = 1.5;
    for ( auto fam : { MicroModulusFamily::cylindrical, MicroModulusFamily::triangular,
                       MicroModulusFamily::normal, MicroModulusFamily::quartic } )
    {
        const MicroModulus mm{ fam, 1.0, d };
        double previous = mm( 1e-9 );
        for ( int k = 1; k <= 100; ++k )
        {
            const double r = d * k / 100.0;
            EXPECT_EQ( mm( r ), micromodulus_eval( mm, Vec3{ -r } ) );
            EXPECT_LE( mm( r ), previous );
            previous = mm( r );
        }
    }
    EXPECT_EQ( MicroModulus( MicroModulusFamily::triangular, 1.0, d )( d ), 0.0 );
    EXPECT_EQ( MicroModulus( MicroModulusFamily::quartic, 1.0, d )( d ), 0.0 );
    EXPECT_EQ( MicroModulus( MicroModulusFamily::cylindrical, 1.0, d )( d ), 1.0 );
    EXPECT_DOUBLE_EQ( MicroModulus( MicroModulusFamily::normal, 1.0, d )( d ), std::exp( -1.0 ) );
}

TEST( Calibration, ThreeDimensionalPmb )
{
    EXPECT_NEAR( calibrate_pmb_c( 1.0, 1.0 ), 5.72958, 1e-5 );
    EXPECT_NEAR( calibrate_pmb_c( 1.0, 2.0 ), 0.35810, 1e-5 );
    EXPECT_DOUBLE_EQ( calibrate_pmb_c( 1.0, 1.0 ), 18.0 / std::numbers::pi );
    EXPECT_THROW( calibrate_pmb_c( 0.0, 1.0 ), InputError );
    EXPECT_THROW( calibrate_pmb_c( 1.0, -1.0 ), InputError );
}

TEST( PairwiseForce, PmbExample )
{
    const KernelModel pmb = PMB{ cylinder( 1.0, infinity ), {} };
    const Vec3 f = pairwise_force( pmb, { 1.0, 0.0 }, { 0.5, 0.0 } );
    EXPECT_DOUBLE_EQ( f[0], 0.5 );
    EXPECT_EQ( f[1], 0.0 );
}

TEST( PairwiseForce, BrokenBondCarriesNothing )
{
    const BondBreaker brk{ BreakerMode::critical_stretch, 0.01, 1.0 };
    const std::vector<KernelModel> models{
        PMB{ cylinder( 1.0 ), brk }, NanoMembrane{ 1.0, 1.0, brk, 1.0 },
        NanoFiber{ 1.0, 1.0, 0.5, 0.5, 1.0, brk }, AntiPlaneShear{ 1.0, 0.1, 1.0 } };
    for ( const auto& m : models )
    {
        const Vec3 f = pairwise_force( m, { 0.5, 0.1 }, { 0.05, 0.0 }, 0.0 );
        EXPECT_EQ( f, Vec3{} ) << family_name( m );
    }
}

TEST( PairwiseForce, NonlinearPExample )
{
    const KernelModel k = NonlinearP( 1.0, 2.0, 0.5, 1 );
    EXPECT_DOUBLE_EQ( pairwise_force( k, { 1.0 }, { 0.0 } )[0], 2.0 );
}

TEST( PairwiseForce, QuadraticAtRest )
{
    const KernelModel k = QuadraticPotential{ 1.0, {}, infinity };
    EXPECT_EQ( pairwise_force( k, { 1.0, 0.0 }, { 0.0, 0.0 } ), Vec3{} );
}

TEST( PairwiseForce, ZeroOutsideHorizon )
{
    for ( const auto& m : all_families( 3 ) )
        EXPECT_EQ( pairwise_force( m, { 0.8, 0.8, 0.0 }, { 0.1, 0.0, 0.0 } ), Vec3{} )
            << family_name( m );
}

TEST( PairwiseForce, InterpenetrationIsSingular )
{
    const Vec3 xi{ 0.5, 0.0 };
    for ( const KernelModel& m :
          std::vector<KernelModel>{ PMB{ cylinder( 1.0 ), {} }, ConstructiveRod{ cylinder( 1.0 ) },
                                    NanoMembrane{}, NanoFiber{} } )
        EXPECT_THROW( pairwise_force( m, xi, -xi ), SingularConfiguration ) << family_name( m );
}

TEST( PairwiseForce, AntiPlaneShearCutOff )
{
    const KernelModel k = AntiPlaneShear{ 2.0, 0.1, infinity };
    EXPECT_NEAR( pairwise_force( k, { 1.0 }, { 0.05 } )[0], 0.1, 1e-15 );
    EXPECT_EQ( pairwise_force( k, { 1.0 }, { 0.2 } )[0], 0.0 );
    EXPECT_DOUBLE_EQ( bond_critical_stretch( k, 2.0 ), 0.05 );
}

TEST( PairwiseForce, MatchesClosedFormScalars )
{
    std::mt19937_64 rng( 11 );
    for ( int k = 0; k < 200; ++k )
    {
        Vec3 xi = random_vec( rng, 0.5 );
        if ( norm( xi ) < 0.05 )
            continue;
        const Vec3 eta = random_vec( rng, 0.2 * norm( xi ) );
        const Vec3 y = xi + eta;
        const double r0 = oracle::len( xi ), r = oracle::len( y );

        EXPECT_NEAR( scalar_along( pairwise_force( PMB{ cylinder( 3.0 ), {} }, xi, eta ), y ),
                     oracle::pmb_scalar( 3.0, r0, r ), 1e-12 * ( 1 + std::abs( r - r0 ) ) );
        EXPECT_NEAR( scalar_along( pairwise_force( ConstructiveRod{ cylinder( 2.0 ) }, xi, eta ), y ),
                     oracle::rod_scalar( 2.0, r0, r ), 1e-11 );
        EXPECT_NEAR( scalar_along( pairwise_force( QuadraticPotential{ 0.7, {}, 1.0 }, xi, eta ), y ),
                     oracle::quadratic_scalar( 0.7, r0, r ), 1e-12 );
        EXPECT_NEAR( scalar_along( pairwise_force( Convolution( cylinder( 1.5 ), 5 ), xi, eta ), y ),
                     oracle::convolution_scalar( 1.5, 5, r ), 1e-12 );
        EXPECT_NEAR( scalar_along( pairwise_force( NonlinearP( 1.2, 3.0, 0.4, 2, 1.0 ), xi, eta ), y ),
                     oracle::nonlinear_p_scalar( 1.2, 3.0, 0.4, 2, r0, r ),
                     1e-10 * oracle::nonlinear_p_scalar( 1.2, 3.0, 0.4, 2, r0, r ) );
        EXPECT_NEAR( scalar_along( pairwise_force( NanoMembrane{ 1.0, 1.3, {}, 1.0 }, xi, eta ), y ),
                     oracle::membrane_scalar( 1.0, 1.3, r0, r ),
                     1e-12 * ( 1 + std::abs( oracle::membrane_scalar( 1.0, 1.3, r0, r ) ) ) );
        const double fiber = oracle::membrane_scalar( 1.0, 1.1, r0, r ) +
                             oracle::vdw_scalar( 1e-4, 2e-4, 1.0, r );
        EXPECT_NEAR( scalar_along( pairwise_force( NanoFiber{ 1.0, 1.1, 1e-4, 2e-4, 1.0, {} }, xi, eta ), y ),
                     fiber, 1e-10 * ( 1 + std::abs( fiber ) ) );
    }
}

TEST( PairwiseForce, PmbLinearizesToBondStiffness )
{
    const KernelModel k = PMB{ cylinder( 2.0 ), {} };
    const Vec3 xi{ 0.3, 0.4 };
    const Vec3 e = xi / norm( xi );
    const Vec3 dir = Vec3{ 0.6, -0.2, 0.0 } / norm( Vec3{ 0.6, -0.2, 0.0 } );
    double previous = infinity;
    for ( double eps : { 1e-2, 1e-3, 1e-4, 1e-5 } )
    {
        const Vec3 eta = eps * dir;
        const Vec3 lin = ( 2.0 / norm( xi ) * dot( eta, e ) ) * e;
        const double rel = norm( pairwise_force( k, xi, eta ) - lin ) / norm( eta );
        EXPECT_LT( rel, previous );
        previous = rel;
    }
    EXPECT_LT( previous, 1e-3 );
}

TEST( Potential, Examples )
{
    const KernelModel pmb = PMB{ cylinder( 1.0, infinity ), {} };
    EXPECT_DOUBLE_EQ( potential( pmb, { 1.0, 0.0 }, { 0.5, 0.0 } ), 0.125 );
    EXPECT_DOUBLE_EQ( potential( NonlinearP( 1.0, 2.0, 0.5, 1 ), { 1.0 }, { 0.5 } ), 2.25 );
    EXPECT_THROW( potential( pmb, {}, { 1.0 } ), InputError );
}

TEST( Potential, UndeformedStretchTypeBondsStoreNothing )
{
    const Vec3 xi{ 0.3, -0.2, 0.4 };
    for ( const auto& m : all_families( 3 ) )
    {
        const auto name = family_name( m );
        if ( name == "convolution" || name == "nonlinear_p" )
            continue;
        EXPECT_NEAR( potential( m, xi, {} ), 0.0, 1e-15 ) << name;
    }
}

TEST( Potential, NanoKernelsDivergeAtContact )
{
    const Vec3 xi{ 0.5 };
    EXPECT_EQ( potential( NanoMembrane{}, xi, -xi ), infinity );
    EXPECT_EQ( potential( NanoFiber{}, xi, -xi ), infinity );
}

TEST( Breaker, Examples )
{
    double mu = 1.0, acc = 0.0;
    const BondBreaker cs{ BreakerMode::critical_stretch, 0.1, 1.0 };
    EXPECT_EQ( update_breaker( cs, cs.s0, 0.05, 0.1, mu, acc ), 1.0 );
    EXPECT_EQ( update_breaker( cs, cs.s0, 0.1, 0.1, mu, acc ), 0.0 );
    EXPECT_EQ( update_breaker( cs, cs.s0, 0.0, 0.1, mu, acc ), 0.0 );

    const double eps = 0.2;
    EXPECT_DOUBLE_EQ( theta_eps( eps / 2, eps ), 0.5 );
    EXPECT_EQ( theta_eps( eps, eps ), 0.0 );
    EXPECT_EQ( theta_eps( 3 * eps, eps ), 0.0 );
    EXPECT_EQ( theta_eps( 0.0, eps ), 1.0 );

    const BondBreaker te{ BreakerMode::theta_eps, 0.1, eps };
    mu = 1.0;
    acc = 0.0;
    // accumulator += (0.3 - 0.1) * 0.5 = eps / 2
    EXPECT_DOUBLE_EQ( update_breaker( te, te.s0, 0.3, 0.5, mu, acc ), 0.5 );
    EXPECT_DOUBLE_EQ( acc, 0.1 );
    EXPECT_THROW( update_breaker( te, te.s0, 0.3, 0.0, mu, acc ), InputError );
}

TEST( Breaker, MuNeverRecovers )
{
    std::mt19937_64 rng( 3 );
    std::uniform_real_distribution<double> s( -0.2, 0.4 );
    for ( auto mode : { BreakerMode::critical_stretch, BreakerMode::theta_eps } )
    {
        const BondBreaker b{ mode, 0.1, 0.05 };
        double mu = 1.0, acc = 0.0;
        for ( int k = 0; k < 500; ++k )
        {
            const double before = mu;
            update_breaker( b, b.s0, s( rng ), 0.01, mu, acc );
            ASSERT_LE( mu, before );
            ASSERT_GE( mu, 0.0 );
        }
    }
}

TEST( Construction, RejectsInadmissibleParameters )
{
    EXPECT_THROW( Convolution( cylinder( 1.0 ), 2 ), InputError );
    EXPECT_THROW( Convolution( cylinder( 1.0 ), 1 ), InputError );
    EXPECT_NO_THROW( Convolution( cylinder( 1.0 ), 7 ) );
    EXPECT_THROW( NonlinearP( 1.0, 1.5, 0.5, 2 ), InputError );
    EXPECT_THROW( NonlinearP( 0.0, 2.0, 0.5, 2 ), InputError );
    try
    {
        NonlinearP( 1.0, 2.0, 1.5, 2 );
        FAIL() << "alpha = 1.5 accepted";
    }
    catch ( const InputError& e )
    {
        EXPECT_NE( std::string( e.what() ).find( "α ∈ (0,1)" ), std::string::npos );
    }
}

TEST( Axioms, EveryFamilyPassesInEachDimension )
{
    for ( int dim : { 1, 2, 3 } )
        for ( const auto& m : all_families( dim ) )
        {
            const auto rep = check_kernel_axioms( m, dim, 1000, 42 );
            EXPECT_TRUE( rep.passed() )
                << rep.family << " dim " << dim << ": " << rep.max_antisymmetry << " "
                << rep.max_collinearity << " " << rep.max_gradient;
            EXPECT_EQ( rep.samples, 1000 );
        }
}

TEST( Axioms, PmbWellBelowLooseBound )
{
    const KernelModel pmb = PMB{ { MicroModulusFamily::cylindrical, calibrate_pmb_c( 1.0, 1.0 ), 1.0 }, {} };
    const auto rep = check_kernel_axioms( pmb, 3, 1000, 7 );
    EXPECT_LT( rep.max_antisymmetry, 1e-8 );
    EXPECT_LT( rep.max_collinearity, 1e-8 );
    EXPECT_LT( rep.max_gradient, 1e-6 );
}

TEST( Axioms, NonlinearPIsCollinear )
{
    const auto rep = check_kernel_axioms( NonlinearP( 1.0, 2.5, 0.3, 3, 1.0 ), 3, 1000, 9 );
    EXPECT_LT( rep.max_collinearity, 1e-12 );
}

TEST( Axioms, AntiPlaneShearFlagsThresholdCrossings )
{
    // u_star chosen so many samples sit near the cut-off.
    const KernelModel k = AntiPlaneShear{ 1.0, 1e-6, 1.0 };
    const auto rep = check_kernel_axioms( k, 1, 1000, 1 );
    EXPECT_EQ( rep.gradient_samples + rep.discontinuities, rep.samples );


    const AntiPlaneShear cut{ 1.0, 0.1, 1.0 };
    EXPECT_TRUE( stencil_crosses_cutoff( cut, { 0.5 }, { 0.1 }, 1e-6, 1 ) );
    EXPECT_FALSE( stencil_crosses_cutoff( cut, { 0.5 }, { 0.05 }, 1e-6, 1 ) );
    EXPECT_FALSE( stencil_crosses_cutoff( cut, { 0.5 }, { 0.2 }, 1e-6, 1 ) );
}

TEST( Axioms, DetectsBrokenAntisymmetry )
{
    NonlinearP k( 1.0, 2.0, 0.5, 3, 1.0 );
    k.with_perturbation( []( const Vec3&, const Vec3& ) { return Vec3{ 1.0, 0.0, 0.0 }; },
                         []( const Vec3&, const Vec3& eta ) { return eta[0]; } );
    const auto rep = check_kernel_axioms( k, 3, 200, 3 );
    EXPECT_FALSE( rep.passed() );
    EXPECT_GT( rep.max_antisymmetry, 1e-3 );
}

TEST( Stiffness, MatchesDirectionalDerivative )
{
    const double r0 = 0.6;
    const Vec3 xi{ r0 };
    for ( const auto& m : all_families( 1 ) )
    {
        const double h = 1e-7;
        const double along =
            std::abs( ( pairwise_force( m, xi, { h } )[0] - pairwise_force( m, xi, { -h } )[0] ) /
                      ( 2 * h ) );
        const double f0 = std::abs( pairwise_force( m, xi, {} )[0] );
        EXPECT_NEAR( bond_stiffness( m, r0 ), std::max( along, f0 / r0 ),
                     1e-5 * std::max( 1.0, along ) )
            << family_name( m );
    }
}
