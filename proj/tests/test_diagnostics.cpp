#include "oracles.hpp"

#include <bbpd/diagnostics.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace bbpd;

namespace
{

KernelModel pmb( double c0, double delta )
{
    return PMB{ { MicroModulusFamily::cylindrical, c0, delta }, {} };
}

struct Pair
{
    PointCloud cloud;
    BondNetwork bonds;
};

//! Two unit cells one apart, one bond each way.
Pair two_points()
{
    Pair p;
    p.cloud = build_grid( 1, Vec3{ 2.0 }, 1.0, 1.0 );
    p.bonds = build_bonds( p.cloud, { 1.5, PartialVolume::linear, 1.0 } );
    return p;
}

Mat3 random_matrix( std::mt19937_64& rng, int dim, double scale )
{
    std::uniform_real_distribution<double> u( -scale, scale );
    Mat3 a{};
    for ( int p = 0; p < dim; ++p )
        for ( int q = 0; q < dim; ++q )
            a[p][q] = u( rng );
    return a;
}

} // namespace

TEST( Energy, ZeroState )
{
    const auto p = two_points();
    const auto e = energy( p.cloud, p.bonds, pmb( 1.0, 1.5 ), SimState( 2 ) );
    EXPECT_EQ( e.kinetic, 0.0 );
    EXPECT_EQ( e.potential, 0.0 );
    EXPECT_FALSE( e.growth_violation );
}

TEST( Energy, SingleBondCountedOnce )
{
    const auto p = two_points();
    SimState s( 2 );
    s.u[1][0] = 0.5;
    const auto e = energy( p.cloud, p.bonds, pmb( 1.0, 1.5 ), s );
    EXPECT_DOUBLE_EQ( e.potential, 0.125 );
}

TEST( Energy, KineticAndBrokenBonds )
{
    const auto p = two_points();
    SimState s( 2 );
    s.u[1][0] = 0.5;
    s.v[0][0] = 2.0;
    const std::vector<double> mu{ 0.0, 0.0 };
    const auto e = energy( p.cloud, p.bonds, pmb( 1.0, 1.5 ), s, mu );
    EXPECT_DOUBLE_EQ( e.kinetic, 2.0 );
    EXPECT_EQ( e.potential, 0.0 );
}

TEST( Energy, GrowthFlagAndImpenetrability )
{
    const auto p = two_points();
    SimState s( 2 );
    s.v[0][0] = 1.0;
    EXPECT_TRUE( energy( p.cloud, p.bonds, pmb( 1.0, 1.5 ), s, {}, 0.4 ).growth_violation );
    EXPECT_FALSE( energy( p.cloud, p.bonds, pmb( 1.0, 1.5 ), s, {}, 0.5 ).growth_violation );
    s.u[1][0] = -1.0;
    EXPECT_TRUE( energy( p.cloud, p.bonds, NanoMembrane{ 1.0, 1.0, {}, 1.5 }, s ).impenetrability );
}

TEST( Energy, OscillatorNeverGains )
{
    const auto p = two_points();
    const double c = 3.0;
    const double omega = oracle::two_body_omega( c, 1.0, 1.0, 1.0 );
    Simulation sim( p.cloud, p.bonds, pmb( c, 1.5 ), {}, 2 * std::numbers::pi / omega / 200 );
    sim.set_initial( { Vec3{ -0.01 }, Vec3{ 0.01 } }, { Vec3{}, Vec3{} } );
    const double e0 = energy( sim.cloud(), sim.bonds(), sim.model(), sim.state() ).total;
    for ( int k = 0; k < 2000; ++k )
    {
        sim.step();
        const auto e = energy( sim.cloud(), sim.bonds(), sim.model(), sim.state(), {}, e0 );
        ASSERT_FALSE( e.growth_violation ) << "step " << k;
        ASSERT_GE( e.kinetic, 0.0 );
        ASSERT_GE( e.potential, 0.0 );
    }
}

TEST( Damage, Examples )
{
    const auto c = build_grid( 1, Vec3{ 4.0 }, 1.0, 1.0 );
    const auto net = build_bonds( c, { 1.5, PartialVolume::none, 1.0 } );
    EXPECT_EQ( damage_field( net, {} ), std::vector<double>( 4, 0.0 ) );
    std::vector<double> mu( net.num_bonds(), 1.0 );
    EXPECT_EQ( damage_field( net, mu ), std::vector<double>( 4, 0.0 ) );
    // Break bond 1-2 in both directions.
    for ( std::size_t b = net.begin( 1 ); b < net.end( 1 ); ++b )
        if ( net.bonds[b].j == 2 )
        {
            mu[b] = 0.0;
            mu[net.reverse[b]] = 0.0;
        }
    const auto phi = damage_field( net, mu );
    EXPECT_EQ( phi[0], 0.0 );
    EXPECT_DOUBLE_EQ( phi[1], 0.5 );
    EXPECT_DOUBLE_EQ( phi[2], 0.5 );
    EXPECT_EQ( phi[3], 0.0 );
}

TEST( Impenetrability, UndeformedLattice )
{
    const auto c = build_grid( 2, Vec3{ 1.0, 1.0 }, 0.1, 1.0 );
    const auto net = build_bonds( c, { 0.3, PartialVolume::linear, 0.1 } );
    const auto rep = impenetrability_probe( c, net, pmb( 1.0, 0.3 ), SimState( c.size() ), 0.5 );
    EXPECT_NEAR( rep.min_distance, 0.1, 1e-15 );
    EXPECT_TRUE( rep.flagged.empty() );
}

TEST( Impenetrability, NonlinearPEnergyAtExtremeCompression )
{
    const auto p = two_points();
    SimState s( 2 );
    s.u[1][0] = -0.99; // |xi + eta| = 0.01 |xi|
    const KernelModel k = NonlinearP( 1.0, 2.0, 0.5, 1, 1.5 );
    const auto rep = impenetrability_probe( p.cloud, p.bonds, k, s, 0.5 );
    ASSERT_EQ( rep.flagged.size(), 1u );
    const auto& f = rep.flagged[0];
    EXPECT_NEAR( f.distance, 0.01, 1e-15 );
    // Phi = kappa |xi+eta|^p / |xi|^(N + alpha p): the ratio to the
    // undeformed bond is (0.01)^2.
    const double oracle_ratio = std::pow( 0.01, 2.0 );
    EXPECT_NEAR( f.amplification, oracle_ratio, 1e-12 );
    EXPECT_NEAR( f.baseline, 1.0, 1e-15 );
}

TEST( Impenetrability, PmbStaysBounded )
{
    const auto p = two_points();
    SimState s( 2 );
    s.u[1][0] = -0.99;
    const auto rep = impenetrability_probe( p.cloud, p.bonds, pmb( 1.0, 1.5 ), s, 0.5 );
    ASSERT_EQ( rep.flagged.size(), 1u );
    // c (r - r0)^2 / (2 r0) with r0 = 1, r = 0.01.
    EXPECT_NEAR( rep.flagged[0].potential, 0.99 * 0.99 / 2.0, 1e-15 );
    EXPECT_TRUE( std::isinf( rep.flagged[0].amplification ) );
    EXPECT_TRUE( std::isfinite( rep.flagged[0].potential ) );
}

TEST( StretchCompare, AffineFieldsAreExact )
{
    std::mt19937_64 rng( 17 );
    for ( int dim : { 1, 2, 3 } )
    {
        const double h = dim == 3 ? 0.125 : 0.0625;
        const auto c = build_grid( dim, Vec3{ 1.0, 1.0, 1.0 }, h, 1.0 );
        const auto net = build_bonds( c, { 2.5 * h, PartialVolume::linear, h } );
        for ( int trial = 0; trial < 5; ++trial )
        {
            const Mat3 a = random_matrix( rng, dim, 0.2 );
            SimState s( c.size() );
            for ( std::size_t i = 0; i < c.size(); ++i )
                s.u[i] = detail::apply( a, c.positions[i] );
            for ( std::size_t point : { std::size_t( 0 ), c.size() / 2, c.size() - 1 } )
            {
                const auto cmp = stretch_compare( c, net, s, point );
                EXPECT_LE( cmp.max_discrepancy, 1e-12 ) << "dim " << dim;
                for ( int p = 0; p < dim; ++p )
                    for ( int q = 0; q < dim; ++q )
                        EXPECT_NEAR( cmp.gradient[p][q], a[p][q], 1e-12 );
            }
        }
    }
}

TEST( StretchCompare, JumpIsNotRepresentable )
{
    const auto c = build_grid( 1, Vec3{ 1.0 }, 0.05, 1.0 );
    const auto net = build_bonds( c, { 0.15, PartialVolume::linear, 0.05 } );
    SimState s( c.size() );
    for ( std::size_t i = 0; i < c.size(); ++i )
        s.u[i][0] = c.positions[i][0] > 0.5 ? 0.05 : 0.0;
    const auto cmp = stretch_compare( c, net, s, 9 ); // x = 0.475
    EXPECT_GT( cmp.max_discrepancy, 0.1 );
}

TEST( StretchCompare, QuadraticFieldWithinTaylorRemainder )
{
    const double delta = 0.1, h = 0.0125;
    const auto c = build_grid( 1, Vec3{ 1.0 }, h, 1.0 );
    const auto net = build_bonds( c, { delta, PartialVolume::linear, h } );
    SimState s( c.size() );
    for ( std::size_t i = 0; i < c.size(); ++i )
        s.u[i][0] = c.positions[i][0] * c.positions[i][0];
    // max |u''| = 2, remainder bound delta * 2 / 2.
    for ( std::size_t i = 8; i + 8 < c.size(); ++i )
        EXPECT_LE( stretch_compare( c, net, s, i ).max_discrepancy, delta * 2.0 / 2.0 + 1e-12 );
}

TEST( StretchCompare, RankDeficientNeighborhood )
{
    // A 2D strip one cell high: every bond is horizontal.
    const auto c = build_grid( 2, Vec3{ 1.0, 0.1 }, 0.1, 1.0 );
    const auto net = build_bonds( c, { 0.25, PartialVolume::linear, 0.1 } );
    EXPECT_THROW( stretch_compare( c, net, SimState( c.size() ), 4 ), InputError );
}

TEST( Convergence, HorizonSequenceDecreases )
{
    const auto r = delta_convergence( WaveBar{}, { 0.2, 0.1, 0.05 }, 4.0 );
    ASSERT_EQ( r.points.size(), 3u );
    EXPECT_TRUE( r.strictly_decreasing );
    EXPECT_LT( r.points.back().error, 0.02 );
    EXPECT_GT( r.rate, 0.0 );
    for ( const auto& p : r.points )
        EXPECT_GT( p.error, 0.0 );
}

TEST( Convergence, SpacingSequenceDecreasesAtFixedHorizon )
{
    const auto r = m_convergence( WaveBar{}, 0.1, { 2.0, 4.0, 8.0 } );
    EXPECT_TRUE( r.strictly_decreasing );
}

TEST( Convergence, WaveBarModulusMatchesCylindricalCalibration )
{
    // 1/2 sum (c/|xi|) w xi^2 with c = 2E/delta^2 tends to E as m grows.
    const auto s = make_wave_bar( WaveBar{}, 0.1, 64.0 );
    EXPECT_NEAR( s.modulus, 1.0, 0.01 );
}
