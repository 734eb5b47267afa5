#ifndef BBPD_DIAGNOSTICS_HPP
#define BBPD_DIAGNOSTICS_HPP

#include <bbpd/discretization.hpp>
#include <bbpd/dynamics.hpp>
#include <bbpd/kernels.hpp>
#include <bbpd/vec.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace bbpd
{

//---------------------------------------------------------------------------//
// Energy.
//---------------------------------------------------------------------------//
struct EnergyReport
{
    double t = 0.0;
    double kinetic = 0.0;
    double potential = 0.0;
    double total = 0.0;
    double initial_total = 0.0;
    //! total > initial_total (1 + tol)
    bool growth_violation = false;
    //! Some bond potential diverged (coincident deformed points).
    bool impenetrability = false;
};

/*!
  \brief Kinetic energy sum rho V |v|^2 / 2 and potential energy
  1/2 sum_i sum_j mu_ij Phi_ij w_ij V_i (each bond pair counted once).

  Pass the run's first total as `initial_total` to get the growth check;
  without it the report's own total is used.
*/
inline EnergyReport energy( const PointCloud& cloud, const BondNetwork& bonds,
                            const KernelModel& model, const SimState& state,
                            std::span<const double> mu = {},
                            std::optional<double> initial_total = std::nullopt,
                            double tol = 1e-3 )
{
    EnergyReport r;
    r.t = state.t;
    for ( std::size_t i = 0; i < cloud.size(); ++i )
        r.kinetic += 0.5 * cloud.mass( i ) * dot( state.v[i], state.v[i] );

    double pot = 0.0;
    for ( std::size_t i = 0; i < bonds.num_points(); ++i )
    {
        double row = 0.0;
        for ( std::size_t b = bonds.begin( i ); b < bonds.end( i ); ++b )
        {
            const Bond& bond = bonds.bonds[b];
            const double m = mu.empty() ? 1.0 : mu[b];
            if ( m == 0.0 )
                continue;
            const double phi =
                potential( model, bond.xi, state.u[bond.j] - state.u[i] );
            if ( !std::isfinite( phi ) )
                r.impenetrability = true;
            row += m * phi * bond.weight;
        }
        pot += row * cloud.volumes[i];
    }
    r.potential = 0.5 * pot;
    r.total = r.kinetic + r.potential;
    r.initial_total = initial_total.value_or( r.total );
    r.growth_violation =
        r.total > r.initial_total + tol * std::abs( r.initial_total );
    return r;
}

//! Per-point damage 1 - (sum mu w)/(sum w); zero for points without bonds.
inline std::vector<double> damage_field( const BondNetwork& bonds,
                                         std::span<const double> mu )
{
    std::vector<double> phi( bonds.num_points(), 0.0 );
    if ( mu.empty() )
        return phi;
    for ( std::size_t i = 0; i < bonds.num_points(); ++i )
    {
        double intact = 0.0, all = 0.0;
        for ( std::size_t b = bonds.begin( i ); b < bonds.end( i ); ++b )
        {
            intact += mu[b] * bonds.bonds[b].weight;
            all += bonds.bonds[b].weight;
        }
        if ( all > 0.0 )
            phi[i] = std::clamp( 1.0 - intact / all, 0.0, 1.0 );
    }
    return phi;
}

inline double mean( std::span<const double> values )
{
    if ( values.empty() )
        return 0.0;
    double s = 0.0;
    for ( double v : values )
        s += v;
    return s / static_cast<double>( values.size() );
}

//---------------------------------------------------------------------------//
// Impenetrability probe.
//---------------------------------------------------------------------------//
struct CompressedPair
{
    std::size_t i = 0;
    std::size_t j = 0;
    double distance = 0.0;
    double potential = 0.0;
    //! Phi of the same bond with eta = 0.
    double baseline = 0.0;
    //! potential / baseline; +inf when the baseline is zero.
    double amplification = 0.0;
};

struct ImpenetrabilityReport
{
    double min_distance = std::numeric_limits<double>::infinity();
    double threshold = 0.0;
    std::vector<CompressedPair> flagged;
};

/*!
  \brief Smallest deformed distance among bonded pairs, and every pair
  closer than threshold_fraction * h with its potential relative to the
  undeformed bond. Reports only; nothing is enforced.
*/
inline ImpenetrabilityReport
impenetrability_probe( const PointCloud& cloud, const BondNetwork& bonds,
                       const KernelModel& model, const SimState& state,
                       double threshold_fraction )
{
    ImpenetrabilityReport rep;
    double h = cloud.spacing;
    if ( !( h > 0.0 ) )
    {
        h = std::numeric_limits<double>::infinity();
        for ( const auto& b : bonds.bonds )
            h = std::min( h, b.xi_norm );
    }
    rep.threshold = threshold_fraction * h;
    for ( std::size_t i = 0; i < bonds.num_points(); ++i )
        for ( const auto& b : bonds.neighbors( i ) )
        {
            if ( b.j < i )
                continue;
            const Vec3 eta = state.u[b.j] - state.u[i];
            const double d = norm( b.xi + eta );
            rep.min_distance = std::min( rep.min_distance, d );
            if ( d < rep.threshold )
            {
                CompressedPair p;
                p.i = i;
                p.j = b.j;
                p.distance = d;
                p.potential = potential( model, b.xi, eta );
                p.baseline = potential( model, b.xi, Vec3{} );
                if ( p.baseline != 0.0 )
                    p.amplification = p.potential / p.baseline;
                else
                    p.amplification = p.potential == 0.0
                                          ? 1.0
                                          : std::numeric_limits<double>::infinity();
                rep.flagged.push_back( p );
            }
        }
    return rep;
}

//---------------------------------------------------------------------------//
// Local versus nonlocal fibre stretch.
//---------------------------------------------------------------------------//
using Mat3 = std::array<std::array<double, 3>, 3>;

struct StretchRow
{
    std::size_t j = 0;
    //! (|xi + eta| - |xi|) / |xi|
    double nonlocal = 0.0;
    //! e_R . (grad u) e_R
    double linear = 0.0;
    //! |(I + grad u) e_R| - 1
    double full = 0.0;
};

struct StretchComparison
{
    Mat3 gradient{};
    std::vector<StretchRow> rows;
    //! max |nonlocal - full| over the bonds of the point
    double max_discrepancy = 0.0;
};

namespace detail
{

//! Solve the dim x dim SPD system M x = b by Cholesky; false if singular.
inline bool solve_spd( Mat3 m, std::array<double, 3>& b, int dim )
{
    double scale = 0.0;
    for ( int a = 0; a < dim; ++a )
        scale = std::max( scale, std::abs( m[a][a] ) );
    if ( !( scale > 0.0 ) )
        return false;
    for ( int k = 0; k < dim; ++k )
    {
        double d = m[k][k];
        for ( int p = 0; p < k; ++p )
            d -= m[k][p] * m[k][p];
        if ( !( d > 1e-12 * scale ) )
            return false;
        m[k][k] = std::sqrt( d );
        for ( int i = k + 1; i < dim; ++i )
        {
            double s = m[i][k];
            for ( int p = 0; p < k; ++p )
                s -= m[i][p] * m[k][p];
            m[i][k] = s / m[k][k];
        }
    }
    for ( int i = 0; i < dim; ++i )
    {
        double s = b[i];
        for ( int p = 0; p < i; ++p )
            s -= m[i][p] * b[p];
        b[i] = s / m[i][i];
    }
    for ( int i = dim - 1; i >= 0; --i )
    {
        double s = b[i];
        for ( int p = i + 1; p < dim; ++p )
            s -= m[p][i] * b[p];
        b[i] = s / m[i][i];
    }
    return true;
}

inline Vec3 apply( const Mat3& g, const Vec3& x )
{
    Vec3 y;
    for ( int a = 0; a < 3; ++a )
        y[a] = g[a][0] * x[0] + g[a][1] * x[1] + g[a][2] * x[2];
    return y;
}

} // namespace detail

/*!
  \brief Compare each bond's nonlocal stretch at `point` with the stretch
  predicted by a weighted least-squares displacement gradient.

  Throws InputError when the bond directions do not span the space.
*/
inline StretchComparison stretch_compare( const PointCloud& cloud,
                                          const BondNetwork& bonds,
                                          const SimState& state,
                                          std::size_t point )
{
    const int dim = cloud.dim;
    const auto nbrs = bonds.neighbors( point );

    Mat3 m{};
    Mat3 rhs{}; // rhs[c] = sum w eta_c xi
    for ( const auto& b : nbrs )
    {
        const Vec3 eta = state.u[b.j] - state.u[point];
        for ( int p = 0; p < dim; ++p )
        {
            for ( int q = 0; q < dim; ++q )
                m[p][q] += b.weight * b.xi[p] * b.xi[q];
            for ( int c = 0; c < dim; ++c )
                rhs[c][p] += b.weight * eta[c] * b.xi[p];
        }
    }

    StretchComparison out;
    for ( int c = 0; c < dim; ++c )
    {
        std::array<double, 3> row = rhs[c];
        if ( !detail::solve_spd( m, row, dim ) )
            throw InputError( "stretch_compare: neighbourhood of point " +
                              std::to_string( point ) +
                              " is rank deficient" );
        for ( int p = 0; p < dim; ++p )
            out.gradient[c][p] = row[p];
    }

    for ( const auto& b : nbrs )
    {
        const Vec3 eta = state.u[b.j] - state.u[point];
        const Vec3 e = b.xi / b.xi_norm;
        StretchRow r;
        r.j = b.j;
        r.nonlocal = ( norm( b.xi + eta ) - b.xi_norm ) / b.xi_norm;
        const Vec3 ge = detail::apply( out.gradient, e );
        r.linear = dot( e, ge );
        r.full = norm( e + ge ) - 1.0;
        out.max_discrepancy =
            std::max( out.max_discrepancy, std::abs( r.nonlocal - r.full ) );
        out.rows.push_back( r );
    }
    return out;
}

//---------------------------------------------------------------------------//
// Horizon convergence on a periodic wave bar.
//---------------------------------------------------------------------------//

//! Periodic 1D bar carrying one travelling sine wavelength.
struct WaveBar
{
    double length = 1.0;
    double amplitude = 1e-3;
    double density = 1.0;
    //! Target modulus for the cylindrical calibration c = 2E/delta^2.
    double modulus = 1.0;
    MicroModulusFamily micromodulus = MicroModulusFamily::cylindrical;
    PartialVolume partial_volume = PartialVolume::linear;
    double safety = 0.5;
    //! Run time in wave periods L / c.
    double periods = 1.0;
};

struct WaveBarSetup
{
    PointCloud cloud;
    BondNetwork bonds;
    KernelModel model;
    //! Modulus of the linearized network, 1/2 sum_j C_j w_j xi_j^2.
    double modulus = 0.0;
    double wave_speed = 0.0;
    double wavenumber = 0.0;
};

inline WaveBarSetup make_wave_bar( const WaveBar& bar, double delta, double m )
{
    WaveBarSetup s;
    const double h = delta / m;
    s.cloud = build_grid( 1, Vec3{ bar.length }, h, bar.density, { true, false, false } );
    s.bonds = build_bonds( s.cloud, { delta, bar.partial_volume, h } );
    PMB pmb;
    pmb.micromodulus = { bar.micromodulus, 2.0 * bar.modulus / ( delta * delta ), delta };
    s.model = pmb;
    double e = 0.0;
    for ( const auto& b : s.bonds.neighbors( 0 ) )
        e += 0.5 * bond_stiffness( s.model, b.xi_norm ) * b.weight * b.xi_norm * b.xi_norm;
    s.modulus = e;
    s.wave_speed = std::sqrt( e / bar.density );
    s.wavenumber = 2.0 * std::numbers::pi / bar.length;
    return s;
}

//! Classical travelling wave A sin(k (x - c t)).
inline double wave_bar_exact( const WaveBar& bar, const WaveBarSetup& s, double x,
                              double t )
{
    return bar.amplitude * std::sin( s.wavenumber * ( x - s.wave_speed * t ) );
}

/*!
  Relative L2 error of the nonlocal solution against the classical
  travelling wave after `bar.periods` periods.
*/
inline double wave_bar_error( const WaveBar& bar, double delta, double m )
{
    WaveBarSetup s = make_wave_bar( bar, delta, m );
    const double t_end = bar.periods * bar.length / s.wave_speed;
    const double dt_max = stable_dt( s.cloud, s.bonds, s.model, bar.safety );
    const auto steps = static_cast<std::size_t>( std::ceil( t_end / dt_max ) );
    const double dt = t_end / static_cast<double>( steps );

    std::vector<Vec3> u0( s.cloud.size() ), v0( s.cloud.size() );
    for ( std::size_t i = 0; i < s.cloud.size(); ++i )
    {
        const double x = s.cloud.positions[i][0];
        u0[i][0] = wave_bar_exact( bar, s, x, 0.0 );
        v0[i][0] = -bar.amplitude * s.wavenumber * s.wave_speed *
                   std::cos( s.wavenumber * x );
    }
    Simulation sim( s.cloud, s.bonds, s.model, ExternalLoad::none(), dt );
    sim.set_initial( std::move( u0 ), std::move( v0 ) );
    for ( std::size_t k = 0; k < steps; ++k )
        sim.step();

    double err = 0.0, ref = 0.0;
    for ( std::size_t i = 0; i < s.cloud.size(); ++i )
    {
        const double exact =
            wave_bar_exact( bar, s, s.cloud.positions[i][0], sim.state().t );
        const double d = sim.state().u[i][0] - exact;
        err += s.cloud.volumes[i] * d * d;
        ref += s.cloud.volumes[i] * exact * exact;
    }
    return std::sqrt( err / ref );
}

struct ConvergencePoint
{
    double delta = 0.0;
    double spacing = 0.0;
    double error = 0.0;
};

struct ConvergenceResult
{
    std::vector<ConvergencePoint> points;
    //! Least-squares slope of log(error) against log(parameter).
    double rate = 0.0;
    bool strictly_decreasing = true;
};

namespace detail
{

inline double log_slope( const std::vector<double>& x, const std::vector<double>& y )
{
    const double n = static_cast<double>( x.size() );
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for ( std::size_t k = 0; k < x.size(); ++k )
    {
        const double lx = std::log( x[k] ), ly = std::log( y[k] );
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double den = n * sxx - sx * sx;
    return den != 0.0 ? ( n * sxy - sx * sy ) / den : 0.0;
}

inline void finish( ConvergenceResult& r, bool by_spacing )
{
    std::vector<double> x, y;
    for ( std::size_t k = 0; k < r.points.size(); ++k )
    {
        x.push_back( by_spacing ? r.points[k].spacing : r.points[k].delta );
        y.push_back( r.points[k].error );
        if ( k > 0 && !( r.points[k].error < r.points[k - 1].error ) )
            r.strictly_decreasing = false;
    }
    if ( r.points.size() >= 2 )
        r.rate = log_slope( x, y );
}

} // namespace detail

/*!
  \brief Error against the classical solution as the horizon shrinks with a
  fixed ratio m = delta / h. Non-monotone sequences are reported as such.
*/
inline ConvergenceResult delta_convergence( const WaveBar& bar,
                                            const std::vector<double>& deltas,
                                            double m )
{
    ConvergenceResult r;
    for ( double d : deltas )
        r.points.push_back( { d, d / m, wave_bar_error( bar, d, m ) } );
    detail::finish( r, false );
    return r;
}

//! Error as h shrinks at a fixed horizon.
inline ConvergenceResult m_convergence( const WaveBar& bar, double delta,
                                        const std::vector<double>& ms )
{
    ConvergenceResult r;
    for ( double m : ms )
        r.points.push_back( { delta, delta / m, wave_bar_error( bar, delta, m ) } );
    detail::finish( r, true );
    return r;
}

} // namespace bbpd

#endif // BBPD_DIAGNOSTICS_HPP
